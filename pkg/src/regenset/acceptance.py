"""The eleven acceptance criteria, runnable from the CLI and from the test suite.

Each ``criterion_N(quick=False)`` returns a :class:`CriterionResult`.  Full
mode uses the stated sample sizes, tolerances and runtime budgets.  Quick
mode shrinks the sample sizes by about an order of magnitude, widens Monte
Carlo tolerances by the matching square root and ignores runtime budgets;
exact criteria keep their exact checks.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betainc

from . import localtime, products, toyps
from ._rng import stream
from .fractal import cantor_set, estimate_dimension
from .sampler import (
    EXPONENTIAL,
    PINNED,
    StableParams,
    default_step,
    sample_gapsets,
    sample_path,
    to_gapset,
    validate_stable_sampler,
)
from .sets import avoids, meets, quantize

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_line"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = math.inf
    quick: bool = False

    def to_dict(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "detail": self.detail,
            "data": self.data,
            "budget_s": self.budget,
            "quick": self.quick,
        }


def format_line(r: CriterionResult) -> str:
    mark = "PASS" if r.passed else "FAIL"
    return f"criterion {r.number:>2} [{mark}] {r.title}: {r.detail} ({r.seconds:.1f}s)"


def _widen(tol: float, quick: bool, factor: float = 10.0) -> float:
    return tol * math.sqrt(factor) if quick else tol


# -- 1 -------------------------------------------------------------------------


def criterion_1(quick: bool = False, seed: int = 1) -> dict:
    n = 100_000 if quick else 1_000_000
    worst = 0.0
    rows = []
    for j, alpha in enumerate((0.25, 0.5, 0.75)):
        for r in validate_stable_sampler(alpha, [0.5, 1.0, 2.0, 4.0], n, stream(seed, 1, j)):
            rows.append({"alpha": alpha, **r})
            worst = max(worst, abs(r["z"]))
    return {
        "passed": worst < 4.0,
        "detail": f"max |z| = {worst:.2f} over {len(rows)} (alpha, lambda) pairs at n = {n}",
        "data": {"n": n, "rows": rows, "max_abs_z": worst},
    }


# -- 2 -------------------------------------------------------------------------


def criterion_2(quick: bool = False, seed: int = 2) -> dict:
    trials = 10_000 if quick else 100_000
    tol = _widen(0.01, quick)
    s_values = (0.0625, 0.25, 0.5)
    params = StableParams(1.0)
    delta = 1e-4
    h = default_step(params, delta)
    hits = np.zeros(len(s_values))
    for i in range(trials):
        Z = to_gapset(sample_path(params, PINNED, 1.0, h, stream(seed, 2, i)), 1.0, delta)
        hits += [avoids(Z, s, 1.0) for s in s_values]
    est = hits / trials
    target = [2.0 / math.pi * math.asin(math.sqrt(s)) for s in s_values]
    err = [abs(a - b) for a, b in zip(est, target)]
    return {
        "passed": max(err) <= tol,
        "detail": "max |P - arcsine| = {:.4f} (tol {:.3f}); P(avoid [0.25,1]) = {:.4f}".format(
            max(err), tol, est[1]
        ),
        "data": {"trials": trials, "s": list(s_values), "estimate": est.tolist(), "target": target},
    }


# -- 3 -------------------------------------------------------------------------


def criterion_3(quick: bool = False, seed: int = 3) -> dict:
    samples = 50 if quick else 200
    tol = _widen(0.05, quick, 4.0)
    rows = []
    for j, d in enumerate((0.5, 1.0, 1.5)):
        Zs = sample_gapsets(StableParams(d), PINNED, 1e-6, samples, seed, key=(3, j))
        slopes = np.array([estimate_dimension(Z, 1e-2, 4e-6, levels=12).slope for Z in Zs])
        rows.append(
            {
                "d": d,
                "target": 1 - d / 2,
                "mean": float(slopes.mean()),
                "se": float(slopes.std(ddof=1) / math.sqrt(samples)),
            }
        )
    err = max(abs(r["mean"] - r["target"]) for r in rows)
    return {
        "passed": err <= tol,
        "detail": ", ".join(f"d={r['d']:g}: {r['mean']:.3f} (target {r['target']:.2f})" for r in rows)
        + f"; max error {err:.3f} (tol {tol:.2f})",
        "data": {"samples": samples, "delta": 1e-6, "eps": [1e-2, 4e-6], "levels": 12, "rows": rows},
    }


# -- 4 -------------------------------------------------------------------------

LADDER_SUPER = (1e-2, 1e-5, 1e-8)
LADDER_SUB = (1e-3, 1e-4, 1e-5)
STABLE_EXPONENT = 0.05


def criterion_4(quick: bool = False, seed: int = 4) -> dict:
    trials_a = 2000 if quick else 10_000
    trials_b = 1000 if quick else 2000
    a = products.intersection_experiment(1.2, 1.2, trials_a, LADDER_SUPER, seed=seed)
    b = products.intersection_experiment(0.5, 0.5, trials_b, LADDER_SUB, seed=seed)
    ratios = a.rung_ratios
    ok_a = all(r >= 2.0 for r in ratios) and a.extrapolated < 0.01
    dim = b.dim_intersection or {}
    dim_tol = _widen(0.07, quick, 2.0)
    ok_b = (
        all(lo > 0 for lo, _ in b.ci)
        and abs(b.exponent) <= _widen(STABLE_EXPONENT, quick, 2.0)
        and abs(dim.get("slope", math.nan) - 0.5) <= dim_tol
    )
    detail = (
        "(a) rung ratios {} extrapolated {:.4f}; (b) rates {} exponent {:+.3f} dim {:.3f}".format(
            "/".join(f"{r:.2f}" for r in ratios),
            a.extrapolated,
            "/".join(f"{r:.3f}" for r in b.rates),
            b.exponent,
            dim.get("slope", math.nan),
        )
    )
    return {"passed": ok_a and ok_b, "detail": detail, "data": {"a": a.to_dict(), "b": b.to_dict()}}


# -- 5 -------------------------------------------------------------------------


def criterion_5(quick: bool = False, seed: int = 5) -> dict:
    trials = 1000 if quick else 10_000
    r = products.shiga_watanabe_check(0.75, 0.75, trials, seed=seed)
    return {
        "passed": r["max_abs_z"] < 4.0,
        "detail": f"max |z| = {r['max_abs_z']:.2f} over {len(r['intervals'])} intervals at {trials} trials",
        "data": r,
    }


# -- 6, 7 ----------------------------------------------------------------------

PAIR_DIMS = ((0.5, 0.5), (0.5, 1.0), (1.0, 1.0), (1.0, 1.5), (1.5, 1.5), (0.5, 1.5), (1.2, 1.2), (0.8, 1.6))
QUANT_BITS = 20


def _pair(seed: int, i: int, key: int) -> products.PairSample:
    d1, d2 = PAIR_DIMS[i % len(PAIR_DIMS)]
    return products.sample_pair(d1, d2, 1e-4, seed, i, EXPONENTIAL, key=(key,))


def criterion_6(quick: bool = False, seed: int = 6) -> dict:
    """Limit identity and monotonicity of the dyadic partition profile.

    Pairs are quantized to the ``2**-20`` grid, so disjoint pairs are at least
    ``2**-20`` apart and depth 24 resolves every pair exactly.  The profile is
    checked for monotonicity in both directions: the stated clause asks for
    nonincreasing profiles, while refinement can only turn failing intervals
    into avoided ones, so profiles of disjoint nonempty pairs rise from 0 to 1.
    """
    pairs = 1000 if quick else 10_000
    identity = nonincreasing = nondecreasing = disjoint = 0
    for i in range(pairs):
        p = _pair(seed, i, 6)
        q = products.PairSample(quantize(p.z1, QUANT_BITS), quantize(p.z2, QUANT_BITS), p.params)
        prof = products.partition_limit_profile(q, products.MAX_DEPTH)
        empty = int(not meets(q.z1, q.z2))
        disjoint += empty
        identity += int(prof[-1] == empty)
        steps = np.diff(prof)
        nonincreasing += int(np.all(steps <= 0))
        nondecreasing += int(np.all(steps >= 0))
    ok_identity = identity == pairs
    ok_stated = nonincreasing == pairs
    return {
        "passed": ok_identity and ok_stated,
        "detail": (
            f"limit identity {identity}/{pairs}; nonincreasing {nonincreasing}/{pairs}; "
            f"nondecreasing {nondecreasing}/{pairs} ({disjoint} disjoint pairs)"
        ),
        "data": {
            "pairs": pairs,
            "quantize_bits": QUANT_BITS,
            "k_max": products.MAX_DEPTH,
            "identity": identity,
            "nonincreasing": nonincreasing,
            "nondecreasing": nondecreasing,
            "disjoint": disjoint,
        },
    }


def criterion_7(quick: bool = False, seed: int = 7) -> dict:
    pairs = 1000 if quick else 10_000
    agree = 0
    for i in range(pairs):
        agree += int(products.hatted_limit_equivalence(_pair(seed, i, 7), products.MAX_DEPTH))
    return {
        "passed": agree == pairs,
        "detail": f"raw and limit-point partition limits agree on {agree}/{pairs} sampled pairs",
        "data": {"pairs": pairs, "agree": agree},
    }


# -- 8 -------------------------------------------------------------------------


CHAIN_CELLS = (1, 2, 3, 4, 5, 6)
GRAM_CELLS = (1, 2, 3, 4)


def criterion_8(quick: bool = False, seed: int = 8) -> dict:
    instances = 200 if quick else 1000
    res = toyps.product_checks(instances, seed=seed)
    rng = stream(seed, 8)
    chain_ok = True
    for n in CHAIN_CELLS:
        law = toyps.random_law(n, rng)
        chain = toyps.spatial_projection_chain(law, law, n)
        chain_ok &= bool(np.array_equal(chain[-1], toyps.disjoint_indicator(n)))
        chain_ok &= all(bool(np.all(a <= b)) for a, b in zip(chain, chain[1:]))
    gram = max(
        toyps.gram_projection_check(toyps.random_law(n, rng), toyps.random_law(n, rng)) for n in GRAM_CELLS
    )
    worst = max(res["isometry"], res["associativity"], res["unit"])
    return {
        "passed": worst < 1e-12 and chain_ok and gram < 1e-8,
        "detail": (
            f"isometry {res['isometry']:.1e}, associativity {res['associativity']:.1e}, "
            f"unit {res['unit']:.1e}; chain = indicator for n <= 6: {chain_ok}; "
            f"Gram deviation {gram:.1e}"
        ),
        "data": {**res, "chain_exhaustive": chain_ok, "gram_deviation": gram},
    }


# -- 9 -------------------------------------------------------------------------


def criterion_9(quick: bool = False, seed: int = 9) -> dict:
    n_paths = 1000 if quick else 10_000
    h = 1e-3
    alpha = 0.5
    mc = localtime.moment_check(alpha, [0.1, 0.2, 0.4, 0.6, 0.8, 1.0], n_paths, h, seed)
    target = mc["target"][-1]
    mean, se = mc["mean"][-1], mc["se"][-1]
    omean, ose = mc["oracle_mean"][-1], mc["oracle_se"][-1]
    rel = abs(mean - target) / target
    z_oracle = (mean - omean) / math.hypot(se, ose)
    rng = stream(seed, 9)
    params = StableParams.from_alpha(alpha)
    worst = 0.0
    support = True
    splits = 200 if quick else 1000
    for i in range(splits):
        path = sample_path(params, PINNED, 1.0, h, stream(seed, 9, i))
        worst = max(worst, localtime.additivity_check(path, float(rng.uniform(0.0, 1.0))))
        support &= localtime.support_check(path, 1e-4)
    ok = rel <= _widen(0.02, quick) and abs(z_oracle) < 4.0 and worst <= h and support
    return {
        "passed": ok,
        "detail": (
            f"E[L1] = {mean:.4f} vs {target:.4f} ({100 * rel:.2f}%), finer-grid oracle {omean:.4f} "
            f"(z {z_oracle:+.2f}); growth slope {mc['growth_slope']:.3f}; "
            f"max additivity residual {worst:.1e}; support {support}"
        ),
        "data": {**mc, "additivity_max": worst, "support": support, "z_oracle": z_oracle},
    }


# -- 10 ------------------------------------------------------------------------


def criterion_10(quick: bool = False, seed: int = 10) -> dict:
    trials = 50 if quick else 200
    r = products.union_recovery(1.5, 0.5, trials, 64, seed=seed)
    return {
        "passed": r["mean_accuracy"] >= 0.9,
        "detail": f"mean accuracy {r['mean_accuracy']:.3f} over {r['scored_trials']} scored trials",
        "data": r,
    }


# -- 11 ------------------------------------------------------------------------


def criterion_11(quick: bool = False, seed: int = 0) -> dict:
    Z = cantor_set(7)
    est = estimate_dimension(Z, 0.1, 4.0 * Z.resolution)
    target = math.log(2) / math.log(3)
    return {
        "passed": abs(est.slope - target) <= 0.03,
        "detail": f"slope {est.slope:.4f} vs log2/log3 = {target:.4f}",
        "data": est.to_dict(),
    }


CRITERIA: dict[int, tuple[str, Callable[..., dict], float]] = {
    1: ("stable sampler fidelity", criterion_1, 60.0),
    2: ("arcsine law", criterion_2, 300.0),
    3: ("dimension formula", criterion_3, 600.0),
    4: ("intersection dichotomy", criterion_4, 900.0),
    5: ("Shiga-Watanabe composition", criterion_5, 600.0),
    6: ("partition-limit identity", criterion_6, 120.0),
    7: ("unit-independence shadow", criterion_7, 120.0),
    8: ("toy product system", criterion_8, 300.0),
    9: ("local time", criterion_9, 300.0),
    10: ("union recovery", criterion_10, 600.0),
    11: ("Cantor calibration", criterion_11, 1.0),
}


def run_criterion(number: int, quick: bool = False) -> CriterionResult:
    title, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    out = fn(quick=quick)
    seconds = time.perf_counter() - t0
    passed = bool(out["passed"])
    detail = out["detail"]
    if not quick and seconds > budget:
        passed = False
        detail += f"; over the {budget:g}s budget"
    return CriterionResult(number, title, passed, detail, out["data"], seconds, budget, quick)


def run_all(quick: bool = False, only=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for k in sorted(only or CRITERIA):
        r = run_criterion(k, quick)
        if echo is not None:
            echo(format_line(r))
        results.append(r)
    return results
