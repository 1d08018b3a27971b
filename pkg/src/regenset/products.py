"""Pairs of independent regenerative sets and the experiments run on them.

The partition limit tests, interval by interval of a dyadic partition, whether
one of the two sets avoids the closed interval.  Finer cells are easier to
avoid, so the indicator can only switch on with depth, and in the limit it
becomes ``1{Z1 ∩ Z2 = ∅}``.
The remaining experiments sample pairs at finite resolution: the intersection
dichotomy over a ladder of resolutions, the norm composition of two Bessel
paths, and recovery of the thinner set from the union by local dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import bessel
from ._rng import stream
from .errors import ParameterError, VacuousTestError
from .fractal import estimate_dimension, local_dimension_profile
from .runner import map_ranges
from .sampler import (
    EXPONENTIAL,
    PINNED,
    DelayMode,
    StableParams,
    default_step,
    sample_path,
    to_gapset,
)
from .sets import GapSet, avoids, intersect, limit_points, meets, union

__all__ = [
    "MAX_DEPTH",
    "PairSample",
    "DichotomyReport",
    "sample_pair",
    "partition_limit",
    "partition_limit_profile",
    "hatted_limit_equivalence",
    "wilson_interval",
    "intersection_experiment",
    "shiga_watanabe_check",
    "union_recovery",
    "SW_INTERVALS",
    "CRITICAL_BAND",
]

MAX_DEPTH = 24
CRITICAL_BAND = 0.1
SW_INTERVALS = ((0.05, 0.1), (0.1, 0.3), (0.25, 1.0), (0.5, 1.0), (0.3, 0.6), (0.7, 0.9))

# stream prefixes, one per experiment, so no two experiments share draws
_KEY_PAIR = 1
_KEY_SW = 2
_KEY_RECOVER = 3


@dataclass(frozen=True)
class PairSample:
    z1: GapSet
    z2: GapSet
    params: tuple[float, float] = (math.nan, math.nan)
    provenance: dict = field(default_factory=dict)

    def swapped(self) -> "PairSample":
        return PairSample(self.z2, self.z1, self.params[::-1], dict(self.provenance, swapped=True))


def _sample_set(params, mode, delta, step, seed, key, horizon=1.0) -> GapSet:
    path = sample_path(params, mode, horizon, step, stream(seed, *key))
    return to_gapset(path, horizon, delta)


def sample_pair(
    d1: float,
    d2: float,
    delta: float,
    seed: int,
    trial: int,
    mode: DelayMode = EXPONENTIAL,
    key: Sequence[int] = (_KEY_PAIR,),
) -> PairSample:
    """Independent sets at ``d1`` and ``d2`` from streams ``(seed, *key, trial, 0/1)``."""
    p1, p2 = StableParams(d1), StableParams(d2)
    z1 = _sample_set(p1, mode, delta, default_step(p1, delta), seed, (*key, trial, 0))
    z2 = _sample_set(p2, mode, delta, default_step(p2, delta), seed, (*key, trial, 1))
    prov = {"seed": seed, "key": list(key), "trial": trial, "mode": str(mode), "delta": delta}
    return PairSample(z1, z2, (d1, d2), prov)


# -- partition limits ----------------------------------------------------------


def _cell_ranges(Z: GapSet, k: int) -> tuple[np.ndarray, np.ndarray]:
    # closed cells [j 2^-k, (j+1) 2^-k]; a component [a, b] meets cells ceil(a 2^k) - 1 .. floor(b 2^k)
    q = float(2**k)
    lo = np.maximum(np.ceil(Z.starts * q) - 1.0, 0.0)
    hi = np.minimum(np.floor(Z.ends * q), q - 1.0)
    return lo, hi


def _shares_cell(z1: GapSet, z2: GapSet, k: int) -> bool:
    if z1.is_empty or z2.is_empty:
        return False
    lo1, hi1 = _cell_ranges(z1, k)
    lo2, hi2 = _cell_ranges(z2, k)
    # hi1 and lo1 are nondecreasing, so the first range ending at or after lo2 has the smallest start
    i = np.searchsorted(hi1, lo2, side="left")
    ok = i < hi1.size
    return bool(np.any(lo1[i[ok]] <= hi2[ok]))


def _check_depth(k: int) -> None:
    if k < 0 or k > MAX_DEPTH:
        raise ParameterError(f"depth must lie in [0, {MAX_DEPTH}]")


def partition_limit(pair: PairSample, depth: int) -> int:
    """1 iff every closed dyadic interval of length ``2**-depth`` is avoided by ``z1`` or by ``z2``."""
    _check_depth(depth)
    return int(not _shares_cell(pair.z1, pair.z2, depth))


def partition_limit_profile(pair: PairSample, k_max: int = MAX_DEPTH) -> list[int]:
    """``partition_limit`` at depths ``0 .. k_max``."""
    _check_depth(k_max)
    return [partition_limit(pair, k) for k in range(k_max + 1)]


def hatted_limit_equivalence(pair: PairSample, k_max: int = MAX_DEPTH) -> bool:
    """Whether the raw pair and the pair of limit-point sets have the same partition limit."""
    hatted = PairSample(limit_points(pair.z1), limit_points(pair.z2), pair.params, pair.provenance)
    return partition_limit(pair, k_max) == partition_limit(hatted, k_max)


# -- intersection dichotomy ----------------------------------------------------


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


@dataclass
class DichotomyReport:
    d1: float
    d2: float
    trials: int
    deltas: list[float]
    nonempty: list[int]
    rates: list[float]
    ci: list[tuple[float, float]]
    mode: str
    seed: int
    exponent: float
    extrapolated: float
    dim_intersection: dict | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def rung_ratios(self) -> list[float]:
        return [a / b if b > 0 else math.inf for a, b in zip(self.rates[:-1], self.rates[1:])]

    def to_dict(self) -> dict:
        return {
            "d1": self.d1,
            "d2": self.d2,
            "trials": self.trials,
            "mode": self.mode,
            "seed": self.seed,
            "ladder": [
                {"delta": d, "nonempty": k, "rate": r, "ci_lo": c[0], "ci_hi": c[1]}
                for d, k, r, c in zip(self.deltas, self.nonempty, self.rates, self.ci)
            ],
            "rung_ratios": self.rung_ratios,
            "exponent": self.exponent,
            "extrapolated": self.extrapolated,
            "dim_intersection": self.dim_intersection,
            "flags": list(self.flags),
        }

    def csv_rows(self) -> list[dict]:
        return [
            {"delta": d, "rate": r, "ci_lo": c[0], "ci_hi": c[1]}
            for d, r, c in zip(self.deltas, self.rates, self.ci)
        ]


def _power_fit(deltas: np.ndarray, rates: np.ndarray) -> tuple[float, float]:
    """Exponent ``b`` of ``rate ≈ A delta**b`` and the rate one rung past the finest."""
    pos = rates > 0
    if pos.sum() < 2:
        return (math.nan, float(rates[-1]))
    x, y = np.log(deltas[pos]), np.log(rates[pos])
    b, a = np.polyfit(x, y, 1)
    step = float(np.mean(np.diff(np.log(deltas))))
    x_next = math.log(deltas[-1]) + step
    return float(b), float(math.exp(a + b * x_next))


def _dichotomy_chunk(a, b, *, d1, d2, deltas, mode, seed, key, dim_eps):
    p1, p2 = StableParams(d1), StableParams(d2)
    finest = deltas[-1]
    h1, h2 = default_step(p1, finest), default_step(p2, finest)
    hits = np.zeros(len(deltas), dtype=np.int64)
    slopes = []
    log_counts = []
    for i in range(a, b):
        x1 = sample_path(p1, mode, 1.0, h1, stream(seed, *key, i, 0))
        x2 = sample_path(p2, mode, 1.0, h2, stream(seed, *key, i, 1))
        for r, delta in enumerate(deltas):
            z1, z2 = to_gapset(x1, 1.0, delta), to_gapset(x2, 1.0, delta)
            if r == len(deltas) - 1 and dim_eps is not None:
                z = intersect(z1, z2)
                if not z.is_empty:
                    hits[r] += 1
                    est = estimate_dimension(z, dim_eps[0], dim_eps[1], dim_eps[2])
                    slopes.append(est.raw_slope)
                    log_counts.append(np.log([n for _, n in est.scales]))
            elif meets(z1, z2):
                hits[r] += 1
    return hits, slopes, log_counts


def intersection_experiment(
    d1: float,
    d2: float,
    trials: int,
    delta_ladder: Sequence[float],
    seed: int = 0,
    mode: DelayMode = EXPONENTIAL,
    dim_range: tuple[float, float] | None = None,
    dim_levels: int = 10,
    workers: int | None = None,
    key: Sequence[int] = (_KEY_PAIR,),
) -> DichotomyReport:
    """Rate of ``Z1 ∩ Z2 ≠ ∅`` per resolution, from one pair of paths per trial.

    Each trial's two subordinator paths are sampled once at a step fine enough
    for the finest rung and coarsened to every ``delta`` of the ladder, so the
    rates are monotone trial by trial.  For ``d1 + d2 < 2`` the nonempty
    intersections at the finest rung also get a box-dimension estimate over
    ``dim_range`` (default ``[0.1, 4 * finest]``); the ensemble slope is the
    mean of per-sample slopes.
    """
    for d in (d1, d2):
        StableParams(d)
    deltas = [float(x) for x in delta_ladder]
    if len(deltas) < 2:
        raise ParameterError("the delta ladder needs at least two rungs")
    if any(not b < a for a, b in zip(deltas[:-1], deltas[1:])):
        raise ParameterError("the delta ladder must be strictly decreasing")
    if trials < 1000:
        raise ParameterError("need at least 1000 trials per rung")
    subcritical = d1 + d2 < 2.0
    dim_eps = None
    if subcritical:
        lo_hi = dim_range or (0.1, 4.0 * deltas[-1])
        dim_eps = (lo_hi[0], lo_hi[1], dim_levels)
    fn = partial(
        _dichotomy_chunk, d1=d1, d2=d2, deltas=deltas, mode=mode, seed=seed, key=tuple(key), dim_eps=dim_eps
    )
    parts = map_ranges(fn, trials, workers)
    hits = sum(p[0] for p in parts)
    slopes = [s for p in parts for s in p[1]]
    logs = [c for p in parts for c in p[2]]
    rates = hits / trials
    b, extra = _power_fit(np.array(deltas), rates)
    flags = []
    if abs(d1 + d2 - 2.0) <= CRITICAL_BAND + 1e-12:
        flags.append("near-critical")
    dim = None
    if subcritical and slopes:
        s = np.clip(np.array(slopes), 0.0, 1.0)
        eps = np.geomspace(dim_eps[0], dim_eps[1], dim_eps[2])
        dim = {
            "slope": float(s.mean()),
            "stderr": float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else math.inf,
            "samples": int(s.size),
            "scales": [[float(e), float(math.exp(m))] for e, m in zip(eps, np.mean(logs, axis=0))],
        }
    return DichotomyReport(
        d1=d1,
        d2=d2,
        trials=trials,
        deltas=deltas,
        nonempty=[int(h) for h in hits],
        rates=[float(r) for r in rates],
        ci=[wilson_interval(int(h), trials) for h in hits],
        mode=str(mode),
        seed=seed,
        exponent=b,
        extrapolated=extra,
        dim_intersection=dim,
        flags=flags,
    )


# -- Shiga-Watanabe ------------------------------------------------------------


def _sw_chunk(a, b, *, d1, d2, intervals, dt, delta, seed, key, batch):
    comp = np.zeros(len(intervals), dtype=np.int64)
    direct = np.zeros(len(intervals), dtype=np.int64)
    params = StableParams(d1 + d2)
    h = default_step(params, delta)
    for b0 in range(a, b, batch):
        ids = range(b0, min(b0 + batch, b))
        x1 = bessel.integrate_besq_batch(d1, 0.0, 1.0, dt, [stream(seed, *key, i, 0) for i in ids])
        x2 = bessel.integrate_besq_batch(d2, 0.0, 1.0, dt, [stream(seed, *key, i, 1) for i in ids])
        y = np.hypot(x1, x2, out=x1)
        del x2
        for row, i in enumerate(ids):
            z = bessel.zero_set_from_values(y[row], d1 + d2, dt, 1.0, 0.0, delta)
            comp += [avoids(z, s, t) for s, t in intervals]
            w = _sample_set(params, PINNED, delta, h, seed, (*key, i, 2))
            direct += [avoids(w, s, t) for s, t in intervals]
    return comp, direct


def shiga_watanabe_check(
    d1: float,
    d2: float,
    trials: int,
    test_intervals: Sequence[tuple[float, float]] = SW_INTERVALS,
    dt: float = 1e-4,
    delta: float = 1e-3,
    seed: int = 0,
    batch: int = 250,
    workers: int | None = None,
    key: Sequence[int] = (_KEY_SW,),
) -> dict:
    """Avoidance of the zeros of ``sqrt(X1**2 + X2**2)`` against direct sampling at ``d1 + d2``.

    Both Bessel paths start at 0 and the direct sets are pinned, at the same
    resolution ``delta``.  Composite zeros are the steps where both components
    vanish.  ``z`` is the two-sample difference over its standard error.
    """
    if d1 + d2 >= 2.0:
        raise VacuousTestError(f"d1 + d2 = {d1 + d2:g} >= 2: both zero sets are a.s. empty")
    for d in (d1, d2):
        if not 0.0 < d < 2.0:
            raise ParameterError(f"d={d} must lie in (0, 2)")
    intervals = [(float(s), float(t)) for s, t in test_intervals]
    fn = partial(
        _sw_chunk, d1=d1, d2=d2, intervals=intervals, dt=dt, delta=delta, seed=seed, key=tuple(key), batch=batch
    )
    parts = map_ranges(fn, trials, workers)
    comp = sum(p[0] for p in parts) / trials
    direct = sum(p[1] for p in parts) / trials
    rows = []
    for (s, t), pc, pd in zip(intervals, comp, direct):
        se = math.sqrt((pc * (1 - pc) + pd * (1 - pd)) / trials)
        z = (pc - pd) / se if se > 0 else 0.0
        rows.append({"s": s, "t": t, "composite": float(pc), "direct": float(pd), "se": se, "z": z})
    return {
        "d1": d1,
        "d2": d2,
        "trials": trials,
        "dt": dt,
        "delta": delta,
        "seed": seed,
        "intervals": rows,
        "max_abs_z": max(abs(r["z"]) for r in rows),
    }


# -- union recovery ------------------------------------------------------------


def _recover_chunk(a, b, *, d1, d2, window_count, delta, mode, seed, key, threshold):
    p1, p2 = StableParams(d1), StableParams(d2)
    h1, h2 = default_step(p1, delta), default_step(p2, delta)
    w = 1.0 / window_count
    out = []
    for i in range(a, b):
        z1 = _sample_set(p1, mode, delta, h1, seed, (*key, i, 0))
        z2 = _sample_set(p2, mode, delta, h2, seed, (*key, i, 1))
        u = union(z1, z2)
        if u.is_empty:
            out.append((0, 0))
            continue
        correct = occupied = 0
        for j, (_, est) in enumerate(local_dimension_profile(u, window_count)):
            if est is None:
                continue
            occupied += 1
            truth = not avoids(z2, j * w, min((j + 1) * w, 1.0))
            correct += int((est.slope > threshold) == truth)
        out.append((correct, occupied))
    return out


def union_recovery(
    d1: float,
    d2: float,
    trials: int,
    window_count: int = 64,
    delta: float = 1e-6,
    seed: int = 0,
    mode: DelayMode = EXPONENTIAL,
    workers: int | None = None,
    key: Sequence[int] = (_KEY_RECOVER,),
) -> dict:
    """Label each occupied window of ``Z1 ∪ Z2`` as the thicker ``Z2`` or the thinner ``Z1``.

    A window is labelled ``Z2`` when its local dimension exceeds the midpoint
    of ``1 - d1/2`` and ``1 - d2/2``; the truth is ``Z2`` when ``Z2`` meets the
    closed window.  Accuracy is averaged over trials with an occupied window.
    """
    if not d1 > d2:
        raise ParameterError("union recovery needs d1 > d2")
    StableParams(d1), StableParams(d2)
    threshold = ((1 - d1 / 2) + (1 - d2 / 2)) / 2
    fn = partial(
        _recover_chunk,
        d1=d1,
        d2=d2,
        window_count=window_count,
        delta=delta,
        mode=mode,
        seed=seed,
        key=tuple(key),
        threshold=threshold,
    )
    per_trial = [r for part in map_ranges(fn, trials, workers) for r in part]
    acc = [c / o for c, o in per_trial if o > 0]
    correct = sum(c for c, _ in per_trial)
    occupied = sum(o for _, o in per_trial)
    return {
        "d1": d1,
        "d2": d2,
        "trials": trials,
        "window_count": window_count,
        "delta": delta,
        "mode": str(mode),
        "seed": seed,
        "threshold": threshold,
        "scored_trials": len(acc),
        "mean_accuracy": float(np.mean(acc)) if acc else math.nan,
        "pooled_accuracy": correct / occupied if occupied else math.nan,
        "occupied_windows": occupied,
    }
