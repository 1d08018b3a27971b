"""Command-line entry point: one subcommand per experiment, one report per run.

Reports are JSON (canonical) or CSV (the main table only).  Identical
configuration and seed give byte-identical reports; wall-clock time is logged
to stderr and only written into the report with ``--timing``.

Exit codes: 0 success, 1 bad parameters or usage, 2 acceptance failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import subprocess
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, acceptance, localtime, products, toyps
from ._rng import stream
from .errors import ParameterError
from .fractal import cantor_set, estimate_dimension
from .runner import default_workers
from .sampler import DelayMode, StableParams, default_step, sample_gapsets, sample_path, to_gapset, validate_stable_sampler
from .sets import meets, quantize

__all__ = ["main", "run", "SCHEMA", "version_string", "read_config"]

SCHEMA = "regenset.report/1"
EXIT_OK, EXIT_PARAM, EXIT_ACCEPTANCE = 0, 1, 2

log = logging.getLogger("regenset")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def version_string() -> str:
    """Package version plus ``git describe`` of the source tree when available."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        tag = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        tag = ""
    return f"{__version__}+{tag}" if tag else __version__


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _intervals(text: str) -> list[tuple[float, float]]:
    out = []
    for part in text.split(","):
        s, sep, t = part.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"interval {part!r} is not of the form s:t")
        out.append((float(s), float(t)))
    return out


def _mode(text: str) -> DelayMode:
    try:
        return DelayMode.parse(text)
    except (ParameterError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _count(text: str) -> int:
    # accepts 1e6 style counts
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(v)


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines (``#`` comments), or a JSON report whose ``config`` is reused."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        cfg = data.get("config", data)
        return {k: _config_text(v) for k, v in cfg.items()}
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"{path}:{lineno}: expected key = value")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _config_text(v) -> str:
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return ",".join(f"{a}:{b}" for a, b in v)
        return ",".join(str(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# -- subcommands ---------------------------------------------------------------


def _cmd_sample(a) -> tuple[dict, list[dict]]:
    params = StableParams(a.d)
    step = a.step or default_step(params, a.delta)
    path = sample_path(params, a.mode, a.horizon, step, stream(a.seed, 0))
    Z = to_gapset(path, a.horizon, a.delta)
    res = {
        "alpha": params.alpha,
        "step": step,
        "delay": path.delay,
        "records": path.n_records,
        "warning": path.warning,
        "set": Z.to_dict(),
    }
    rows = [{"start": s, "end": e} for s, e in zip(Z.starts.tolist(), Z.ends.tolist())]
    return res, rows


def _cmd_validate(a):
    rows = validate_stable_sampler(a.alpha, a.lambdas, a.n, stream(a.seed, 0))
    worst = max(abs(r["z"]) for r in rows)
    return {"alpha": a.alpha, "n": a.n, "rows": rows, "max_abs_z": float(worst), "passed": bool(worst < 4.0)}, rows


def _cmd_dim(a):
    if a.cantor is not None:
        Z = cantor_set(a.cantor)
        est = estimate_dimension(Z, a.eps_max, a.eps_min or 4.0 * Z.resolution, a.levels)
        return {"cantor_levels": a.cantor, "estimate": est.to_dict()}, [
            {"eps": e, "count": n} for e, n in est.scales
        ]
    Zs = sample_gapsets(StableParams(a.d), a.mode, a.delta, a.samples, a.seed, key=(0,))
    eps_min = a.eps_min or 4.0 * a.delta
    ests = [estimate_dimension(Z, a.eps_max, eps_min, a.levels) for Z in Zs if not Z.is_empty]
    if not ests:
        raise ParameterError("every sample was empty; use --mode pinned or more samples")
    slopes = np.array([e.slope for e in ests])
    eps = [e for e, _ in ests[0].scales]
    mean_counts = np.exp(np.mean([[math.log(n) for _, n in e.scales] for e in ests], axis=0))
    res = {
        "d": a.d,
        "target": 1 - a.d / 2,
        "samples": len(ests),
        "mean_slope": float(slopes.mean()),
        "stderr": float(slopes.std(ddof=1) / math.sqrt(slopes.size)) if slopes.size > 1 else None,
        "scales": [[e, float(c)] for e, c in zip(eps, mean_counts)],
    }
    return res, [{"eps": e, "geo_mean_count": float(c)} for e, c in zip(eps, mean_counts)]


def _cmd_localtime(a):
    r = localtime.moment_check(a.alpha, a.ts, a.paths, a.step, a.seed, refine=a.refine)
    rows = [
        {"t": t, "mean": m, "se": s, "target": g, "oracle_mean": o}
        for t, m, s, g, o in zip(r["t"], r["mean"], r["se"], r["target"], r["oracle_mean"])
    ]
    return r, rows


def _cmd_intersect(a):
    rep = products.intersection_experiment(
        a.d1, a.d2, a.trials, a.deltas, seed=a.seed, mode=a.mode, workers=a.workers
    )
    return rep.to_dict(), rep.csv_rows()


def _cmd_partition(a):
    identity = nonincreasing = nondecreasing = disjoint = 0
    example = None
    for i in range(a.pairs):
        p = products.sample_pair(a.d1, a.d2, a.delta, a.seed, i, a.mode)
        if a.quantize:
            p = products.PairSample(quantize(p.z1, a.quantize), quantize(p.z2, a.quantize), p.params)
        prof = products.partition_limit_profile(p, a.k_max)
        empty = int(not meets(p.z1, p.z2))
        disjoint += empty
        identity += int(prof[-1] == empty)
        steps = np.diff(prof)
        nonincreasing += int(np.all(steps <= 0))
        nondecreasing += int(np.all(steps >= 0))
        if example is None and empty and not (p.z1.is_empty or p.z2.is_empty):
            example = {"trial": i, "profile": prof}
    res = {
        "d1": a.d1,
        "d2": a.d2,
        "pairs": a.pairs,
        "k_max": a.k_max,
        "quantize_bits": a.quantize,
        "identity": identity,
        "nonincreasing": nonincreasing,
        "nondecreasing": nondecreasing,
        "disjoint": disjoint,
        "example_disjoint_profile": example,
    }
    return res, [{k: v for k, v in res.items() if not isinstance(v, dict)}]


def _cmd_sw(a):
    r = products.shiga_watanabe_check(
        a.d1, a.d2, a.trials, a.intervals, dt=a.dt, delta=a.delta, seed=a.seed, workers=a.workers
    )
    return r, r["intervals"]


def _cmd_recover(a):
    r = products.union_recovery(
        a.d1, a.d2, a.trials, a.windows, delta=a.delta, seed=a.seed, mode=a.mode, workers=a.workers
    )
    return r, [r]


SMOOTHING_SWEEP = (0.1, 0.5, 1.0, 2.0)


def _cmd_toy(a):
    c1 = toyps.pattern_counts(a.d1, a.n, a.samples, a.seed, key=(5, 1))
    c2 = toyps.pattern_counts(a.d2, a.n, a.samples, a.seed, key=(5, 2))
    law1, law2 = toyps.law_from_counts(c1, a.smoothing), toyps.law_from_counts(c2, a.smoothing)
    res = {"law1": law1.to_dict(), "law2": law2.to_dict(), "checks": toyps.product_checks(a.instances, a.seed)}
    # disjoint-occupancy probability as a function of the smoothing constant
    ind = toyps.disjoint_indicator(a.n)
    res["smoothing_sensitivity"] = [
        {"smoothing": k, "disjoint_prob": float(toyps.law_from_counts(c1, k).probs @ ind @ toyps.law_from_counts(c2, k).probs)}
        for k in sorted({*SMOOTHING_SWEEP, a.smoothing})
    ]
    chain = toyps.spatial_projection_chain(law1, law2, a.n)
    ex = toyps.chain_expectations(law1, law2, chain)
    res["chain_expectations"] = ex
    res["chain_matches_indicator"] = bool(np.array_equal(chain[-1], toyps.disjoint_indicator(a.n)))
    rows = [{"depth": k, "expectation": e} for k, e in enumerate(ex)]
    if a.n <= toyps.GRAM_MAX_CELLS:
        res["gram_deviation"] = toyps.gram_projection_check(law1, law2)
    return res, rows


def _cmd_acceptance(a):
    results = acceptance.run_all(a.quick, a.only, echo=lambda s: print(s, file=sys.stderr, flush=True))
    res = {"quick": a.quick, "passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed, "detail": r.detail} for r in results]
    return res, rows


# -- parser --------------------------------------------------------------------

Handler = Callable[[argparse.Namespace], tuple[dict, list[dict]]]


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=0, help="64-bit root seed (default 0)")
    g.add_argument("--out", default="-", help="report path, '-' for stdout")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--workers", type=int, default=None, help="worker processes (default: $REGENSET_WORKERS or 1)")
    g.add_argument("--config", default=None, help="key = value file (or a previous JSON report) of defaults")
    g.add_argument("--timing", action="store_true", help="embed wall-clock seconds in the report")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="regenset", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"regenset {version_string()}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, handler: Handler, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(handler=handler)
        return sp

    sp = add("sample", _cmd_sample, "sample one regenerative set and print it as a GapSet")
    sp.add_argument("--d", type=float, default=1.0)
    sp.add_argument("--mode", type=_mode, default=DelayMode("pinned"))
    sp.add_argument("--delta", type=float, default=1e-4)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=None)

    sp = add("validate-stable", _cmd_validate, "Laplace-transform check of the positive stable sampler")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--lambdas", type=_floats, default=[0.5, 1.0, 2.0, 4.0])
    sp.add_argument("--n", type=_count, default=1_000_000)

    sp = add("dim", _cmd_dim, "ensemble box-counting dimension of sampled sets (or a Cantor set)")
    sp.add_argument("--d", type=float, default=1.0)
    sp.add_argument("--mode", type=_mode, default=DelayMode("pinned"))
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--delta", type=float, default=1e-6)
    sp.add_argument("--eps-max", type=float, default=1e-1)
    sp.add_argument("--eps-min", type=float, default=None)
    sp.add_argument("--levels", type=int, default=10)
    sp.add_argument("--cantor", type=int, default=None, metavar="LEVELS")

    sp = add("localtime", _cmd_localtime, "mean local time against t^alpha / Gamma(1 + alpha)")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--refine", type=int, default=10)
    sp.add_argument("--ts", type=_floats, default=[0.1, 0.2, 0.4, 0.6, 0.8, 1.0])

    sp = add("intersect", _cmd_intersect, "intersection rates over a ladder of resolutions")
    sp.add_argument("--d1", type=float, required=True)
    sp.add_argument("--d2", type=float, required=True)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--deltas", type=_floats, default=[1e-3, 1e-4])
    sp.add_argument("--mode", type=_mode, default=DelayMode("exponential"))

    sp = add("partition-limit", _cmd_partition, "dyadic partition profiles against exact intersection")
    sp.add_argument("--d1", type=float, default=1.0)
    sp.add_argument("--d2", type=float, default=1.0)
    sp.add_argument("--pairs", type=int, default=1000)
    sp.add_argument("--delta", type=float, default=1e-4)
    sp.add_argument("--k-max", type=int, default=products.MAX_DEPTH)
    sp.add_argument("--quantize", type=int, default=20, metavar="BITS", help="0 disables")
    sp.add_argument("--mode", type=_mode, default=DelayMode("exponential"))

    sp = add("shiga-watanabe", _cmd_sw, "zeros of the norm of two Bessel paths against direct sampling")
    sp.add_argument("--d1", type=float, default=0.75)
    sp.add_argument("--d2", type=float, default=0.75)
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--delta", type=float, default=1e-3)
    sp.add_argument("--intervals", type=_intervals, default=list(products.SW_INTERVALS))

    sp = add("recover", _cmd_recover, "recover the thicker set from the union by local dimension")
    sp.add_argument("--d1", type=float, default=1.5)
    sp.add_argument("--d2", type=float, default=0.5)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--windows", type=int, default=64)
    sp.add_argument("--delta", type=float, default=1e-6)
    sp.add_argument("--mode", type=_mode, default=DelayMode("exponential"))

    sp = add("toy", _cmd_toy, "finite product system on estimated occupancy laws")
    sp.add_argument("--d1", type=float, default=0.5)
    sp.add_argument("--d2", type=float, default=0.5)
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--samples", type=int, default=None, help="default 100 * 2**n")
    sp.add_argument("--smoothing", type=float, default=0.5)
    sp.add_argument("--instances", type=int, default=100)

    sp = add("acceptance", _cmd_acceptance, "run the acceptance criteria (exit 2 on any failure)")
    sp.add_argument("--quick", action="store_true")
    sp.add_argument("--only", type=_ints, default=None, help="comma-separated criterion numbers")
    return parser


_NOT_CONFIG = {"handler", "out", "format", "config", "timing", "workers"}


def _config_echo(ns: argparse.Namespace) -> dict:
    out = {}
    for k, v in sorted(vars(ns).items()):
        if k in _NOT_CONFIG:
            continue
        if isinstance(v, DelayMode):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, list):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        out[k] = v
    return out


def _parse(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        # config values become argv defaults; explicit flags still win
        sub = next((a for a in argv if not a.startswith("-")), None)
        if sub is None:
            raise UsageError("a subcommand is required")
        extra = []
        for k, v in cfg.items():
            if k in _NOT_CONFIG or k == "command":
                continue
            flag = "--" + k.replace("_", "-")
            if flag in argv:
                continue
            if v.lower() in ("true", "false"):
                if v.lower() == "true":
                    extra.append(flag)
                continue
            if v in ("None", ""):
                continue
            extra.extend([flag, v])
        i = list(argv).index(sub) + 1
        argv = list(argv[:i]) + extra + list(argv[i:])
    return parser.parse_args(argv)


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def _render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=_plain) + "\n"
    buf = io.StringIO()
    if rows:
        keys = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v, default=_plain) if isinstance(v, (dict, list)) else v) for k, v in r.items()})
    return buf.getvalue()


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = _parse(parser, argv)
        if ns.workers is None:
            ns.workers = default_workers()
        if ns.workers < 1:
            raise ParameterError("--workers must be at least 1")
        if getattr(ns, "samples", 0) is None and ns.command == "toy":
            ns.samples = 100 * 2**ns.n
        t0 = time.perf_counter()
        results, rows = ns.handler(ns)
        elapsed = time.perf_counter() - t0
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_PARAM
    except (ParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"regenset: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    log.info("%s finished in %.2fs", ns.command, elapsed)
    report = {
        "schema": SCHEMA,
        "command": ns.command,
        "version": version_string(),
        "config": _config_echo(ns),
        "results": results,
    }
    if ns.timing:
        report["wall_clock_s"] = round(elapsed, 3)
    text = _render(report, rows, ns.format)
    if ns.out == "-":
        sys.stdout.write(text)
    else:
        Path(ns.out).write_text(text)
    if ns.command == "acceptance" and not results["passed"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    sys.exit(run())
