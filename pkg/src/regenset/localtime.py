"""Local time at zero as the inverse of the sampled subordinator.

On the operational grid, ``L(t) = h * #{k : tau + M_{kh} <= t}``: the grid
time of the last record not exceeding ``t``.  It is a nondecreasing step
function whose jumps sit exactly on the records, hence on the regenerative set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import stream
from .sampler import PINNED, DelayMode, StableParams, SubordinatorPath, sample_path, to_gapset
from .sets import GapSet

__all__ = [
    "LocalTimeProfile",
    "local_time",
    "additivity_check",
    "support_check",
    "profile_support_check",
    "mean_local_time",
    "moment_check",
]


@dataclass(frozen=True)
class LocalTimeProfile:
    grid: np.ndarray
    values: np.ndarray
    source: SubordinatorPath | None = None

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}


def local_time(path: SubordinatorPath, grid: Sequence[float] | np.ndarray | None = None) -> LocalTimeProfile:
    """Evaluate ``L`` on ``grid`` (default: 1024 uniform points on ``[0, horizon]``)."""
    if grid is None:
        grid = np.linspace(0.0, path.horizon, 1024)
    grid = np.asarray(grid, dtype=np.float64)
    counts = np.searchsorted(path.points, grid, side="right")
    return LocalTimeProfile(grid, path.step * counts, path)


def additivity_check(path: SubordinatorPath, split: float) -> float:
    """``|L(H) - L(s) - L'(H - s)|`` with ``L'`` from the path restarted at its first record after ``s``."""
    H = path.horizon
    if split >= H:
        return 0.0
    total, before = local_time(path, [H, split]).values
    j = int(np.searchsorted(path.points, split, side="right"))
    if j >= path.points.size:
        return abs(total - before)
    shifted = path.points[j:] - split
    restarted = SubordinatorPath(
        delay=float(shifted[0]),
        step=path.step,
        points=shifted,
        params=path.params,
        horizon=H - split,
    )
    after = local_time(restarted, [H - split]).values[0]
    return abs(total - before - after)


def support_check(path: SubordinatorPath, delta: float) -> bool:
    """Every increase of ``L`` lies in the GapSet and every component holds an increase."""
    Z = to_gapset(path, path.horizon, delta)
    recs = path.points[path.points <= path.horizon] / path.horizon
    if Z.is_empty:
        return recs.size == 0
    if not np.all(Z.contains(recs)):
        return False
    first = np.searchsorted(recs, Z.starts, side="left")
    return bool(np.all((first < recs.size) & (recs[np.minimum(first, recs.size - 1)] <= Z.ends)))


def profile_support_check(profile: LocalTimeProfile, Z: GapSet, horizon: float = 1.0) -> bool:
    """Grid-level support test for an arbitrary profile.

    The increase between grid points ``t_{i-1} < t_i`` must meet ``Z`` somewhere
    in ``[t_{i-1}, t_i]``, and every component of ``Z`` must meet one such
    increase interval.
    """
    g = profile.grid / horizon
    v = profile.values
    lo = np.concatenate(([0.0], g[:-1]))
    inc = np.diff(np.concatenate(([0.0], v))) > 0
    lo, hi = lo[inc], g[inc]
    if Z.is_empty:
        return lo.size == 0
    # increase interval [lo, hi] meets Z iff the first component ending at or after lo starts by hi
    i = np.searchsorted(Z.ends, lo, side="left")
    ok = (i < len(Z)) & (Z.starts[np.minimum(i, len(Z) - 1)] <= hi)
    if not ok.all():
        return False
    k = np.searchsorted(hi, Z.starts, side="left")
    return bool(np.all((k < hi.size) & (lo[np.minimum(k, hi.size - 1)] <= Z.ends)))


def mean_local_time(
    params: StableParams,
    ts: Sequence[float],
    n_paths: int,
    step: float,
    seed: int,
    key: Sequence[int] = (),
    mode: DelayMode = PINNED,
) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble mean and standard error of ``L(t)`` at each ``t``; horizon ``max(ts)``."""
    ts = np.asarray(ts, dtype=np.float64)
    H = float(ts.max())
    s1 = np.zeros(ts.size)
    s2 = np.zeros(ts.size)
    for i in range(n_paths):
        p = sample_path(params, mode, H, step, stream(seed, *key, i))
        v = local_time(p, ts).values
        s1 += v
        s2 += v * v
    mean = s1 / n_paths
    var = np.maximum(s2 / n_paths - mean**2, 0.0) * n_paths / (n_paths - 1)
    return mean, np.sqrt(var / n_paths)


def moment_check(
    alpha: float,
    ts: Sequence[float],
    n_paths: int,
    step: float,
    seed: int,
    refine: int = 10,
    oracle_paths: int | None = None,
) -> dict:
    """``E[L_t]`` against ``t**alpha / Gamma(1 + alpha)`` and against a ``step/refine`` simulation.

    Also reports the slope of ``log E[L_t]`` on ``log t``, which should be ``alpha``.
    """
    params = StableParams.from_alpha(alpha)
    mean, se = mean_local_time(params, ts, n_paths, step, seed, key=(0,))
    fine_mean, fine_se = mean_local_time(
        params, ts, oracle_paths or n_paths, step / refine, seed, key=(1,)
    )
    ts = np.asarray(ts, dtype=np.float64)
    target = ts**alpha / math.gamma(1.0 + alpha)
    slope = float(np.polyfit(np.log(ts), np.log(mean), 1)[0]) if ts.size > 1 else math.nan
    return {
        "alpha": alpha,
        "step": step,
        "t": ts.tolist(),
        "mean": mean.tolist(),
        "se": se.tolist(),
        "target": target.tolist(),
        "oracle_mean": fine_mean.tolist(),
        "oracle_se": fine_se.tolist(),
        "growth_slope": slope,
    }
