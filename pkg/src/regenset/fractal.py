"""Box-counting dimension of GapSets.

Cells are ``[k eps, (k+1) eps)`` for ``k = 0 .. K-1`` with ``K = ceil(1/eps)``;
the last cell is closed so that ``[0, 1]`` needs exactly ``K`` boxes.  Counts
come straight from component endpoints, never from enumerating cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySetError, ParameterError
from .sets import GapSet, restrict

__all__ = [
    "DimEstimate",
    "box_count",
    "estimate_dimension",
    "local_dimension_profile",
    "cantor_set",
]


@dataclass
class DimEstimate:
    slope: float
    stderr: float
    scales: list[tuple[float, int]]
    r2: float
    intercept: float = 0.0
    raw_slope: float = 0.0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "raw_slope": self.raw_slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "r2": self.r2,
            "flags": list(self.flags),
            "scales": [[e, n] for e, n in self.scales],
        }


def _n_cells(eps: float) -> int:
    return max(1, math.ceil(1.0 / eps))


def _cell_ranges(Z: GapSet, eps: float) -> tuple[np.ndarray, np.ndarray]:
    k = _n_cells(eps) - 1
    lo = np.minimum(np.floor(Z.starts / eps), k).astype(np.int64)
    hi = np.minimum(np.floor(Z.ends / eps), k).astype(np.int64)
    return lo, hi


def _union_size(lo: np.ndarray, hi: np.ndarray) -> int:
    # lo, hi are nondecreasing and lo[i] >= hi[i-1]; consecutive ranges share at most one cell
    if lo.size == 0:
        return 0
    return int(np.sum(hi - lo + 1) - np.count_nonzero(lo[1:] == hi[:-1]))


def _check_eps(Z: GapSet, eps: float) -> None:
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if eps < Z.resolution:
        raise ParameterError(f"eps={eps:g} is below the set's resolution {Z.resolution:g}")


def box_count(Z: GapSet, eps: float) -> int:
    """Number of grid cells of side ``eps`` meeting ``Z``."""
    _check_eps(Z, eps)
    if Z.is_empty:
        return 0
    return _union_size(*_cell_ranges(Z, eps))


def _box_count_window(Z: GapSet, eps: float, c0: int, c1: int) -> int:
    """Cells with index in ``[c0, c1)`` meeting ``Z``."""
    if Z.is_empty:
        return 0
    lo, hi = _cell_ranges(Z, eps)
    lo = np.maximum(lo, c0)
    hi = np.minimum(hi, c1 - 1)
    ok = hi >= lo
    return _union_size(lo[ok], hi[ok])


def _fit(eps: np.ndarray, counts: np.ndarray) -> DimEstimate:
    scales = [(float(e), int(n)) for e, n in zip(eps, counts)]
    flags = []
    if np.any(counts == 0):
        raise EmptySetError("box counts vanish; the set does not meet the counting range")
    x = np.log(1.0 / eps)
    y = np.log(counts.astype(np.float64))
    if eps[0] / eps[-1] < 10.0:
        flags.append("narrow-scale-range")
    A = np.column_stack((x, np.ones_like(x)))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = y - A @ coef
    n = x.size
    sxx = float(np.sum((x - x.mean()) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / (n - 2) / sxx) if n > 2 and sxx > 0 else math.inf
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    if slope < 0.0 or slope > 1.0:
        flags.append("clamped")
    return DimEstimate(
        slope=min(max(slope, 0.0), 1.0),
        stderr=stderr,
        scales=scales,
        r2=r2,
        intercept=intercept,
        raw_slope=slope,
        flags=flags,
    )


def estimate_dimension(Z: GapSet, eps_max: float, eps_min: float, levels: int = 10) -> DimEstimate:
    """Least-squares slope of ``log N(eps)`` on ``log(1/eps)`` over geometric ``eps``."""
    if Z.is_empty:
        raise EmptySetError("cannot estimate the dimension of the empty set")
    if levels < 4:
        raise ParameterError("need at least 4 scale levels")
    if not eps_max > eps_min > 0:
        raise ParameterError("need eps_max > eps_min > 0")
    if eps_min < 4.0 * Z.resolution:
        raise ParameterError(
            f"eps_min={eps_min:g} must be at least 4x the resolution {Z.resolution:g}"
        )
    eps = np.geomspace(eps_max, eps_min, levels)
    counts = np.array([box_count(Z, e) for e in eps])
    return _fit(eps, counts)


def local_dimension_profile(
    Z: GapSet,
    window_count: int,
    eps_range: tuple[float, float] | None = None,
    levels: int | None = None,
) -> list[tuple[tuple[float, float], DimEstimate | None]]:
    """Dimension estimate per window ``[j/W, (j+1)/W)``; ``None`` marks windows missing ``Z``.

    ``eps_range = (eps_max, eps_min)`` in absolute units; each ``eps`` is snapped
    to ``w / 2**m`` so cells tile every window exactly.  The default spans
    ``w/2`` down to the finest power of two at or above ``4 * resolution``.
    """
    if window_count < 2:
        raise ParameterError("window_count must be at least 2")
    w = 1.0 / window_count
    floor_eps = max(4.0 * Z.resolution, w / 2**20)
    if eps_range is None:
        eps_range = (w / 2.0, floor_eps)
    e_max, e_min = eps_range
    e_min = max(e_min, floor_eps)
    m_lo = max(0, math.ceil(math.log2(w / e_max) - 1e-9))
    m_hi = math.floor(math.log2(w / e_min) + 1e-9)
    if levels is None:
        ms = np.arange(m_lo, m_hi + 1)
    else:
        ms = np.unique(np.round(np.linspace(m_lo, m_hi, levels)).astype(int))
    if ms.size < 3:
        raise ParameterError("scale range too narrow for a local estimate")
    eps = w / 2.0**ms
    per_window = 2**ms  # cells per window at each eps
    counts = np.zeros((window_count, ms.size), dtype=np.int64)
    for j in range(window_count):
        sub = restrict(Z, j * w, min((j + 1) * w, 1.0))
        if sub.is_empty:
            continue
        for col, (e, q) in enumerate(zip(eps, per_window)):
            counts[j, col] = _box_count_window(sub, e, int(j * q), int((j + 1) * q))
    out = []
    for j in range(window_count):
        window = (j * w, (j + 1) * w)
        if counts[j, -1] == 0:
            out.append((window, None))
            continue
        out.append((window, _fit(eps, counts[j])))
    return out


def cantor_set(levels: int) -> GapSet:
    """Middle-thirds Cantor construction after ``levels`` removals, at resolution ``3**-levels``."""
    a = np.array([0.0])
    b = np.array([1.0])
    for _ in range(levels):
        third = (b - a) / 3.0
        a, b = np.column_stack((a, b - third)).ravel(), np.column_stack((a + third, b)).ravel()
    return GapSet(a, b, 3.0**-levels)
