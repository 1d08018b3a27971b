"""Closed subsets of [0, 1] held as an interval hull minus finitely many open gaps.

A :class:`GapSet` stores its components (maximal closed intervals, possibly
degenerate) as two sorted float arrays.  The gap view ``hull`` / ``gaps`` used
for serialization is derived from them: consecutive components ``[a_i, b_i]``
and ``[a_{i+1}, b_{i+1}]`` bound the open gap ``(b_i, a_{i+1})``.  Two gaps that
touch at ``c`` leave the isolated point ``[c, c]`` between them.

All operations are exact on the stored floats; nothing is rounded except by
the explicit :func:`quantize`.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "GapSet",
    "avoids",
    "restrict",
    "shift_circular",
    "union",
    "intersect",
    "meets",
    "limit_points",
    "components",
    "lebesgue",
    "min_gap",
    "clearance",
    "quantize",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


class GapSet:
    """Immutable closed set ``Z ⊆ [0, 1]`` at a declared resolution.

    Use the constructors :meth:`empty`, :meth:`interval`, :meth:`points`,
    :meth:`from_gaps` or :meth:`from_components` rather than ``__init__``.
    """

    __slots__ = ("_starts", "_ends", "resolution")

    def __init__(self, starts: np.ndarray, ends: np.ndarray, resolution: float):
        # trusted path: arrays already canonical (sorted, disjoint, nonoverlapping)
        self._starts = _frozen(starts)
        self._ends = _frozen(ends)
        self.resolution = float(resolution)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def empty(cls, resolution: float = 0.0) -> "GapSet":
        return cls(np.empty(0), np.empty(0), resolution)

    @classmethod
    def interval(cls, a: float, b: float, resolution: float = 0.0) -> "GapSet":
        return cls.from_components([(a, b)], resolution)

    @classmethod
    def points(cls, xs: Iterable[float], resolution: float = 0.0) -> "GapSet":
        xs = sorted(float(x) for x in xs)
        return cls.from_components([(x, x) for x in xs], resolution)

    @classmethod
    def from_components(cls, comps, resolution: float = 0.0) -> "GapSet":
        """Build from closed intervals in any order; overlapping or touching ones merge."""
        arr = np.asarray(comps, dtype=np.float64).reshape(-1, 2)
        if arr.size == 0:
            return cls.empty(resolution)
        if np.any(arr[:, 0] > arr[:, 1]):
            raise ParameterError("component with start > end")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ParameterError("components must lie in [0, 1]")
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        starts, ends = _merge_sorted(arr[order, 0], arr[order, 1])
        return cls(starts, ends, resolution)

    @classmethod
    def from_gaps(cls, hull: Sequence[float] | None, gaps, resolution: float = 0.0) -> "GapSet":
        """Build from the gap representation, validating its invariants."""
        if hull is None:
            return cls.empty(resolution)
        a, b = float(hull[0]), float(hull[1])
        if not 0.0 <= a <= b <= 1.0:
            raise ParameterError(f"hull {hull!r} must satisfy 0 <= a <= b <= 1")
        g = np.asarray(gaps, dtype=np.float64).reshape(-1, 2)
        if len(g):
            l, r = g[:, 0], g[:, 1]
            if np.any(l >= r):
                raise ParameterError("gaps must be nonempty open intervals")
            if l[0] < a or r[-1] > b:
                raise ParameterError("gaps must lie inside the hull")
            if np.any(l[1:] < r[:-1]):
                raise ParameterError("gaps must be sorted and pairwise disjoint")
        starts = np.concatenate(([a], g[:, 1]))
        ends = np.concatenate((g[:, 0], [b]))
        return cls(starts, ends, resolution)

    @classmethod
    def from_dict(cls, data: dict) -> "GapSet":
        res = float(data.get("resolution", 0.0))
        if data.get("empty", False):
            return cls.empty(res)
        return cls.from_gaps(data["hull"], data.get("gaps", []), res)

    # -- views ----------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self._starts.size == 0

    @property
    def starts(self) -> np.ndarray:
        return self._starts

    @property
    def ends(self) -> np.ndarray:
        return self._ends

    @property
    def hull(self) -> tuple[float, float] | None:
        if self.is_empty:
            return None
        return float(self._starts[0]), float(self._ends[-1])

    @property
    def gaps(self) -> np.ndarray:
        return np.column_stack((self._ends[:-1], self._starts[1:]))

    def __len__(self) -> int:
        return int(self._starts.size)

    def contains(self, x) -> np.ndarray | bool:
        """Membership test, vectorized over ``x``."""
        xa = np.asarray(x, dtype=np.float64)
        if self.is_empty:
            out = np.zeros(xa.shape, dtype=bool)
        else:
            i = np.searchsorted(self._ends, xa, side="left")
            ok = i < self._starts.size
            ic = np.minimum(i, self._starts.size - 1)
            out = ok & (self._starts[ic] <= xa)
        return bool(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        if self.is_empty:
            return {"empty": True, "hull": None, "gaps": [], "resolution": self.resolution}
        return {
            "empty": False,
            "hull": list(self.hull),
            "gaps": self.gaps.tolist(),
            "resolution": self.resolution,
        }

    def same_points(self, other: "GapSet") -> bool:
        """Equality of the represented sets, ignoring resolution."""
        return np.array_equal(self._starts, other._starts) and np.array_equal(self._ends, other._ends)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GapSet):
            return NotImplemented
        return self.same_points(other) and self.resolution == other.resolution

    def __hash__(self):
        return hash((self._starts.tobytes(), self._ends.tobytes(), self.resolution))

    def __repr__(self) -> str:
        if self.is_empty:
            return f"GapSet(empty, resolution={self.resolution:g})"
        a, b = self.hull
        return f"GapSet(hull=[{a:g}, {b:g}], components={len(self)}, resolution={self.resolution:g})"


def _merge_sorted(starts: np.ndarray, ends: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge intervals sorted by start; intervals that overlap or touch are fused."""
    if starts.size == 0:
        return starts, ends
    run_end = np.maximum.accumulate(ends)
    new = np.empty(starts.size, dtype=bool)
    new[0] = True
    new[1:] = starts[1:] > run_end[:-1]
    idx = np.flatnonzero(new)
    last = np.append(idx[1:] - 1, starts.size - 1)
    return starts[idx], run_end[last]


def _check_window(s: float, t: float) -> None:
    if s > t:
        raise ParameterError(f"window start {s} exceeds end {t}")
    if s < 0.0 or t > 1.0:
        raise ParameterError(f"window [{s}, {t}] must lie in [0, 1]")


def avoids(Z: GapSet, s: float, t: float) -> int:
    """1 if ``Z ∩ [s, t]`` is empty, else 0."""
    _check_window(s, t)
    if Z.is_empty:
        return 1
    i = int(np.searchsorted(Z.ends, s, side="left"))
    if i == len(Z):
        return 1
    return int(Z.starts[i] > t)


def restrict(Z: GapSet, s: float, t: float) -> GapSet:
    """``Z ∩ [s, t]``."""
    _check_window(s, t)
    if Z.is_empty:
        return Z
    i = int(np.searchsorted(Z.ends, s, side="left"))
    j = int(np.searchsorted(Z.starts, t, side="right"))
    if i >= j:
        return GapSet.empty(Z.resolution)
    st = np.maximum(Z.starts[i:j], s)
    en = np.minimum(Z.ends[i:j], t)
    return GapSet(st, en, Z.resolution)


def shift_circular(Z: GapSet, t: float) -> GapSet:
    """Closure of ``Z + t (mod 1)``, with 0 and 1 identified.

    A point landing on 0 ≡ 1 is stored at both ends, so the result is
    circle-consistent (contains 0 iff it contains 1).  Shifting by an integer
    returns ``Z`` unchanged.
    """
    t = math.fmod(float(t), 1.0)
    if t < 0.0:
        t += 1.0
    if t == 0.0 or Z.is_empty:
        return Z
    pieces = []
    for a, b in zip(Z.starts + t, Z.ends + t):
        if b < 1.0:
            pieces.append((a, b))
        elif a > 1.0:
            pieces.append((a - 1.0, b - 1.0))
        else:
            # covers the seam 1 ≡ 0
            pieces.append((a, 1.0))
            pieces.append((0.0, max(b - 1.0, 0.0)))
    arr = np.clip(np.asarray(pieces), 0.0, 1.0)
    return GapSet.from_components(arr, Z.resolution)


def union(Z1: GapSet, Z2: GapSet) -> GapSet:
    res = max(Z1.resolution, Z2.resolution)
    if Z1.is_empty:
        return GapSet(Z2.starts, Z2.ends, res)
    if Z2.is_empty:
        return GapSet(Z1.starts, Z1.ends, res)
    st = np.concatenate((Z1.starts, Z2.starts))
    en = np.concatenate((Z1.ends, Z2.ends))
    order = np.argsort(st, kind="stable")
    s, e = _merge_sorted(st[order], en[order])
    return GapSet(s, e, res)


def _overlap_pairs(Z1: GapSet, Z2: GapSet) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i, j) with component i of Z1 meeting component j of Z2, sorted."""
    lo = np.searchsorted(Z2.ends, Z1.starts, side="left")
    hi = np.searchsorted(Z2.starts, Z1.ends, side="right")
    cnt = np.maximum(hi - lo, 0)
    total = int(cnt.sum())
    if total == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    i = np.repeat(np.arange(len(Z1)), cnt)
    offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    j = np.repeat(lo, cnt) + offs
    return i, j


def intersect(Z1: GapSet, Z2: GapSet) -> GapSet:
    res = max(Z1.resolution, Z2.resolution)
    if Z1.is_empty or Z2.is_empty:
        return GapSet.empty(res)
    i, j = _overlap_pairs(Z1, Z2)
    if i.size == 0:
        return GapSet.empty(res)
    st = np.maximum(Z1.starts[i], Z2.starts[j])
    en = np.minimum(Z1.ends[i], Z2.ends[j])
    # pieces are disjoint already except for shared endpoints of touching components
    s, e = _merge_sorted(st, en)
    return GapSet(s, e, res)


def meets(Z1: GapSet, Z2: GapSet) -> bool:
    """``Z1 ∩ Z2 ≠ ∅`` without building the intersection."""
    if Z1.is_empty or Z2.is_empty:
        return False
    lo = np.searchsorted(Z2.ends, Z1.starts, side="left")
    hi = np.searchsorted(Z2.starts, Z1.ends, side="right")
    return bool(np.any(hi > lo))


def limit_points(Z: GapSet) -> GapSet:
    """Drop the isolated points (degenerate components)."""
    keep = Z.starts < Z.ends
    if keep.all():
        return Z
    return GapSet(Z.starts[keep], Z.ends[keep], Z.resolution)


def components(Z: GapSet) -> list[tuple[float, float]]:
    return list(zip(Z.starts.tolist(), Z.ends.tolist()))


def lebesgue(Z: GapSet) -> float:
    return float(np.sum(Z.ends - Z.starts))


def min_gap(Z: GapSet) -> float:
    """Length of the shortest gap; ``inf`` when there are no gaps."""
    if len(Z) < 2:
        return math.inf
    return float(np.min(Z.starts[1:] - Z.ends[:-1]))


def clearance(Z1: GapSet, Z2: GapSet) -> float:
    """Exact distance ``inf{|x - y| : x ∈ Z1, y ∈ Z2}``; 0 when they meet, inf if either is empty."""
    if Z1.is_empty or Z2.is_empty:
        return math.inf
    if meets(Z1, Z2):
        return 0.0
    # nearest Z2 component to each Z1 component on either side
    j = np.searchsorted(Z2.starts, Z1.ends, side="right")
    best = math.inf
    right = j < len(Z2)
    if right.any():
        best = min(best, float(np.min(Z2.starts[j[right]] - Z1.ends[right])))
    left = j > 0
    if left.any():
        best = min(best, float(np.min(Z1.starts[left] - Z2.ends[j[left] - 1])))
    return best


def quantize(Z: GapSet, bits: int) -> GapSet:
    """Smallest superset whose component endpoints lie on the grid ``k / 2**bits``.

    Starts round down and ends round up; components that then touch or overlap
    merge.  The resolution becomes at least ``2**-bits``.
    """
    if bits < 0 or bits > 52:
        raise ParameterError("bits must lie in [0, 52]")
    q = float(2 ** bits)
    res = max(Z.resolution, 1.0 / q)
    if Z.is_empty:
        return GapSet.empty(res)
    s, e = _merge_sorted(np.floor(Z.starts * q) / q, np.ceil(Z.ends * q) / q)
    return GapSet(s, e, res)
