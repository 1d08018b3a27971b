"""A finite product system on occupancy patterns of ``n`` cells.

A pattern is an ``n``-bit integer: bit ``i`` is set when the set meets the
closed cell ``[i/n, (i+1)/n]``.  Cells ``[0, m)`` followed by cells
``[m, n)`` concatenate as ``p1 | (p2 << m)``.  A :class:`DiscreteLaw` is a
strictly positive law on the ``2**n`` patterns, and a :class:`ToyVector` is a
function on patterns with the inner product of ``L2(law)``.

``product`` is the discrete form of the multiplication
``(v ⊗ w)(p1 p2) = sqrt(Pv(p1) Pw(p2) / P(p1 p2)) v(p1) w(p2)``: the square
root is the Radon-Nikodym factor between the product of the factor laws and
the target law, so the map is isometric for every choice of target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import stream
from .errors import ParameterError
from .sampler import EXPONENTIAL, DelayMode, StableParams, default_step, sample_path, to_gapset
from .sets import avoids

__all__ = [
    "MAX_CELLS",
    "DiscreteLaw",
    "ToyVector",
    "estimate_law",
    "pattern_counts",
    "law_from_counts",
    "occupancy_pattern",
    "random_law",
    "random_vector",
    "product_law",
    "rebase",
    "product",
    "unit_vector",
    "disjoint_indicator",
    "spatial_projection_chain",
    "chain_expectations",
    "gram_projection_check",
    "product_checks",
]

MAX_CELLS = 10
GRAM_MAX_CELLS = 4


def _check_cells(n: int) -> None:
    if not 1 <= n <= MAX_CELLS:
        raise ParameterError(f"cell count n={n} must lie in [1, {MAX_CELLS}]")


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    n: int
    probs: np.ndarray
    smoothing: float = 0.0

    def __post_init__(self):
        _check_cells(self.n)
        p = np.array(self.probs, dtype=np.float64).reshape(-1)
        if p.size != 2**self.n:
            raise ParameterError(f"need {2**self.n} probabilities for n={self.n}, got {p.size}")
        if not np.all(p > 0):
            raise ParameterError("a discrete law must give every pattern positive mass")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_weights(cls, n: int, weights, smoothing: float = 0.0) -> "DiscreteLaw":
        w = np.asarray(weights, dtype=np.float64)
        return cls(n, w / w.sum(), smoothing)

    @property
    def empty_prob(self) -> float:
        return float(self.probs[0])

    def marginal(self, start: int, stop: int) -> "DiscreteLaw":
        """Law of the sub-pattern on cells ``[start, stop)``."""
        if not 0 <= start < stop <= self.n:
            raise ParameterError(f"bad cell range [{start}, {stop}) for n={self.n}")
        m = stop - start
        idx = (np.arange(self.probs.size) >> start) & ((1 << m) - 1)
        p = np.bincount(idx, weights=self.probs, minlength=1 << m)
        return DiscreteLaw(m, p / p.sum(), self.smoothing)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "smoothing": self.smoothing,
            "probs": {str(i): float(p) for i, p in enumerate(self.probs)},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteLaw":
        n = int(data["n"])
        p = np.zeros(2**n)
        for k, v in data["probs"].items():
            p[int(k)] = float(v)
        return cls(n, p, float(data.get("smoothing", 0.0)))


@dataclass(frozen=True, eq=False)
class ToyVector:
    law: DiscreteLaw
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.size != self.law.probs.size:
            raise ParameterError("coefficient count does not match the law")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.law.n

    def inner(self, other: "ToyVector") -> complex:
        if other.law is not self.law and not np.array_equal(other.law.probs, self.law.probs):
            raise ParameterError("inner product needs a common law")
        return complex(np.sum(self.law.probs * np.conj(self.coeffs) * other.coeffs))

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.law.probs * np.abs(self.coeffs) ** 2)))

    def distance(self, other: "ToyVector") -> float:
        """``L2`` distance under this vector's law."""
        d = self.coeffs - other.coeffs
        return math.sqrt(float(np.sum(self.law.probs * np.abs(d) ** 2)))


def occupancy_pattern(Z, n: int) -> int:
    """Bit ``i`` set iff ``Z`` meets the closed cell ``[i/n, (i+1)/n]``."""
    p = 0
    for i in range(n):
        if not avoids(Z, i / n, (i + 1) / n):
            p |= 1 << i
    return p


def pattern_counts(
    d: float,
    n: int,
    samples: int,
    seed: int = 0,
    delta: float = 1e-3,
    mode: DelayMode = EXPONENTIAL,
    key: Sequence[int] = (5,),
) -> np.ndarray:
    """Occupancy-pattern histogram of ``samples`` sets from streams ``(seed, *key, i)``."""
    _check_cells(n)
    if samples < 100 * 2**n:
        raise ParameterError(f"need at least {100 * 2**n} samples for n={n}")
    params = StableParams(d)
    h = default_step(params, delta)
    counts = np.zeros(2**n)
    for i in range(samples):
        Z = to_gapset(sample_path(params, mode, 1.0, h, stream(seed, *key, i)), 1.0, delta)
        counts[occupancy_pattern(Z, n)] += 1
    return counts


def law_from_counts(counts, smoothing: float = 0.5) -> DiscreteLaw:
    """``(counts + smoothing) / (total + smoothing 2**n)``."""
    if not smoothing > 0.0:
        raise ParameterError("smoothing must be positive to keep full support")
    c = np.asarray(counts, dtype=np.float64)
    n = int(c.size).bit_length() - 1
    if c.size != 2**n:
        raise ParameterError("count vector length must be a power of 2")
    probs = (c + smoothing) / (c.sum() + smoothing * c.size)
    return DiscreteLaw(n, probs / probs.sum(), smoothing)


def estimate_law(
    d: float,
    n: int,
    samples: int,
    smoothing: float = 0.5,
    seed: int = 0,
    delta: float = 1e-3,
    mode: DelayMode = EXPONENTIAL,
    key: Sequence[int] = (5,),
) -> DiscreteLaw:
    """Smoothed empirical law of occupancy patterns of sampled sets on ``n`` cells."""
    if not smoothing > 0.0:
        raise ParameterError("smoothing must be positive to keep full support")
    return law_from_counts(pattern_counts(d, n, samples, seed, delta, mode, key), smoothing)


def random_law(n: int, rng: np.random.Generator, concentration: float = 1.0) -> DiscreteLaw:
    """Dirichlet draw, floored away from zero."""
    p = rng.dirichlet(np.full(2**n, concentration)) + 1e-9
    return DiscreteLaw(n, p / p.sum())


def random_vector(law: DiscreteLaw, rng: np.random.Generator) -> ToyVector:
    """Unit-norm vector with complex Gaussian coefficients."""
    c = rng.standard_normal(law.probs.size) + 1j * rng.standard_normal(law.probs.size)
    v = ToyVector(law, c)
    return ToyVector(law, c / v.norm())


def product_law(law1: DiscreteLaw, law2: DiscreteLaw) -> DiscreteLaw:
    """Independent concatenation: cells of ``law1`` first."""
    p = np.outer(law2.probs, law1.probs).ravel()
    return DiscreteLaw(law1.n + law2.n, p / p.sum(), max(law1.smoothing, law2.smoothing))


def rebase(v: ToyVector, law: DiscreteLaw) -> ToyVector:
    """The same element of the measure-type space, represented under ``law``."""
    if law.n != v.n:
        raise ParameterError("rebase needs equal cell counts")
    return ToyVector(law, np.sqrt(v.law.probs / law.probs) * v.coeffs)


def product(v: ToyVector, w: ToyVector, target: DiscreteLaw) -> ToyVector:
    """``v`` on the first ``m`` cells times ``w`` on the rest, represented under ``target``.

    The result does not depend on which laws ``v`` and ``w`` are represented
    under, since rebasing either factor cancels inside the square root.
    """
    if target.n != v.n + w.n:
        raise ParameterError(f"target has {target.n} cells, factors have {v.n} + {w.n}")
    pv = np.outer(w.law.probs, v.law.probs).ravel()
    c = np.outer(w.coeffs, v.coeffs).ravel()
    return ToyVector(target, np.sqrt(pv / target.probs) * c)


def unit_vector(law: DiscreteLaw) -> ToyVector:
    c = np.zeros(law.probs.size, dtype=np.complex128)
    c[0] = 1.0 / math.sqrt(law.empty_prob)
    return ToyVector(law, c)


def _depth_count(n: int) -> int:
    _check_cells(n)
    return (n - 1).bit_length()


def _block_ranges(n: int, depth: int) -> list[tuple[int, int]]:
    """Cell ranges after ``depth`` rounds of bisection; equal blocks when ``n`` is a power of 2."""
    blocks = [(0, n)]
    for _ in range(depth):
        blocks = [half for a, b in blocks for half in (((a, (a + b) // 2), ((a + b) // 2, b)) if b - a > 1 else ((a, b),))]
    return blocks


def _block_masks(n: int, depth: int) -> list[int]:
    return [((1 << (b - a)) - 1) << a for a, b in _block_ranges(n, depth)]


def disjoint_indicator(n: int) -> np.ndarray:
    """``[p1, p2] -> 1{p1 & p2 == 0}``: the two patterns share no occupied cell."""
    p = np.arange(2**n)
    return (np.bitwise_and.outer(p, p) == 0).astype(np.float64)


def spatial_projection_chain(law1: DiscreteLaw, law2: DiscreteLaw, n: int) -> list[np.ndarray]:
    """Diagonals ``[p1, p2]`` of the block projections at depths ``0 .. ceil(log2 n)``.

    At depth ``k`` the cells are grouped into the blocks of ``k`` rounds of
    bisection and the value is 1 iff on every block one of the two patterns is
    empty.  The last depth has single-cell blocks.
    """
    if law1.n != n or law2.n != n:
        raise ParameterError("laws must live on n cells")
    levels = _depth_count(n)
    p = np.arange(2**n)
    chain = []
    for k in range(levels + 1):
        op = np.ones((p.size, p.size), dtype=bool)
        for mask in _block_masks(n, k):
            e = (p & mask) == 0
            op &= e[:, None] | e[None, :]
        chain.append(op.astype(np.float64))
    return chain


def chain_expectations(law1: DiscreteLaw, law2: DiscreteLaw, chain: Sequence[np.ndarray]) -> list[float]:
    """Expectation of each chain diagonal under ``law1 ⊗ law2``."""
    return [float(law1.probs @ op @ law2.probs) for op in chain]


def _block_generators(m1: DiscreteLaw, m2: DiscreteLaw) -> np.ndarray:
    """Columns ``unit ⊗ delta_q`` and ``delta_q ⊗ unit`` as functions of ``(q1, q2)``, rows ``q1 * 2**b + q2``."""
    size = m1.probs.size
    g = np.zeros((size, size, 2 * size))
    for q in range(size):
        g[0, q, q] = 1.0 / math.sqrt(m1.empty_prob)
        g[q, 0, size + q] = 1.0 / math.sqrt(m2.empty_prob)
    return g.reshape(size * size, 2 * size)


def gram_projection_check(law1: DiscreteLaw, law2: DiscreteLaw, depth: int | None = None) -> float:
    """Max entrywise gap between the dense projection onto the spanned subspace and the chain diagonal.

    At each depth the generators are products over blocks of block generators,
    carried into ``L2(law1) ⊗ L2(law2)`` by the product map (including its
    Radon-Nikodym factor) and written in orthonormal coordinates
    ``sqrt(P1 P2) f``.  The span is orthonormalized by SVD and its projection
    compared against ``diag(chain[depth])``.  ``depth=None`` checks them all.
    """
    n = law1.n
    if law2.n != n:
        raise ParameterError("laws must share the cell count")
    if n > GRAM_MAX_CELLS:
        raise ParameterError(f"dense check limited to n <= {GRAM_MAX_CELLS}")
    levels = _depth_count(n)
    depths = range(levels + 1) if depth is None else [depth]
    chain = spatial_projection_chain(law1, law2, n)
    p = np.arange(2**n)
    p1 = np.repeat(p, p.size)  # row r = p1 * 2**n + p2
    p2 = np.tile(p, p.size)
    worst = 0.0
    for k in depths:
        if not 0 <= k <= levels:
            raise ParameterError(f"depth {k} outside [0, {levels}]")
        M = np.ones((p1.size, 1))
        rn = np.ones(p1.size)
        for lo, hi in _block_ranges(n, k):
            b = hi - lo
            m1, m2 = law1.marginal(lo, hi), law2.marginal(lo, hi)
            q1 = (p1 >> lo) & ((1 << b) - 1)
            q2 = (p2 >> lo) & ((1 << b) - 1)
            rows = _block_generators(m1, m2)[q1 * (1 << b) + q2]
            M = (M[:, :, None] * rows[:, None, :]).reshape(p1.size, -1)
            rn *= m1.probs[q1] * m2.probs[q2]
        joint = law1.probs[p1] * law2.probs[p2]
        # product map factor times the orthonormal-coordinate weight
        M *= (np.sqrt(rn / joint) * np.sqrt(joint))[:, None]
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        Q = U[:, s > s[0] * 1e-10]
        proj = Q @ Q.T
        worst = max(worst, float(np.max(np.abs(proj - np.diag(chain[k].ravel())))))
    return worst


def product_checks(instances: int, seed: int = 0, n_max: int = MAX_CELLS) -> dict:
    """Worst isometry, associativity and unit-factorization residuals over random instances."""
    rng = stream(seed, 6)
    iso = assoc = unit = 0.0
    for _ in range(instances):
        n = int(rng.integers(3, n_max + 1))
        a, b = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
        n1, n2, n3 = int(a), int(b - a), int(n - b)
        T = random_law(n, rng)
        u, v, w = (random_vector(random_law(k, rng), rng) for k in (n1, n2, n3))
        uv = product(u, v, T.marginal(0, n1 + n2))
        left = product(uv, w, T)
        right = product(u, product(v, w, T.marginal(n1, n)), T)
        assoc = max(assoc, left.distance(right))
        iso = max(iso, abs(uv.norm() - u.norm() * v.norm()), abs(left.norm() - 1.0))
        m = int(rng.integers(1, n))
        U = product(unit_vector(T.marginal(0, m)), unit_vector(T.marginal(m, n)), T)
        unit = max(unit, U.distance(unit_vector(T)))
    return {"instances": instances, "isometry": iso, "associativity": assoc, "unit": unit}
