"""Bessel paths via the squared process, and their zero sets.

``Y = X**2`` solves ``dY = d dt + 2 sqrt(Y) dW``, which has no singular drift at
the origin.  The default scheme is full-truncation Euler: the chain
``Y <- Y + d dt + 2 sqrt(max(Y, 0) dt) N`` is allowed to dip below zero and
``X = sqrt(max(Y, 0))`` is reported.  Such a chain sits at ``X = 0`` for runs of
steps, so its zeros can be read off exactly.  The plain clamp
``Y <- max(Y, 0)`` is available as ``scheme="clamp"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .sets import GapSet

__all__ = [
    "SCHEMES",
    "BesselPath",
    "integrate_besq",
    "integrate_besq_batch",
    "zero_set",
    "zero_set_from_values",
    "compose_norm",
    "default_threshold",
]

SCHEMES = ("full-truncation", "clamp")


@dataclass(frozen=True)
class BesselPath:
    d: float
    x0: float
    dt: float
    values: np.ndarray
    horizon: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)


def _n_steps(horizon: float, dt: float) -> int:
    # guard against floor(1/1e-4) = 9999 style rounding
    return int(math.floor(horizon / dt * (1.0 + 1e-12)))


def _check(d: float, x0: float, horizon: float, dt: float, scheme: str) -> None:
    if not 0.0 < d < 2.0:
        raise ParameterError(f"d={d} must lie in (0, 2)")
    if x0 < 0.0:
        raise ParameterError("x0 must be nonnegative")
    if not dt > 0.0:
        raise ParameterError("dt must be positive")
    if dt >= horizon:
        raise ParameterError("dt must be smaller than the horizon")
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def integrate_besq_batch(
    d: float,
    x0: float,
    horizon: float,
    dt: float,
    rngs: Sequence[np.random.Generator],
    scheme: str = "full-truncation",
) -> np.ndarray:
    """``len(rngs)`` Bessel paths as rows of an array; row ``i`` uses only ``rngs[i]``."""
    _check(d, x0, horizon, dt, scheme)
    n = _n_steps(horizon, dt)
    noise = np.empty((len(rngs), n))
    for i, g in enumerate(rngs):
        noise[i] = g.standard_normal(n)
    noise *= 2.0 * math.sqrt(dt)
    out = np.empty((len(rngs), n + 1))
    y = np.full(len(rngs), x0 * x0)
    out[:, 0] = y
    drift = d * dt
    clamp = scheme == "clamp"
    for k in range(n):
        y = y + drift + np.sqrt(np.maximum(y, 0.0)) * noise[:, k]
        if clamp:
            np.maximum(y, 0.0, out=y)
        out[:, k + 1] = y
    np.maximum(out, 0.0, out=out)
    return np.sqrt(out, out=out)


def integrate_besq(
    d: float,
    x0: float,
    horizon: float,
    dt: float,
    rng: np.random.Generator,
    scheme: str = "full-truncation",
) -> BesselPath:
    values = integrate_besq_batch(d, x0, horizon, dt, [rng], scheme)[0]
    values.setflags(write=False)
    return BesselPath(float(d), float(x0), float(dt), values, float(horizon))


def default_threshold(d: float, dt: float) -> float:
    """Smallest admissible positive threshold, ``sqrt(10 d dt)``."""
    return math.sqrt(10.0 * d * dt)


def zero_set_from_values(
    values: np.ndarray,
    d: float,
    dt: float,
    horizon: float,
    threshold: float = 0.0,
    delta: float = 1e-3,
) -> GapSet:
    """Threshold-and-coarsen on a raw value array; see :func:`zero_set`."""
    if threshold < 0.0:
        raise ParameterError("threshold must be nonnegative")
    if threshold > 0.0 and threshold * threshold < 10.0 * d * dt * (1.0 - 1e-12):
        raise ParameterError(
            f"threshold {threshold:g} too small: need threshold**2 >= 10 d dt = {10 * d * dt:g}"
        )
    if delta < dt:
        raise ParameterError("delta must be at least dt")
    hits = np.flatnonzero(values <= threshold)
    res = delta / horizon
    if hits.size == 0:
        return GapSet.empty(res)
    t = hits * dt
    t = t[t <= horizon]
    if t.size == 0:
        return GapSet.empty(res)
    brk = np.flatnonzero(np.diff(t) > delta)
    starts = np.concatenate((t[:1], t[brk + 1])) / horizon
    ends = np.concatenate((t[brk], t[-1:])) / horizon
    return GapSet(starts, np.minimum(ends, 1.0), res)


def zero_set(path: BesselPath, threshold: float = 0.0, delta: float = 1e-3) -> GapSet:
    """Resolution-``delta`` coarsening of ``{k dt : X_k <= threshold}``, rescaled onto ``[0, 1]``.

    ``threshold = 0`` takes the exact zeros of the full-truncation chain.  A
    positive threshold must satisfy ``threshold**2 >= 10 d dt``.
    """
    return zero_set_from_values(path.values, path.d, path.dt, path.horizon, threshold, delta)


def compose_norm(p1: BesselPath, p2: BesselPath) -> BesselPath:
    """Pointwise ``sqrt(X**2 + X'**2)``, labelled with dimension ``d1 + d2``."""
    if p1.dt != p2.dt or p1.values.size != p2.values.size or p1.horizon != p2.horizon:
        raise ParameterError("paths must share dt and horizon")
    vals = np.hypot(p1.values, p2.values)
    vals.setflags(write=False)
    return BesselPath(p1.d + p2.d, math.hypot(p1.x0, p2.x0), p1.dt, vals, p1.horizon)
