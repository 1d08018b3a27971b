"""Stable subordinators and the regenerative sets they generate.

The range of a stable subordinator of index ``alpha = 1 - d/2`` is distributed
as the zero set of a Bessel(d) process started at 0.  Paths are sampled on a
fixed operational-time grid ``0, h, 2h, ...`` with exact stable increments, so
every record ``tau + M_{kh}`` has the correct marginal law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import stream
from .errors import ParameterError
from .sets import GapSet

__all__ = [
    "StableParams",
    "DelayMode",
    "PINNED",
    "EXPONENTIAL",
    "SubordinatorPath",
    "sample_positive_stable",
    "validate_stable_sampler",
    "sample_path",
    "to_gapset",
    "record_spacing",
    "coarsest_step",
    "default_step",
    "MAX_STEP",
    "sample_gapsets",
]


@dataclass(frozen=True)
class StableParams:
    """Bessel dimension ``d`` and the matching subordinator index ``alpha = 1 - d/2``.

    ``scale`` multiplies the Laplace exponent: ``E exp(-lam M_s) = exp(-s scale lam**alpha)``.
    """

    d: float
    scale: float = 1.0
    alpha: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.d < 2.0:
            raise ParameterError(f"Bessel parameter d={self.d} must lie in (0, 2)")
        if not self.scale > 0.0:
            raise ParameterError(f"scale={self.scale} must be positive")
        object.__setattr__(self, "alpha", 1.0 - self.d / 2.0)

    @classmethod
    def from_alpha(cls, alpha: float, scale: float = 1.0) -> "StableParams":
        if not 0.0 < alpha < 1.0:
            raise ParameterError(f"alpha={alpha} must lie in (0, 1)")
        return cls(2.0 * (1.0 - alpha), scale)


@dataclass(frozen=True)
class DelayMode:
    """How the first record ``tau`` is chosen: ``pinned`` (0), ``exponential`` (Exp(1)) or ``fixed``."""

    kind: str
    t0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("pinned", "exponential", "fixed"):
            raise ParameterError(f"unknown delay mode {self.kind!r}")
        if self.kind == "fixed" and not self.t0 >= 0.0:
            raise ParameterError("fixed delay requires t0 >= 0")

    @classmethod
    def parse(cls, text: str) -> "DelayMode":
        """``"pinned"``, ``"exponential"`` or ``"fixed:<t0>"``."""
        text = text.strip().lower()
        if text.startswith("fixed"):
            _, _, val = text.partition(":")
            return cls("fixed", float(val or 0.0))
        return cls(text)

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "pinned":
            return 0.0
        if self.kind == "exponential":
            return float(rng.standard_exponential())
        return float(self.t0)

    def __str__(self) -> str:
        return f"fixed:{self.t0:g}" if self.kind == "fixed" else self.kind


PINNED = DelayMode("pinned")
EXPONENTIAL = DelayMode("exponential")


@dataclass(frozen=True)
class SubordinatorPath:
    delay: float
    step: float
    points: np.ndarray
    params: StableParams
    horizon: float
    warning: str | None = None

    @property
    def n_records(self) -> int:
        """Records in ``[0, horizon]`` (the overshoot witness excluded)."""
        return int(np.searchsorted(self.points, self.horizon, side="right"))


def sample_positive_stable(alpha: float, rng: np.random.Generator, size=None):
    """Draw ``S > 0`` with ``E exp(-lam S) = exp(-lam**alpha)`` (Kanter's representation).

    ``S = sin(a U) sin((1-a) U)^((1-a)/a) / sin(U)^(1/a) / E^((1-a)/a)`` with
    ``U ~ Uniform(0, pi)`` and ``E ~ Exp(1)``, evaluated in logs so small
    ``alpha`` does not overflow the intermediate powers.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha={alpha} must lie in (0, 1)")
    u = math.pi * rng.random(size)
    # U = 0 has probability 2**-53; nudge it off the singularity
    u = np.where(u == 0.0, math.pi * 2.0**-54, u)
    e = rng.standard_exponential(size)
    b = (1.0 - alpha) / alpha
    log_s = (
        np.log(np.sin(alpha * u))
        + b * np.log(np.sin((1.0 - alpha) * u))
        - np.log(np.sin(u)) / alpha
        - b * np.log(e)
    )
    return np.exp(log_s)


def validate_stable_sampler(
    alpha: float,
    lambdas: Sequence[float],
    n: int,
    rng: np.random.Generator,
    chunk: int = 1_000_000,
) -> list[dict]:
    """Compare Monte Carlo ``E exp(-lam S)`` against ``exp(-lam**alpha)`` for each ``lam``."""
    if n < 10_000:
        raise ParameterError("validation needs n >= 1e4 draws")
    lambdas = [float(l) for l in lambdas]
    if any(l < 0 for l in lambdas):
        raise ParameterError("lambdas must be nonnegative")
    sums = np.zeros(len(lambdas))
    sqs = np.zeros(len(lambdas))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        s = sample_positive_stable(alpha, rng, m)
        for i, lam in enumerate(lambdas):
            v = np.exp(-lam * s)
            sums[i] += v.sum()
            sqs[i] += np.dot(v, v)
        done += m
    rows = []
    for i, lam in enumerate(lambdas):
        mean = sums[i] / n
        var = max(sqs[i] / n - mean * mean, 0.0) * n / (n - 1)
        target = math.exp(-(lam**alpha)) if lam > 0 else 1.0
        se = math.sqrt(var / n)
        z = (mean - target) / se if se > 0 else (0.0 if mean == target else math.inf)
        rows.append({"lambda": lam, "mean": mean, "target": target, "z": z})
    return rows


def record_spacing(params: StableParams, step: float) -> float:
    """Typical distance between consecutive records, ``(scale * h)**(1/alpha)``."""
    return (params.scale * step) ** (1.0 / params.alpha)


def coarsest_step(params: StableParams, delta: float) -> float:
    """Largest grid step ``h`` for which ``delta >= 10 * record_spacing``."""
    # shaved so the recomputed spacing clears the bound despite rounding
    return (delta / 10.0) ** params.alpha / params.scale * (1.0 - 1e-9)


MAX_STEP = 1e-3


def default_step(params: StableParams, delta: float) -> float:
    """``coarsest_step`` capped at ``MAX_STEP``.

    For small ``alpha`` the coarsest admissible step leaves only a handful of
    records per path and visibly biases avoidance probabilities; the cap keeps
    at least ``~1/MAX_STEP`` operational-time steps per unit of local time.
    """
    return min(coarsest_step(params, delta), MAX_STEP)


def sample_path(
    params: StableParams,
    mode: DelayMode,
    horizon: float,
    step: float,
    rng: np.random.Generator,
) -> SubordinatorPath:
    """Records ``tau + M_{kh}``, stopped at the first one beyond ``horizon`` (which is kept)."""
    if not horizon > 0.0:
        raise ParameterError("horizon must be positive")
    if not step > 0.0:
        raise ParameterError("step must be positive")
    tau = mode.draw(rng)
    scale = record_spacing(params, step)
    if tau > horizon:
        pts = np.array([tau])
    else:
        expected = (horizon - tau) ** params.alpha / (params.scale * math.gamma(1.0 + params.alpha) * step)
        chunk = int(1.25 * expected) + 64
        parts = [np.array([tau])]
        last = tau
        while True:
            inc = scale * sample_positive_stable(params.alpha, rng, chunk)
            run = last + np.cumsum(inc)
            k = int(np.searchsorted(run, horizon, side="right"))
            if k < run.size:
                parts.append(run[: k + 1])
                break
            parts.append(run)
            last = float(run[-1])
        pts = np.concatenate(parts)
    warning = None
    if mode.kind == "pinned" and np.searchsorted(pts, horizon, side="right") < 2:
        warning = "degenerate-resolution: fewer than 2 records in [0, horizon]"
    pts.setflags(write=False)
    return SubordinatorPath(tau, float(step), pts, params, float(horizon), warning)


def to_gapset(path: SubordinatorPath, horizon: float | None = None, delta: float = 1e-4) -> GapSet:
    """Resolution-``delta`` image of the range in ``[0, horizon]``, rescaled onto ``[0, 1]``.

    Inter-record gaps of length ``<= delta`` are filled.  A retained gap
    ``(x_k, x_{k+1})`` is shortened on the left to start at ``x_k + rho`` with
    ``rho = record_spacing``: the range accumulates at every record from the
    right, so no record is an isolated point of the true set and none is
    emitted as one.  ``rho <= delta / 10`` keeps the change below resolution.
    """
    if horizon is None:
        horizon = path.horizon
    if not horizon > 0.0:
        raise ParameterError("horizon must be positive")
    rho = record_spacing(path.params, path.step)
    if delta < 10.0 * rho:
        raise ParameterError(
            f"delta={delta:g} below 10x record spacing {rho:g}; refine the step or coarsen delta"
        )
    res = delta / horizon
    x = path.points
    if x[0] > horizon:
        return GapSet.empty(res)
    g = np.diff(x)
    big = np.flatnonzero(g > delta)
    starts = np.concatenate((x[:1], x[big + 1]))
    ends = np.concatenate((x[big] + rho, x[-1:]))
    keep = int(np.searchsorted(starts, horizon, side="right"))
    starts = starts[:keep]
    ends = np.minimum(ends[:keep], horizon)
    if horizon != 1.0:
        starts = starts / horizon
        ends = np.minimum(ends / horizon, 1.0)
    return GapSet(starts, ends, res)


def sample_gapsets(
    params: StableParams,
    mode: DelayMode,
    delta: float,
    trials: int,
    seed: int,
    key: Sequence[int] = (),
    step: float | None = None,
    horizon: float = 1.0,
    start: int = 0,
) -> list[GapSet]:
    """One GapSet per trial ``i``, each drawn from its own stream ``(seed, *key, i)``."""
    if step is None:
        step = default_step(params, delta)
    out = []
    for i in range(start, start + trials):
        p = sample_path(params, mode, horizon, step, stream(seed, *key, i))
        out.append(to_gapset(p, horizon, delta))
    return out
