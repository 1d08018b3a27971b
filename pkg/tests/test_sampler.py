import math

import numpy as np
import pytest
from scipy.special import betainc

from regenset._rng import stream
from regenset.errors import ParameterError
from regenset.sampler import (
    EXPONENTIAL,
    PINNED,
    DelayMode,
    StableParams,
    coarsest_step,
    default_step,
    record_spacing,
    sample_gapsets,
    sample_path,
    sample_positive_stable,
    to_gapset,
    validate_stable_sampler,
)
from regenset.sets import avoids


def test_index_convention():
    p = StableParams(1.5)
    assert p.alpha == 0.25
    assert StableParams.from_alpha(0.5).d == 1.0
    for bad in (0.0, 2.0, -1.0, 2.5):
        with pytest.raises(ParameterError):
            StableParams(bad)
    with pytest.raises(ParameterError):
        StableParams(1.0, scale=0.0)


def test_delay_mode_parse():
    assert DelayMode.parse("pinned") == PINNED
    assert DelayMode.parse("Exponential") == EXPONENTIAL
    m = DelayMode.parse("fixed:0.3")
    assert (m.kind, m.t0, str(m)) == ("fixed", 0.3, "fixed:0.3")
    with pytest.raises(ParameterError):
        DelayMode("fixed", -1.0)
    with pytest.raises(ParameterError):
        DelayMode.parse("poisson")


def test_laplace_transform_alpha_half():
    s = sample_positive_stable(0.5, stream(1, 0), 1_000_000)
    assert np.exp(-s).mean() == pytest.approx(math.exp(-1.0), abs=0.002)


def test_tail_index():
    # P(S > x) ~ c x**-alpha; regress the log survival on log x over the far tail
    s = np.sort(sample_positive_stable(0.5, stream(1, 1), 1_000_000))
    surv = 1.0 - np.arange(1, s.size + 1) / s.size
    sel = slice(int(0.99 * s.size), int(0.9999 * s.size))
    slope = np.polyfit(np.log(s[sel]), np.log(surv[sel]), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


@pytest.mark.parametrize("alpha", [0.05, 0.3, 0.5, 0.95])
def test_positive_draws(alpha):
    s = sample_positive_stable(alpha, stream(1, 2), 1_000_000)
    assert np.all(s > 0) and np.all(np.isfinite(s))


def test_alpha_out_of_range():
    for a in (0.0, 1.0, 1.5):
        with pytest.raises(ParameterError):
            sample_positive_stable(a, stream(0))


def test_validation_targets():
    rows = validate_stable_sampler(0.5, [0.0, 4.0], 10_000, stream(2))
    assert rows[0]["target"] == 1.0 and rows[0]["z"] == 0.0
    assert rows[1]["target"] == pytest.approx(math.exp(-2.0))
    assert validate_stable_sampler(0.9, [1.0], 10_000, stream(3))[0]["target"] == pytest.approx(math.exp(-1))
    with pytest.raises(ParameterError):
        validate_stable_sampler(0.5, [1.0], 9_999, stream(2))


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_laplace_validation_grid(alpha):
    rows = validate_stable_sampler(alpha, [0.5, 1, 2, 4], 1_000_000, stream(4, int(alpha * 10)))
    assert max(abs(r["z"]) for r in rows) < 4


def test_pinned_path_starts_at_zero():
    p = sample_path(StableParams(1.0), PINNED, 1.0, 1e-3, stream(5))
    assert p.points[0] == 0.0 and p.delay == 0.0
    assert np.all(np.diff(p.points) >= 0)
    # exactly one overshoot record is kept
    assert p.points[-1] > 1.0 and p.points[-2] <= 1.0
    assert p.warning is None


def test_degenerate_resolution_warning():
    p = sample_path(StableParams(1.0), PINNED, 1.0, 1e3, stream(5))
    assert p.warning and "degenerate" in p.warning


def test_exponential_delay_tail():
    rng = stream(6)
    frac = np.mean([EXPONENTIAL.draw(rng) > 1.0 for _ in range(100_000)])
    assert frac == pytest.approx(math.exp(-1), abs=0.005)


def test_mean_record_count_matches_inverse_subordinator():
    # E[#records in [0, 1]] = E[L_1] / h = 1 / (h Gamma(1.5)), plus the record at 0
    h = 1e-4
    params = StableParams.from_alpha(0.5)
    counts = [sample_path(params, PINNED, 1.0, h, stream(7, i)).n_records for i in range(4000)]
    target = 1.0 / (h * math.gamma(1.5))
    assert np.mean(counts) == pytest.approx(target, rel=0.05)


def test_to_gapset_trivial_cases():
    params = StableParams(1.0)
    late = sample_path(params, DelayMode("fixed", 1.5), 1.0, 1e-3, stream(8))
    assert to_gapset(late, 1.0, 1e-4).is_empty
    Z = to_gapset(sample_path(params, PINNED, 1.0, 1e-3, stream(8)), 1.0, 1e-4)
    assert Z.hull[0] == 0.0 and Z.contains(0.0)
    assert Z.resolution == 1e-4


def test_resolution_precondition():
    params = StableParams(1.0)
    p = sample_path(params, PINNED, 1.0, 1e-2, stream(9))
    with pytest.raises(ParameterError):
        to_gapset(p, 1.0, 10 * record_spacing(params, 1e-2) * 0.99)


def test_coarsest_and_default_step():
    params = StableParams(1.5)
    h = coarsest_step(params, 1e-4)
    assert 10 * record_spacing(params, h) <= 1e-4
    assert default_step(params, 1e-4) == min(h, 1e-3)


def test_no_isolated_points():
    Z = to_gapset(sample_path(StableParams(1.0), PINNED, 1.0, 1e-3, stream(10)), 1.0, 1e-4)
    assert np.all(Z.ends > Z.starts)


def test_monotone_coarsening():
    p = sample_path(StableParams(0.8), PINNED, 1.0, 1e-3, stream(11))
    fine, coarse = to_gapset(p, 1.0, 1e-4), to_gapset(p, 1.0, 1e-3)
    grid = np.linspace(0, 1, 100_001)
    assert np.all(coarse.contains(grid[fine.contains(grid)]))
    assert np.all(coarse.contains(fine.starts)) and np.all(coarse.contains(fine.ends))


def test_horizon_rescaling():
    p = sample_path(StableParams(1.0), PINNED, 2.0, 1e-3, stream(12))
    Z = to_gapset(p, 2.0, 1e-4)
    assert Z.ends[-1] <= 1.0 and Z.resolution == 5e-5


def test_determinism():
    a = sample_gapsets(StableParams(1.2), EXPONENTIAL, 1e-4, 5, seed=42, key=(3,))
    b = sample_gapsets(StableParams(1.2), EXPONENTIAL, 1e-4, 5, seed=42, key=(3,))
    assert all(x == y for x, y in zip(a, b))
    c = sample_gapsets(StableParams(1.2), EXPONENTIAL, 1e-4, 3, seed=42, key=(3,), start=2)
    assert all(x == y for x, y in zip(a[2:], c))


def test_arcsine_law_pinned():
    Zs = sample_gapsets(StableParams(1.0), PINNED, 1e-4, 20_000, seed=13)
    p = np.mean([avoids(Z, 0.25, 1.0) for Z in Zs])
    assert p == pytest.approx(1 / 3, abs=0.015)


@pytest.mark.parametrize("c", [0.25, 0.5])
def test_self_similarity(c):
    n = 5000
    Zs = sample_gapsets(StableParams(1.4), PINNED, 1e-5, n, seed=14, key=(int(c * 100),))
    s, t = 0.4, 0.8
    big = np.mean([avoids(Z, s, t) for Z in Zs])
    small = np.mean([avoids(Z, c * s, c * t) for Z in Zs])
    se = math.sqrt((big * (1 - big) + small * (1 - small)) / n)
    assert abs(big - small) < 3 * se
    assert big == pytest.approx(betainc(0.3, 0.7, s / t), abs=4 * se)
