import math

import numpy as np
import pytest
from scipy.stats import chi2

from regenset import bessel
from regenset._rng import stream
from regenset.errors import ParameterError
from regenset.fractal import estimate_dimension
from regenset.sampler import PINNED, StableParams, sample_gapsets
from regenset.sets import avoids


def test_rejects_out_of_range():
    for d in (2.0, 0.0, 3.0):
        with pytest.raises(ParameterError):
            bessel.integrate_besq(d, 0.0, 1.0, 1e-3, stream(0))
    with pytest.raises(ParameterError):
        bessel.integrate_besq(1.0, 0.0, 1.0, 1.0, stream(0))
    with pytest.raises(ParameterError):
        bessel.integrate_besq(1.0, -0.1, 1.0, 1e-3, stream(0))
    with pytest.raises(ParameterError):
        bessel.integrate_besq(1.0, 0.0, 1.0, 1e-3, stream(0), scheme="milstein")


@pytest.mark.parametrize("scheme", bessel.SCHEMES)
def test_shape_and_nonnegativity(scheme):
    p = bessel.integrate_besq(0.7, 0.0, 1.0, 1e-4, stream(1), scheme=scheme)
    assert p.values.size == 10_001
    assert np.all(p.values >= 0)
    assert p.values[0] == 0.0


def test_second_moment_is_linear():
    # BESQ(1) from 0: E[X_t^2] = t
    x = bessel.integrate_besq_batch(1.0, 0.0, 1.0, 1e-3, [stream(2, i) for i in range(10_000)])
    m = (x**2).mean(axis=0)
    for k in (250, 500, 1000):
        assert m[k] == pytest.approx(k * 1e-3, rel=0.05)


def test_rows_depend_only_on_their_stream():
    a = bessel.integrate_besq_batch(1.0, 0.0, 0.1, 1e-3, [stream(3, i) for i in range(4)])
    b = bessel.integrate_besq_batch(1.0, 0.0, 0.1, 1e-3, [stream(3, 2)])
    assert np.array_equal(a[2], b[0])


def test_distant_start_has_no_zeros():
    p = bessel.integrate_besq(1.3, 5.0, 1e-4, 1e-6, stream(4))
    assert bessel.zero_set(p, bessel.default_threshold(1.3, 1e-6), 1e-5).is_empty
    assert bessel.zero_set(p, 0.0, 1e-5).is_empty


def test_threshold_precondition():
    p = bessel.integrate_besq(1.0, 0.0, 1.0, 1e-4, stream(5))
    with pytest.raises(ParameterError):
        bessel.zero_set(p, 1e-3, 1e-3)  # 1e-6 < 10 d dt
    with pytest.raises(ParameterError):
        bessel.zero_set(p, -1.0, 1e-3)
    with pytest.raises(ParameterError):
        bessel.zero_set(p, 0.0, 1e-5)  # delta below dt
    assert bessel.zero_set(p, bessel.default_threshold(1.0, 1e-4), 1e-3).contains(0.0)


def test_values_above_threshold_give_empty_set():
    vals = np.full(101, 2.0)
    assert bessel.zero_set_from_values(vals, 1.0, 1e-2, 1.0, 0.5, 1e-2).is_empty


def test_exact_zeros_are_runs_of_the_chain():
    p = bessel.integrate_besq(1.0, 0.0, 1.0, 1e-4, stream(6))
    Z = bessel.zero_set(p, 0.0, 1e-3)
    hits = np.flatnonzero(p.values == 0.0) * 1e-4
    assert np.all(Z.contains(hits))


def _avoidance(sets, intervals):
    return np.array([[avoids(Z, s, t) for s, t in intervals] for Z in sets]).mean(axis=0)


def test_brownian_arcsine():
    n, dt = 3000, 1e-4
    sets = []
    for b in range(0, n, 500):
        x = bessel.integrate_besq_batch(1.0, 0.0, 1.0, dt, [stream(7, i) for i in range(b, b + 500)])
        sets += [bessel.zero_set_from_values(r, 1.0, dt, 1.0, 0.0, 1e-3) for r in x]
    assert _avoidance(sets, [(0.25, 1.0)])[0] == pytest.approx(1 / 3, abs=0.02)


INTERVALS = [(0.05, 0.1), (0.1, 0.3), (0.25, 1.0), (0.5, 1.0), (0.3, 0.6), (0.7, 0.9), (0.02, 0.05), (0.4, 0.45)]


@pytest.mark.slow
def test_agrees_with_subordinator_sampler():
    n, dt = 3000, 1e-5
    sets = []
    for b in range(0, n, 250):
        x = bessel.integrate_besq_batch(1.0, 0.0, 1.0, dt, [stream(8, i) for i in range(b, b + 250)])
        sets += [bessel.zero_set_from_values(r, 1.0, dt, 1.0, 0.0, 1e-3) for r in x]
    direct = sample_gapsets(StableParams(1.0), PINNED, 1e-3, n, seed=8, key=(1,))
    p, q = _avoidance(sets, INTERVALS), _avoidance(direct, INTERVALS)
    z = (p - q) / np.sqrt((p * (1 - p) + q * (1 - q)) / n)
    assert chi2.sf(float(np.sum(z**2)), len(INTERVALS)) > 0.01


def test_dimension_of_d15_zero_set():
    n, dt = 200, 1e-5
    slopes = []
    for b in range(0, n, 100):
        x = bessel.integrate_besq_batch(1.5, 0.0, 1.0, dt, [stream(9, i) for i in range(b, b + 100)])
        for r in x:
            Z = bessel.zero_set_from_values(r, 1.5, dt, 1.0, 0.0, 1e-5)
            slopes.append(estimate_dimension(Z, 1e-1, 4e-5).slope)
    assert np.mean(slopes) == pytest.approx(0.25, abs=0.07)


def test_compose_norm():
    p = bessel.integrate_besq(0.6, 0.0, 0.1, 1e-3, stream(10))
    q = bessel.integrate_besq(0.9, 0.0, 0.1, 1e-3, stream(11))
    zero = bessel.BesselPath(0.9, 0.0, 1e-3, np.zeros_like(p.values), 0.1)
    assert np.array_equal(bessel.compose_norm(p, zero).values, p.values)
    assert np.array_equal(bessel.compose_norm(p, q).values, bessel.compose_norm(q, p).values)
    assert bessel.compose_norm(p, q).d == pytest.approx(1.5)
    other = bessel.integrate_besq(0.9, 0.0, 0.1, 5e-4, stream(11))
    with pytest.raises(ParameterError):
        bessel.compose_norm(p, other)
