import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import gapsets
from regenset.errors import EmptySetError, ParameterError
from regenset.fractal import box_count, cantor_set, estimate_dimension, local_dimension_profile
from regenset.sampler import PINNED, StableParams, sample_gapsets
from regenset.sets import GapSet, intersect

FULL = GapSet.interval(0.0, 1.0)


def brute_box_count(Z, eps):
    k = math.ceil(1 / eps)
    n = 0
    for j in range(k):
        lo, hi = j * eps, (j + 1) * eps
        last = j == k - 1
        hit = np.any((Z.starts <= hi if last else Z.starts < hi) & (Z.ends >= lo))
        n += bool(hit)
    return n


def test_box_count_examples():
    assert box_count(FULL, 2**-4) == 16
    assert box_count(GapSet.points([0.5]), 0.25) == 1
    assert box_count(GapSet.points([0.5]), 0.1) == 1
    assert box_count(GapSet.empty(), 0.1) == 0
    assert box_count(GapSet.points([1.0]), 0.25) == 1


def test_box_count_respects_resolution():
    with pytest.raises(ParameterError):
        box_count(GapSet.interval(0, 1, resolution=1e-3), 1e-4)


@given(gapsets(), st.sampled_from([0.5, 0.3, 0.1, 0.037, 0.01]))
def test_box_count_matches_enumeration(Z, eps):
    assert box_count(Z, eps) == brute_box_count(Z, eps)


@given(gapsets(), gapsets())
def test_monotone_and_sandwich(A, B):
    sub = intersect(A, B)
    counts = [box_count(A, e) for e in 2.0 ** -np.arange(1, 9)]
    assert counts == sorted(counts)
    for e in (0.3, 0.07, 0.01):
        assert box_count(sub, e) <= box_count(A, e)


def test_full_interval_slope():
    est = estimate_dimension(FULL, 0.1, 1e-4)
    assert est.slope == pytest.approx(1.0, abs=0.02)
    assert [e for e, _ in est.scales] == sorted((e for e, _ in est.scales), reverse=True)


def test_finite_set_slope():
    Z = GapSet.points(np.arange(20) / 20 + 0.01)
    est = estimate_dimension(Z, 1e-3, 1e-5)
    assert est.slope == pytest.approx(0.0, abs=0.1)


def test_estimate_errors_and_flags():
    with pytest.raises(EmptySetError):
        estimate_dimension(GapSet.empty(), 0.1, 0.01)
    with pytest.raises(ParameterError):
        estimate_dimension(FULL, 0.1, 0.01, levels=3)
    with pytest.raises(ParameterError):
        estimate_dimension(GapSet.interval(0, 1, resolution=1e-3), 0.1, 2e-3)
    assert "narrow-scale-range" in estimate_dimension(FULL, 0.1, 0.02).flags


def test_cantor_calibration():
    Z = cantor_set(7)
    est = estimate_dimension(Z, 0.1, 4 * Z.resolution)
    assert est.slope == pytest.approx(math.log(2) / math.log(3), abs=0.03)
    assert len(Z) == 2**7


def test_brownian_zero_set_dimension():
    Zs = sample_gapsets(StableParams(1.0), PINNED, 1e-6, 200, seed=21)
    slopes = [estimate_dimension(Z, 1e-1, 1e-4).slope for Z in Zs]
    assert np.mean(slopes) == pytest.approx(0.5, abs=0.05)


def test_local_profile_full_interval():
    prof = local_dimension_profile(FULL, 8, eps_range=(1 / 16, 1 / 8192))
    assert len(prof) == 8
    for (lo, hi), est in prof:
        assert est is not None and est.slope == pytest.approx(1.0, abs=0.02)


def test_local_profile_flags_empty_windows():
    Z = GapSet.interval(0.1, 0.45, resolution=1e-6)
    prof = local_dimension_profile(Z, 4)
    assert [est is None for _, est in prof] == [False, False, True, True]


def test_local_profile_rejects_one_window():
    with pytest.raises(ParameterError):
        local_dimension_profile(FULL, 1)


def test_dim_estimate_serializes_table():
    d = estimate_dimension(FULL, 0.1, 1e-3).to_dict()
    assert {"slope", "stderr", "r2", "scales"} <= set(d)
    assert all(len(row) == 2 for row in d["scales"])
