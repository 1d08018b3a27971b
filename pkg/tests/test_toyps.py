import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regenset._rng import stream
from regenset.errors import ParameterError
from regenset.sampler import EXPONENTIAL, StableParams, default_step, sample_path, to_gapset
from regenset.sets import GapSet
from regenset.toyps import (
    DiscreteLaw,
    ToyVector,
    chain_expectations,
    disjoint_indicator,
    estimate_law,
    law_from_counts,
    pattern_counts,
    gram_projection_check,
    occupancy_pattern,
    product,
    product_checks,
    product_law,
    random_law,
    random_vector,
    rebase,
    spatial_projection_chain,
    unit_vector,
)

seeds = st.integers(0, 2**32 - 1)


def test_law_validation():
    with pytest.raises(ParameterError):
        DiscreteLaw(2, [0.5, 0.5])
    with pytest.raises(ParameterError):
        DiscreteLaw(1, [1.0, 0.0])
    with pytest.raises(ParameterError):
        DiscreteLaw(1, [0.6, 0.6])
    with pytest.raises(ParameterError):
        DiscreteLaw(11, np.full(2**11, 2.0**-11))


def test_estimate_law_rejections():
    with pytest.raises(ParameterError):
        estimate_law(1.0, 2, 1000, smoothing=0.0)
    with pytest.raises(ParameterError):
        estimate_law(1.0, 2, 399)


def test_occupancy_pattern_closed_cells():
    assert occupancy_pattern(GapSet.empty(), 4) == 0
    assert occupancy_pattern(GapSet.points([0.5]), 4) == 0b0110
    assert occupancy_pattern(GapSet.interval(0.0, 0.1), 4) == 0b0001


def test_single_cell_law():
    law = estimate_law(1.0, 1, 2000, seed=51)
    assert law.probs[0] + law.probs[1] == pytest.approx(1.0)
    # the exponential delay exceeds the horizon with probability exp(-1)
    se = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 2000)
    assert abs(law.empty_prob - math.exp(-1)) < 3 * se + 1e-3


def test_empty_pattern_mass_at_four_cells():
    law = estimate_law(1.0, 4, 4000, seed=52)
    se = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 4000)
    assert abs(law.empty_prob - math.exp(-1)) < 3 * se + 1e-3


def test_marginal_of_product_law():
    rng = stream(53)
    a, b = random_law(2, rng), random_law(3, rng)
    P = product_law(a, b)
    np.testing.assert_allclose(P.marginal(0, 2).probs, a.probs, atol=1e-15)
    np.testing.assert_allclose(P.marginal(2, 5).probs, b.probs, atol=1e-15)


@given(seeds, st.integers(1, 6))
def test_rebase_properties(seed, n):
    rng = stream(seed)
    P, Q = random_law(n, rng), random_law(n, rng)
    v = random_vector(P, rng)
    assert rebase(v, P).distance(v) < 1e-12
    assert rebase(rebase(v, Q), P).distance(v) < 1e-12
    assert rebase(v, Q).norm() == pytest.approx(v.norm(), abs=1e-12)
    assert rebase(unit_vector(P), Q).distance(unit_vector(Q)) < 1e-12


@given(seeds, st.integers(1, 4), st.integers(1, 4), st.integers(1, 2))
def test_product_properties(seed, n1, n2, n3):
    rng = stream(seed)
    T = random_law(n1 + n2 + n3, rng)
    u, v, w = (random_vector(random_law(k, rng), rng) for k in (n1, n2, n3))
    uv = product(u, v, T.marginal(0, n1 + n2))
    assert uv.norm() == pytest.approx(1.0, abs=1e-12)
    left = product(uv, w, T)
    right = product(u, product(v, w, T.marginal(n1, n1 + n2 + n3)), T)
    assert left.distance(right) < 1e-12
    # rebasing a factor first does not change the product
    Q = random_law(n1, rng)
    assert product(rebase(u, Q), v, uv.law).distance(uv) < 1e-12


@given(seeds, st.integers(2, 8))
def test_unit_factorizes(seed, n):
    rng = stream(seed)
    T = random_law(n, rng)
    u = unit_vector(T)
    assert u.norm() == pytest.approx(1.0)
    m = int(rng.integers(1, n))
    U = product(unit_vector(T.marginal(0, m)), unit_vector(T.marginal(m, n)), T)
    assert U.distance(u) < 1e-12


def test_product_dimension_mismatch():
    rng = stream(54)
    v = random_vector(random_law(2, rng), rng)
    with pytest.raises(ParameterError):
        product(v, v, random_law(3, rng))


def test_product_checks_small():
    r = product_checks(50, seed=55)
    assert max(r["isometry"], r["associativity"], r["unit"]) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 8])
def test_chain_structure(n):
    rng = stream(56, n)
    a, b = random_law(n, rng), random_law(n, rng)
    chain = spatial_projection_chain(a, b, n)
    assert len(chain) == math.ceil(math.log2(n)) + 1
    for op in chain:
        assert set(np.unique(op)) <= {0.0, 1.0}
    for lo, hi in zip(chain, chain[1:]):
        assert np.all(lo <= hi)
    np.testing.assert_array_equal(chain[-1], disjoint_indicator(n))
    e = chain_expectations(a, b, chain)
    assert e == sorted(e)
    assert e[-1] == pytest.approx(float(a.probs @ disjoint_indicator(n) @ b.probs))


def test_chain_depth_zero_is_either_empty():
    rng = stream(57)
    a, b = random_law(2, rng), random_law(2, rng)
    op = spatial_projection_chain(a, b, 2)[0]
    p = np.arange(4)
    expect = (p[:, None] == 0) | (p[None, :] == 0)
    np.testing.assert_array_equal(op, expect.astype(float))


def test_chain_bisects_odd_sizes():
    rng = stream(58)
    a = random_law(3, rng)
    depth1 = spatial_projection_chain(a, a, 3)[1]
    p = np.arange(8)
    # blocks {0} and {1, 2}
    e0, e12 = (p & 0b001) == 0, (p & 0b110) == 0
    expect = (e0[:, None] | e0[None, :]) & (e12[:, None] | e12[None, :])
    np.testing.assert_array_equal(depth1, expect.astype(float))
    with pytest.raises(ParameterError):
        spatial_projection_chain(a, a, 2)


def test_chain_expectation_matches_sampled_pairs():
    n, N, M = 8, 25_600, 4000
    a = estimate_law(0.5, n, N, seed=59)
    b = estimate_law(0.5, n, N, seed=60)
    exact = chain_expectations(a, b, spatial_projection_chain(a, b, n))[-1]
    params = StableParams(0.5)
    h = default_step(params, 1e-3)
    hits = 0
    for i in range(M):
        z1, z2 = (to_gapset(sample_path(params, EXPONENTIAL, 1.0, h, stream(61, i, j)), 1.0, 1e-3) for j in (0, 1))
        hits += (occupancy_pattern(z1, n) & occupancy_pattern(z2, n)) == 0
    se = math.sqrt(exact * (1 - exact) / M)
    # smoothing moves each law by at most 0.5 * 2**n / N in total variation
    assert abs(hits / M - exact) < 3 * se + 2 * 0.5 * 2**n / N


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gram_projection(n):
    rng = stream(62, n)
    assert gram_projection_check(random_law(n, rng), random_law(n, rng)) < 1e-8


def test_gram_limits():
    rng = stream(63)
    with pytest.raises(ParameterError):
        gram_projection_check(random_law(8, rng), random_law(8, rng))


def test_law_json_round_trip():
    law = random_law(3, stream(64))
    back = DiscreteLaw.from_dict(json.loads(json.dumps(law.to_dict())))
    np.testing.assert_array_equal(back.probs, law.probs)
    assert back.n == 3


def test_vector_rejects_wrong_size():
    law = random_law(2, stream(65))
    with pytest.raises(ParameterError):
        ToyVector(law, np.ones(3))


def test_law_from_counts():
    law = law_from_counts([3, 0, 1, 0], smoothing=1.0)
    np.testing.assert_allclose(law.probs, [4 / 8, 1 / 8, 2 / 8, 1 / 8])
    with pytest.raises(ParameterError):
        law_from_counts([1, 2, 3])
    with pytest.raises(ParameterError):
        law_from_counts([1, 2], smoothing=0.0)


def test_estimate_law_is_smoothed_counts():
    counts = pattern_counts(1.0, 2, 400, seed=66)
    assert counts.sum() == 400
    np.testing.assert_array_equal(estimate_law(1.0, 2, 400, 0.5, seed=66).probs, law_from_counts(counts, 0.5).probs)
