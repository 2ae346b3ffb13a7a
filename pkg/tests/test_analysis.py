import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from analysis import (
    ErrorKind,
    average_union_bound,
    error_probability_2ary,
    matched_filter_error_probability,
    pairwise_error_from_moments,
    q_function,
    separation_ratio,
    separation_ratio_spectral,
    statistics_moments,
    theorem2_gap,
    union_bound_mary,
)
from errors import DegenerateDifference, InvalidNoise
from frames import MeasurementMatrix, generate_gaussian, tighten
from signals import derive_seed, generate_hypotheses


def q_by_quadrature(x: float) -> float:
    """Q(x) = φ(x) ∫₀^∞ exp(−xu − u²/2) du"""
    integral, _ = integrate.quad(lambda u: math.exp(-x * u - 0.5 * u * u), 0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi) * integral


# ============ Q 函數 ============

def test_q_function_known_values():
    assert q_function(0.0) == 0.5
    assert q_function(math.inf) == 0.0
    assert q_function(-math.inf) == 1.0
    assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
def test_q_function_against_quadrature(x):
    assert q_function(x) == pytest.approx(q_by_quadrature(x), rel=1e-12)


@settings(max_examples=200)
@given(x=st.floats(min_value=-30.0, max_value=30.0))
def test_q_function_symmetry(x):
    assert q_function(-x) == pytest.approx(1.0 - q_function(x), abs=1e-15)


def test_q_function_strictly_decreasing():
    grid = np.linspace(-5.0, 8.0, 2001)
    assert np.all(np.diff(q_function(grid)) < 0.0)


def test_q_function_envelopes():
    x = np.linspace(0.1, 10.0, 200)
    density = np.exp(-0.5 * x ** 2) / math.sqrt(2.0 * math.pi)
    q = q_function(x)
    assert np.all(q < density / x)
    assert np.all(q > density * x / (1.0 + x ** 2))
    assert np.all(q <= 0.5 * np.exp(-0.5 * x ** 2))


# ============ 分離比 ============

def test_separation_ratio_for_row_orthonormal_frame(harmonic_frame):
    phi = harmonic_frame(8, 30)
    hypotheses = generate_hypotheses(30, 2, 2, 1.0, seed=1)
    d = hypotheses[0].values - hypotheses[1].values
    assert separation_ratio(phi, hypotheses[0], hypotheses[1]) == pytest.approx(np.linalg.norm(phi.entries @ d), rel=1e-12)


def test_separation_ratio_identity_rows(identity_rows):
    assert separation_ratio(identity_rows, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(math.sqrt(2.0))


def test_separation_ratio_spectral_form_agrees(gaussian_instance):
    phi, hypotheses = gaussian_instance(n=20, N=60, k=3, m=2, seed=4)
    assert separation_ratio_spectral(phi, hypotheses[0], hypotheses[1]) == pytest.approx(
        separation_ratio(phi, hypotheses[0], hypotheses[1]), rel=1e-10
    )


def test_separation_ratio_degenerate(identity_rows):
    with pytest.raises(DegenerateDifference):
        separation_ratio(identity_rows, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    # 差向量落在零空間
    with pytest.raises(DegenerateDifference):
        separation_ratio(identity_rows, [0.0, 0.0, 1.0], [0.0, 0.0, -1.0])


@pytest.mark.parametrize("alpha", [1e-3, 0.25, 3.0, 1e3])
def test_separation_ratio_invariant_to_matrix_scaling(gaussian_instance, alpha):
    phi, hypotheses = gaussian_instance(seed=12)
    scaled = MeasurementMatrix(alpha * phi.entries)
    assert separation_ratio(scaled, hypotheses[0], hypotheses[1]) == pytest.approx(
        separation_ratio(phi, hypotheses[0], hypotheses[1]), rel=1e-12
    )


# ============ 二元錯誤機率 ============

def test_error_probability_by_hand(identity_rows):
    root2 = math.sqrt(2.0)
    result = error_probability_2ary(identity_rows, [root2, 0.0, 0.0], [0.0, root2, 0.0], 1.0)
    assert result.argument == pytest.approx(1.0)
    assert result.probability == pytest.approx(q_function(1.0), rel=1e-14)
    assert result.kind is ErrorKind.EXACT_2ARY


def test_error_probability_tends_to_chance(gaussian_instance):
    phi, hypotheses = gaussian_instance(seed=2)
    result = error_probability_2ary(phi, hypotheses[0], hypotheses[1], 1e8)
    assert result.probability == pytest.approx(0.5, abs=1e-6)


def test_error_probability_rejects_bad_sigma(gaussian_instance):
    phi, hypotheses = gaussian_instance()
    for sigma in (0.0, -1.0, math.nan):
        with pytest.raises(InvalidNoise):
            error_probability_2ary(phi, hypotheses[0], hypotheses[1], sigma)


@pytest.mark.parametrize("c", [0.3, 1.0, 4.0])
def test_tightened_error_matches_matched_filter(gaussian_instance, c):
    phi, hypotheses = gaussian_instance(n=30, N=100, k=5, m=2, seed=7)
    s1, s2 = hypotheses[0], hypotheses[1]
    tightened = error_probability_2ary(tighten(phi, c), s1, s2, 0.4)
    matched = matched_filter_error_probability(phi, s1, s2, 0.4)
    assert tightened.probability == pytest.approx(matched.probability, rel=1e-10)
    d = s1.values - s2.values
    expected = np.linalg.norm(tighten(phi, c).entries @ d) / (2.0 * math.sqrt(c) * 0.4)
    assert tightened.argument == pytest.approx(expected, rel=1e-10)


# ============ 緊化不會縮小分離比 ============

def test_tightening_gap_by_hand():
    phi = MeasurementMatrix([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    equal = theorem2_gap(phi, [1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert equal.ratio_before == pytest.approx(1.0)
    assert equal.ratio_after == pytest.approx(1.0)
    assert equal.satisfied()

    strict = theorem2_gap(phi, [1.0, 0.0, 0.0], [0.0, -1.0, 0.0])
    assert strict.ratio_before == pytest.approx(5.0 / math.sqrt(17.0))
    assert strict.ratio_after == pytest.approx(math.sqrt(2.0))
    assert strict.relative_gap < 0.0


def test_tightening_never_lowers_ratio():
    shapes = [(20, 100), (40, 100), (80, 100)]
    worst = -math.inf
    for i in range(1000):
        n, N = shapes[i % 3]
        k = (1, 5, 10)[i % 3]
        phi = generate_gaussian(n, N, derive_seed(31, i, 0))
        hypotheses = generate_hypotheses(N, k, 2, 1.0, derive_seed(31, i, 1))
        gap = theorem2_gap(phi, hypotheses[0], hypotheses[1])
        assert gap.satisfied()
        worst = max(worst, gap.relative_gap)
    assert worst <= 1e-10


def test_tightening_gap_vanishes_for_tight_input():
    for i in range(50):
        phi = tighten(generate_gaussian(40, 100, derive_seed(8, i)), 2.0)
        hypotheses = generate_hypotheses(100, 5, 2, 1.0, derive_seed(9, i))
        gap = theorem2_gap(phi, hypotheses[0], hypotheses[1])
        assert abs(gap.relative_gap) <= 1e-10


# ============ 聯集界 ============

def test_union_bound_reduces_to_exact_for_two_hypotheses(gaussian_instance):
    phi, hypotheses = gaussian_instance(seed=5)
    exact = error_probability_2ary(phi, hypotheses[0], hypotheses[1], 0.3)
    bound = union_bound_mary(phi, hypotheses, 0.3, 0)
    assert bound.kind is ErrorKind.EXACT_2ARY
    assert bound.probability == pytest.approx(exact.probability, rel=1e-14)


def test_union_bound_symmetric_case(coordinate_set):
    phi = MeasurementMatrix(np.hstack([np.eye(6), np.zeros((6, 4))]))
    hypotheses = coordinate_set(10, range(6))
    sigma = 0.4
    bound = union_bound_mary(phi, hypotheses, sigma, 2)
    expected = 5 * q_function(math.sqrt(2.0) / (2.0 * sigma))
    assert bound.kind is ErrorKind.UNION_BOUND_MARY
    assert bound.probability == pytest.approx(expected, rel=1e-12)
    assert len(bound.arguments) == 5
    assert_allclose(bound.arguments, math.sqrt(2.0) / (2.0 * sigma), rtol=1e-12)


def test_union_bound_is_clamped(gaussian_instance):
    phi, hypotheses = gaussian_instance(k=2, m=10, seed=3)
    bound = union_bound_mary(phi, hypotheses, 100.0, 0)
    assert bound.probability == 1.0
    assert bound.raw_bound > 1.0


def test_union_bound_true_index_range(gaussian_instance):
    phi, hypotheses = gaussian_instance(m=3)
    with pytest.raises(IndexError):
        union_bound_mary(phi, hypotheses, 1.0, 3)


def test_average_union_bound(gaussian_instance):
    phi, hypotheses = gaussian_instance(k=2, m=4, seed=6)
    per_index = [union_bound_mary(phi, hypotheses, 0.2, t).raw_bound for t in range(4)]
    average = average_union_bound(phi, hypotheses, 0.2)
    assert average.raw_bound == pytest.approx(np.mean(per_index), rel=1e-14)
    assert average.kind is ErrorKind.UNION_BOUND_MARY


# ============ 統計量的聯合分佈 ============

@pytest.mark.parametrize("true_index", [0, 1])
def test_moments_reproduce_pairwise_error(gaussian_instance, true_index):
    phi, hypotheses = gaussian_instance(n=25, N=80, k=4, m=2, seed=10)
    mean, covariance = statistics_moments(phi, hypotheses, 0.35, true_index)
    other = 1 - true_index
    from_moments = pairwise_error_from_moments(mean, covariance, true_index, other)
    exact = error_probability_2ary(phi, hypotheses[0], hypotheses[1], 0.35)
    assert from_moments == pytest.approx(exact.probability, rel=1e-10)


def test_moments_shapes_and_symmetry(gaussian_instance):
    phi, hypotheses = gaussian_instance(k=2, m=5, seed=1)
    mean, covariance = statistics_moments(phi, hypotheses, 0.5, 3)
    assert mean.shape == (5,)
    assert covariance.shape == (5, 5)
    assert_allclose(covariance, covariance.T)
    assert np.all(np.linalg.eigvalsh(covariance) >= -1e-12)
    assert int(np.argmax(mean)) == 3
