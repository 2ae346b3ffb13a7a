import numpy as np
import pytest
from numpy.testing import assert_allclose

from classifier import (
    ClassifierKind,
    CompressiveClassifier,
    classify,
    correlation_statistics,
    matched_filter_statistics,
)
from errors import DimensionMismatch, RankDeficient
from frames import MeasurementMatrix, generate_gaussian, tighten
from signals import NoiseModel, derive_seed, generate_hypotheses, sample_noise


def dense_correlation(y, phi, hypotheses):
    return np.array([y @ phi.entries @ s.values - 0.5 * np.sum((phi.entries @ s.values) ** 2) for s in hypotheses.signals])


def dense_matched_filter(y, phi, hypotheses):
    inverse = np.linalg.inv(phi.entries @ phi.entries.T)
    projector = phi.entries.T @ inverse @ phi.entries
    return np.array([
        y @ inverse @ phi.entries @ s.values - 0.5 * np.sum((projector @ s.values) ** 2)
        for s in hypotheses.signals
    ])


# ============ 相關分類器 ============

def test_noiseless_correct_decision(harmonic_frame):
    phi = harmonic_frame(6, 20)
    hypotheses = generate_hypotheses(20, 2, 2, 1.0, seed=5)
    phi_s = hypotheses.matrix @ phi.entries.T
    stats = correlation_statistics(phi_s[0], phi, hypotheses)
    assert stats.values[0] == pytest.approx(0.5 * phi_s[0] @ phi_s[0])
    assert stats.values[1] == pytest.approx(phi_s[0] @ phi_s[1] - 0.5 * phi_s[1] @ phi_s[1])
    assert stats.values[0] > stats.values[1]
    assert stats.decided_index == 0
    assert stats.kind is ClassifierKind.CORRELATION


def test_zero_measurement_ties_to_lowest_index(coordinate_set):
    phi = MeasurementMatrix(np.hstack([np.eye(3), np.zeros((3, 2))]))
    hypotheses = coordinate_set(5, [1, 0, 2])
    stats = correlation_statistics(np.zeros(3), phi, hypotheses)
    assert_allclose(stats.values, [-0.5, -0.5, -0.5])
    assert stats.decided_index == 0


def test_correlation_matches_dense_evaluation(gaussian_instance):
    phi, hypotheses = gaussian_instance(n=30, N=80, k=4, m=5, seed=2)
    y = np.random.default_rng(1).standard_normal(30)
    assert_allclose(correlation_statistics(y, phi, hypotheses).values, dense_correlation(y, phi, hypotheses), rtol=1e-12, atol=1e-12)


def test_measurement_dimension_checked(gaussian_instance):
    phi, hypotheses = gaussian_instance()
    with pytest.raises(DimensionMismatch):
        correlation_statistics(np.zeros(phi.n + 1), phi, hypotheses)
    with pytest.raises(DimensionMismatch):
        CompressiveClassifier(generate_gaussian(10, 50, 0), hypotheses)


# ============ 匹配濾波分類器 ============

def test_matched_filter_equals_correlation_for_row_orthonormal(harmonic_frame):
    phi = harmonic_frame(10, 40)
    hypotheses = generate_hypotheses(40, 3, 4, 1.0, seed=3)
    y = np.random.default_rng(7).standard_normal(10)
    assert_allclose(
        matched_filter_statistics(y, phi, hypotheses).values,
        correlation_statistics(y, phi, hypotheses).values,
        rtol=1e-12, atol=1e-13,
    )


def test_matched_filter_matches_explicit_inverse(gaussian_instance):
    phi, hypotheses = gaussian_instance(n=25, N=60, k=3, m=4, seed=9)
    y = np.random.default_rng(2).standard_normal(25)
    stats = matched_filter_statistics(y, phi, hypotheses)
    assert stats.kind is ClassifierKind.MATCHED_FILTER
    assert_allclose(stats.values, dense_matched_filter(y, phi, hypotheses), rtol=1e-10, atol=1e-10)


def test_matched_filter_noiseless(gaussian_instance):
    phi, hypotheses = gaussian_instance(n=40, N=100, k=1, m=10, seed=4)
    for t in range(hypotheses.m):
        y = phi.entries @ hypotheses[t].values
        assert matched_filter_statistics(y, phi, hypotheses).decided_index == t


def test_matched_filter_rank_deficient():
    phi = MeasurementMatrix([[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]])
    hypotheses = generate_hypotheses(4, 1, 2, 1.0, seed=0)
    with pytest.raises(RankDeficient):
        matched_filter_statistics(np.zeros(2), phi, hypotheses)


# ============ 判決 ============

@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_classify_noiseless_mary(gaussian_instance, kind):
    phi, hypotheses = gaussian_instance(n=40, N=100, k=5, m=10, seed=6)
    for t in range(hypotheses.m):
        assert classify(phi.entries @ hypotheses[t].values, phi, hypotheses, kind) == t


def test_decision_invariant_to_positive_scaling(gaussian_instance):
    phi, hypotheses = gaussian_instance(m=6, k=2, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = rng.standard_normal(phi.n)
        stats = correlation_statistics(y, phi, hypotheses)
        for alpha in (1e-3, 0.5, 7.0, 1e4):
            assert int(np.argmax(alpha * stats.values)) == stats.decided_index


def test_batch_matches_single(gaussian_instance):
    phi, hypotheses = gaussian_instance(n=20, N=60, k=2, m=5, seed=8)
    clf = CompressiveClassifier(phi, hypotheses, ClassifierKind.MATCHED_FILTER)
    Y = np.random.default_rng(4).standard_normal((12, 20))
    batch = clf.statistics_batch(Y)
    for row, y in zip(batch, Y):
        assert_allclose(row, clf.statistics(y).values, rtol=1e-12, atol=1e-12)
    assert np.array_equal(clf.classify_batch(Y), [clf.statistics(y).decided_index for y in Y])


# ============ 緊化後的等價性 ============

def test_tightened_correlation_equals_scaled_matched_filter():
    shapes = [(20, 100), (40, 100), (80, 100)]
    for i in range(500):
        n, N = shapes[i % 3]
        m, k = (2, 1) if i % 2 else (10, 5)
        rng = np.random.default_rng(derive_seed(77, i, 0))
        c = float(rng.uniform(0.2, 5.0))
        phi = generate_gaussian(n, N, derive_seed(77, i, 1))
        phi_hat = tighten(phi, c)
        hypotheses = generate_hypotheses(N, k, m, 1.0, derive_seed(77, i, 2))
        true_index = i % m

        # 同一個 x = s_T + w 分別經過 Φ 與 Φ̂
        x = hypotheses[true_index].values + sample_noise(NoiseModel(0.3, N), derive_seed(77, i, 3))
        matched = matched_filter_statistics(phi.entries @ x, phi, hypotheses)
        tightened = correlation_statistics(phi_hat.entries @ x, phi_hat, hypotheses)

        scaled = c * matched.values
        assert_allclose(tightened.values, scaled, rtol=1e-9, atol=1e-9 * np.max(np.abs(scaled)))
        assert tightened.decided_index == matched.decided_index
