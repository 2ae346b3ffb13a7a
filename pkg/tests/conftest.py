import numpy as np
import pytest

from frames import MeasurementMatrix, generate_gaussian
from signals import HypothesisSet, SparseSignal, derive_seed, generate_hypotheses


def build_harmonic_frame(n: int, N: int, scale: float = 1.0) -> MeasurementMatrix:
    """實數調和框架：ΦΦᵀ = scale²·I_n，每欄範數 scale·√(n/N)（n 為偶數）"""
    assert n % 2 == 0 and n < N
    j = np.arange(N)
    rows = []
    for l in range(1, n // 2 + 1):
        rows.append(np.cos(2 * np.pi * l * j / N))
        rows.append(np.sin(2 * np.pi * l * j / N))
    return MeasurementMatrix(scale * np.sqrt(2.0 / N) * np.array(rows))


def coordinate_hypotheses(N: int, indices, norm: float = 1.0) -> HypothesisSet:
    signals = []
    for i in indices:
        s = np.zeros(N)
        s[i] = norm
        signals.append(SparseSignal(s, 1))
    return HypothesisSet(tuple(signals), norm)


@pytest.fixture
def harmonic_frame():
    return build_harmonic_frame


@pytest.fixture
def coordinate_set():
    return coordinate_hypotheses


@pytest.fixture
def gaussian_instance():
    """(Φ, H)：高斯 n×N 矩陣與 m 個 k-稀疏假設"""
    def build(n=40, N=100, k=1, m=2, seed=0):
        phi = generate_gaussian(n, N, derive_seed(seed, 0))
        hypotheses = generate_hypotheses(N, k, m, 1.0, derive_seed(seed, 1))
        return phi, hypotheses
    return build


@pytest.fixture
def identity_rows():
    return MeasurementMatrix(np.hstack([np.eye(2), np.zeros((2, 1))]))
