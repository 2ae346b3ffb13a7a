"""
稀疏假設訊號與高斯雜訊

同一個實驗種子透過 SeedSequence 的 spawn_key 拆成多條串流，
每條串流只由 (種子, 鍵值) 決定，與執行順序及執行緒數無關
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

import config
from errors import (
    DimensionMismatch,
    HypothesisViolation,
    Infeasible,
    InvalidConstant,
    InvalidNoise,
    MatrixFormatError,
)
from frames import FloatArray, MeasurementMatrix, SeedLike, format_array, parse_array


def derive_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """計數器式種子衍生：(seed, keys) → 獨立串流"""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))


# 資料模型
@dataclass(frozen=True, eq=False)
class SparseSignal:
    """k-稀疏訊號 s ∈ Λ_k"""
    values: FloatArray
    sparsity_k: int

    def __post_init__(self):
        try:
            values = np.array(self.values, dtype=np.float64)
        except ValueError as e:
            raise DimensionMismatch(f"signal values are not a real vector: {e}") from e
        if values.ndim != 1:
            raise DimensionMismatch(f"signal must be a vector, got {values.ndim}-D")
        if self.sparsity_k < 1:
            raise InvalidConstant(f"sparsity k must be >= 1, got {self.sparsity_k}")
        nnz = int(np.count_nonzero(values))
        if nnz > self.sparsity_k:
            raise HypothesisViolation(f"signal has {nnz} nonzeros, more than declared sparsity k={self.sparsity_k}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: npt.ArrayLike) -> "SparseSignal":
        try:
            values = np.asarray(values, dtype=np.float64)
        except ValueError as e:
            raise DimensionMismatch(f"signal values are not a real vector: {e}") from e
        return cls(values, max(1, int(np.count_nonzero(values))))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.values))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class HypothesisSet:
    """m 個兩兩正交、等範數的稀疏訊號"""
    signals: Tuple[SparseSignal, ...]
    common_norm: float

    def __post_init__(self):
        signals = tuple(self.signals)
        object.__setattr__(self, "signals", signals)
        if len(signals) < 2:
            raise HypothesisViolation(f"need m >= 2 hypotheses, got {len(signals)}")
        lengths = {s.N for s in signals}
        if len(lengths) != 1:
            raise DimensionMismatch(f"hypothesis signals have different lengths {sorted(lengths)}")
        norm = float(self.common_norm)
        if not math.isfinite(norm) or norm <= 0.0:
            raise InvalidConstant(f"common norm must be positive, got {norm!r}")

        stacked = self.matrix
        norms = np.linalg.norm(stacked, axis=1)
        worst = int(np.argmax(np.abs(norms - norm)))
        if abs(norms[worst] - norm) > config.HYPOTHESIS_TOL * norm:
            raise HypothesisViolation(
                f"equal-norm violated: ||s_{worst}|| = {norms[worst]:.17g}, common norm {norm:.17g}"
            )
        inner = stacked @ stacked.T
        np.fill_diagonal(inner, 0.0)
        i, j = np.unravel_index(int(np.argmax(np.abs(inner))), inner.shape)
        if abs(inner[i, j]) > config.HYPOTHESIS_TOL * norm ** 2:
            raise HypothesisViolation(f"orthogonality violated: <s_{i}, s_{j}> = {inner[i, j]:.3e}")

    @classmethod
    def from_signals(cls, signals: Sequence[SparseSignal]) -> "HypothesisSet":
        return cls(tuple(signals), signals[0].norm if signals else 1.0)

    def __len__(self) -> int:
        return len(self.signals)

    def __getitem__(self, index: int) -> SparseSignal:
        return self.signals[index]

    @property
    def m(self) -> int:
        return len(self.signals)

    @property
    def N(self) -> int:
        return self.signals[0].N

    @cached_property
    def matrix(self) -> FloatArray:
        """m × N，第 i 列為 s_i"""
        return np.stack([s.values for s in self.signals])


@dataclass(frozen=True)
class NoiseModel:
    """n ~ N(0, σ² I_N)"""
    sigma: float
    dimension: int

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma <= 0.0:
            raise InvalidNoise(f"noise sigma must be positive and finite, got {self.sigma!r}")
        if self.dimension < 1:
            raise DimensionMismatch(f"noise dimension must be >= 1, got {self.dimension}")


# 產生器
def generate_hypotheses(N: int, k: int, m: int, norm: float, seed: SeedLike) -> HypothesisSet:
    """互斥隨機支撐集 + 高斯非零值，再縮放到指定範數"""
    if k < 1:
        raise InvalidConstant(f"sparsity k must be >= 1, got {k}")
    if m < 2:
        raise HypothesisViolation(f"need m >= 2 hypotheses, got {m}")
    if m * k > N:
        raise Infeasible(f"disjoint supports need m*k <= N, got m*k = {m * k} > N = {N}")
    if not math.isfinite(norm) or norm <= 0.0:
        raise InvalidConstant(f"signal norm must be positive, got {norm!r}")

    rng = np.random.default_rng(seed)
    supports = rng.permutation(N)[:m * k].reshape(m, k)
    amplitudes = rng.standard_normal((m, k))
    while np.any(amplitudes == 0.0):
        amplitudes = rng.standard_normal((m, k))
    amplitudes *= norm / np.linalg.norm(amplitudes, axis=1, keepdims=True)

    signals = []
    for support, values in zip(supports, amplitudes):
        s = np.zeros(N)
        s[support] = values
        signals.append(SparseSignal(s, k))
    return HypothesisSet(tuple(signals), norm)


def sample_noise(noise: NoiseModel, seed: SeedLike) -> FloatArray:
    rng = np.random.default_rng(seed)
    return noise.sigma * rng.standard_normal(noise.dimension)


def sample_noisy_measurement(
    phi: MeasurementMatrix, s: SparseSignal, noise: NoiseModel, seed: SeedLike
) -> FloatArray:
    """y = Φ(s + w)，雜訊加在訊號空間"""
    if s.N != phi.N or noise.dimension != phi.N:
        raise DimensionMismatch(
            f"Phi is {phi.n}x{phi.N} but signal length is {s.N} and noise dimension {noise.dimension}"
        )
    return phi.entries @ (s.values + sample_noise(noise, seed))


def snr_to_sigma(snr_db: float, signal_norm: float) -> float:
    """SNR = ‖s‖²/σ²（σ² 為每個座標的雜訊變異數）"""
    if not math.isfinite(signal_norm) or signal_norm <= 0.0:
        raise InvalidConstant(f"signal norm must be positive, got {signal_norm!r}")
    return signal_norm / 10.0 ** (snr_db / 20.0)


def sigma_to_snr(sigma: float, signal_norm: float) -> float:
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise InvalidNoise(f"noise sigma must be positive, got {sigma!r}")
    return 10.0 * math.log10(signal_norm ** 2 / sigma ** 2)


# 文字檔讀寫（與矩陣相同格式）
def write_signal(filepath: str, s: SparseSignal) -> None:
    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(format_array(s.values[np.newaxis, :]))


def read_signal(filepath: str) -> SparseSignal:
    with open(filepath, 'r', encoding='utf-8') as f:
        values = parse_array(f.read())
    if values.shape[0] != 1:
        raise MatrixFormatError(f"signal file must have header '1 N', got {values.shape[0]} rows")
    return SparseSignal.from_values(values[0])


def write_hypotheses(filepath: str, hypotheses: HypothesisSet) -> None:
    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(format_array(hypotheses.matrix))


def read_hypotheses(filepath: str) -> HypothesisSet:
    with open(filepath, 'r', encoding='utf-8') as f:
        values = parse_array(f.read())
    return HypothesisSet.from_signals([SparseSignal.from_values(row) for row in values])
