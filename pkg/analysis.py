"""
理論錯誤機率

二元錯誤機率 P_E = Q(‖Φd‖² / (2σ‖ΦᵀΦd‖))，d = s1 − s2
m 元以聯集界 Σ_{i≠T} Q(·) 上界
"""
import math
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field
from scipy import special

import config
from errors import DegenerateDifference, DimensionMismatch, InvalidNoise
from frames import FloatArray, MeasurementMatrix, decompose, row_space_projector, tighten
from signals import HypothesisSet, SparseSignal

SignalLike = Union[SparseSignal, npt.ArrayLike]


class ErrorKind(str, Enum):
    EXACT_2ARY = "exact_2ary"
    UNION_BOUND_MARY = "union_bound_mary"


class TheoreticalError(BaseModel):
    """
    probability 為回報值（已截斷到 [0, 1]）
    聯集界的原始總和保留在 raw_bound，argument 為最小（主導）的 Q 參數
    """
    probability: float = Field(ge=0.0, le=1.0)
    argument: float
    kind: ErrorKind
    raw_bound: Optional[float] = None
    arguments: List[float] = []


def q_function(x: npt.ArrayLike) -> Union[float, FloatArray]:
    """Q(x) = ½ erfc(x/√2)，高斯上尾機率"""
    result = 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def _difference(s1: SignalLike, s2: SignalLike) -> FloatArray:
    a = s1.values if isinstance(s1, SparseSignal) else np.asarray(s1, dtype=np.float64)
    b = s2.values if isinstance(s2, SparseSignal) else np.asarray(s2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"signals have shapes {a.shape} and {b.shape}")
    return a - b


def _checked_difference(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike) -> FloatArray:
    d = _difference(s1, s2)
    if d.shape != (phi.N,):
        raise DimensionMismatch(f"Phi is {phi.n}x{phi.N} but signals have length {d.shape[0]}")
    phi.require_full_rank()
    d_norm = float(np.linalg.norm(d))
    if d_norm == 0.0:
        raise DegenerateDifference("s1 == s2: separation ratio is 0/0")
    if np.linalg.norm(phi.entries @ d) <= config.RANK_TOL * phi.singular_values[0] * d_norm:
        raise DegenerateDifference("Phi(s1 - s2) = 0: difference lies in the null space of Phi, ratio is 0/0")
    return d


def separation_ratio(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike) -> float:
    """‖Φd‖² / ‖ΦᵀΦd‖，ΦΦᵀ = I 時化簡為 ‖Φd‖"""
    d = _checked_difference(phi, s1, s2)
    projected = phi.entries @ d
    back = phi.entries.T @ projected
    return float(projected @ projected) / float(np.linalg.norm(back))


def separation_ratio_spectral(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike) -> float:
    """奇異值形式 Σσ²u² / √(Σσ⁴u²)，u = Vᵀd"""
    d = _checked_difference(phi, s1, s2)
    factors = decompose(phi)
    u = (factors.V.T @ d)[:phi.n]
    s2_u2 = factors.singular_values ** 2 * u ** 2
    return float(np.sum(s2_u2)) / math.sqrt(float(np.sum(factors.singular_values ** 2 * s2_u2)))


def _checked_sigma(sigma: float) -> float:
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise InvalidNoise(f"noise sigma must be positive and finite, got {sigma!r}")
    return float(sigma)


def error_probability_2ary(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike, sigma: float) -> TheoreticalError:
    sigma = _checked_sigma(sigma)
    argument = separation_ratio(phi, s1, s2) / (2.0 * sigma)
    return TheoreticalError(
        probability=q_function(argument),
        argument=argument,
        kind=ErrorKind.EXACT_2ARY,
        arguments=[argument],
    )


def matched_filter_error_probability(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike, sigma: float) -> TheoreticalError:
    """Q(‖P_Φᵀ d‖ / (2σ))，匹配濾波分類器與緊化後相關分類器共同的錯誤機率"""
    sigma = _checked_sigma(sigma)
    d = _checked_difference(phi, s1, s2)
    argument = float(np.linalg.norm(row_space_projector(phi) @ d)) / (2.0 * sigma)
    return TheoreticalError(
        probability=q_function(argument),
        argument=argument,
        kind=ErrorKind.EXACT_2ARY,
        arguments=[argument],
    )


class Theorem2Gap(NamedTuple):
    ratio_before: float
    ratio_after: float

    @property
    def relative_gap(self) -> float:
        """(before − after) / after，≤ 0 表示緊化沒有讓比值變小"""
        return (self.ratio_before - self.ratio_after) / self.ratio_after

    def satisfied(self, slack: float = config.THEOREM2_SLACK) -> bool:
        return self.ratio_before <= self.ratio_after + slack * self.ratio_after


def theorem2_gap(phi: MeasurementMatrix, s1: SignalLike, s2: SignalLike) -> Theorem2Gap:
    return Theorem2Gap(
        ratio_before=separation_ratio(phi, s1, s2),
        ratio_after=separation_ratio(tighten(phi, 1.0), s1, s2),
    )


def _pairwise_arguments(phi: MeasurementMatrix, hypotheses: HypothesisSet, sigma: float, true_index: int) -> List[float]:
    if hypotheses.N != phi.N:
        raise DimensionMismatch(f"Phi has N={phi.N} columns but hypotheses have length {hypotheses.N}")
    if not 0 <= true_index < hypotheses.m:
        raise IndexError(f"true_index {true_index} out of range for m={hypotheses.m}")
    s_true = hypotheses[true_index]
    return [
        separation_ratio(phi, s_true, s_i) / (2.0 * sigma)
        for i, s_i in enumerate(hypotheses.signals)
        if i != true_index
    ]


def union_bound_mary(phi: MeasurementMatrix, hypotheses: HypothesisSet, sigma: float, true_index: int) -> TheoreticalError:
    sigma = _checked_sigma(sigma)
    arguments = _pairwise_arguments(phi, hypotheses, sigma, true_index)
    raw = float(np.sum(q_function(np.array(arguments))))
    return TheoreticalError(
        probability=min(raw, 1.0),
        argument=min(arguments),
        kind=ErrorKind.EXACT_2ARY if hypotheses.m == 2 else ErrorKind.UNION_BOUND_MARY,
        raw_bound=raw,
        arguments=arguments,
    )


def average_union_bound(phi: MeasurementMatrix, hypotheses: HypothesisSet, sigma: float) -> TheoreticalError:
    """等先驗機率下對 T 平均的聯集界"""
    sigma = _checked_sigma(sigma)
    bounds = [union_bound_mary(phi, hypotheses, sigma, t) for t in range(hypotheses.m)]
    raw = float(np.mean([b.raw_bound for b in bounds]))
    return TheoreticalError(
        probability=min(raw, 1.0),
        argument=min(b.argument for b in bounds),
        kind=ErrorKind.UNION_BOUND_MARY,
        raw_bound=raw,
    )


def statistics_moments(
    phi: MeasurementMatrix, hypotheses: HypothesisSet, sigma: float, true_index: int
) -> Tuple[FloatArray, FloatArray]:
    """
    H_T 下 (t_1..t_m) 的聯合高斯分佈
    μ_i = ⟨Φs_i, Φs_T⟩ − ½‖Φs_i‖²
    Σ_ij = σ² ⟨ΦᵀΦs_i, ΦᵀΦs_j⟩
    """
    sigma = _checked_sigma(sigma)
    if not 0 <= true_index < hypotheses.m:
        raise IndexError(f"true_index {true_index} out of range for m={hypotheses.m}")
    projected = hypotheses.matrix @ phi.entries.T
    mean = projected @ projected[true_index] - 0.5 * np.sum(projected ** 2, axis=1)
    back = projected @ phi.entries
    covariance = sigma ** 2 * (back @ back.T)
    return mean, covariance


def pairwise_error_from_moments(mean: FloatArray, covariance: FloatArray, true_index: int, other: int) -> float:
    """P(t_other > t_T | H_T) = Q((μ_T − μ_o) / √Var(t_T − t_o))"""
    e = np.zeros(len(mean))
    e[true_index], e[other] = 1.0, -1.0
    return q_function(float(e @ mean) / math.sqrt(float(e @ covariance @ e)))
