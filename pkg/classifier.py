"""
壓縮分類器

相關分類器   t_i = ⟨y, Φs_i⟩ − ½‖Φs_i‖²
匹配濾波分類器 t̂_i = ⟨y, (ΦΦᵀ)⁻¹Φs_i⟩ − ½‖P_Φᵀ s_i‖²
判決 i* = argmax t_i，同分取最小索引（索引從 0 開始）
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt
from scipy import linalg

from errors import DimensionMismatch, RankDeficient
from frames import FloatArray, MeasurementMatrix
from signals import HypothesisSet


class ClassifierKind(str, Enum):
    CORRELATION = "correlation"
    MATCHED_FILTER = "matched_filter"


@dataclass(frozen=True, eq=False)
class ClassifierStatistics:
    """decided_index 從 0 開始，對應 HypothesisSet 的列順序"""

    values: FloatArray
    decided_index: int
    kind: ClassifierKind


class CompressiveClassifier:
    """
    固定 (Φ, H, kind) 預先算好樣板與偏移量，之後每筆量測只需一次矩陣乘法

    statistics = templates @ y − offsets
    """

    def __init__(self, phi: MeasurementMatrix, hypotheses: HypothesisSet, kind: ClassifierKind = ClassifierKind.CORRELATION):
        if hypotheses.N != phi.N:
            raise DimensionMismatch(f"Phi has N={phi.N} columns but hypotheses have length {hypotheses.N}")
        self.phi = phi
        self.hypotheses = hypotheses
        self.kind = ClassifierKind(kind)

        projected = hypotheses.matrix @ phi.entries.T          # 第 i 列為 Φs_i
        if self.kind is ClassifierKind.CORRELATION:
            templates = projected
            offsets = 0.5 * np.sum(projected ** 2, axis=1)
        else:
            phi.require_full_rank()
            try:
                factor = linalg.cho_factor(phi.gram, lower=True)
            except linalg.LinAlgError as e:
                raise RankDeficient(f"Phi Phi^T is not positive definite: {e}") from e
            templates = linalg.cho_solve(factor, projected.T).T  # (ΦΦᵀ)⁻¹Φs_i
            # ‖P_Φᵀ s‖² = (Φs)ᵀ(ΦΦᵀ)⁻¹(Φs)
            offsets = 0.5 * np.sum(projected * templates, axis=1)

        templates.setflags(write=False)
        offsets.setflags(write=False)
        self.templates = templates
        self.offsets = offsets

    def statistics(self, y: npt.ArrayLike) -> ClassifierStatistics:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.phi.n,):
            raise DimensionMismatch(f"measurement has shape {y.shape}, expected ({self.phi.n},)")
        values = self.templates @ y - self.offsets
        return ClassifierStatistics(values=values, decided_index=int(np.argmax(values)), kind=self.kind)

    def statistics_batch(self, Y: npt.ArrayLike) -> FloatArray:
        """Y 每列為一筆量測，回傳 trials × m"""
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[1] != self.phi.n:
            raise DimensionMismatch(f"measurement batch has shape {Y.shape}, expected (trials, {self.phi.n})")
        return Y @ self.templates.T - self.offsets

    def classify_batch(self, Y: npt.ArrayLike) -> npt.NDArray[np.intp]:
        # np.argmax 回傳第一個最大值，即最小索引
        return np.argmax(self.statistics_batch(Y), axis=1)


def correlation_statistics(y: npt.ArrayLike, phi: MeasurementMatrix, hypotheses: HypothesisSet) -> ClassifierStatistics:
    return CompressiveClassifier(phi, hypotheses, ClassifierKind.CORRELATION).statistics(y)


def matched_filter_statistics(y: npt.ArrayLike, phi: MeasurementMatrix, hypotheses: HypothesisSet) -> ClassifierStatistics:
    return CompressiveClassifier(phi, hypotheses, ClassifierKind.MATCHED_FILTER).statistics(y)


def classify(
    y: npt.ArrayLike,
    phi: MeasurementMatrix,
    hypotheses: HypothesisSet,
    kind: ClassifierKind = ClassifierKind.CORRELATION,
) -> int:
    return CompressiveClassifier(phi, hypotheses, kind).statistics(y).decided_index
