"""
量測矩陣：建構、SVD 分解、緊框架認證與緊化轉換

文字檔格式：
    第一行 `n N`，接著 n 行、每行 N 個以單一空白分隔的浮點數（17 位有效數字）
"""
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field

import config
from errors import (
    BadDimensions,
    InvalidConstant,
    MatrixFormatError,
    RankDeficient,
    ZeroColumn,
)

SeedLike = Union[int, np.random.SeedSequence]
FloatArray = npt.NDArray[np.float64]

_HEADER = re.compile(r"^(\d+) (\d+)$")


# 資料模型
@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """欠定量測矩陣 Φ (n × N, n < N)，建構後唯讀"""
    entries: FloatArray

    def __post_init__(self):
        try:
            entries = np.array(self.entries, dtype=np.float64)
        except ValueError as e:
            raise BadDimensions(f"measurement matrix rows must have equal length: {e}") from e
        if entries.ndim != 2:
            raise BadDimensions(f"measurement matrix must be 2-D, got {entries.ndim}-D")
        n, N = entries.shape
        if not 0 < n < N:
            raise BadDimensions(f"measurement matrix must be under-determined (0 < n < N), got {n}x{N}")
        if not np.all(np.isfinite(entries)):
            raise InvalidConstant("measurement matrix entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def thin_svd(self) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """(U, σ, Vᵀ 前 n 列)，σ 遞減"""
        return np.linalg.svd(self.entries, full_matrices=False)

    @property
    def singular_values(self) -> FloatArray:
        return self.thin_svd[1]

    @cached_property
    def gram(self) -> FloatArray:
        """ΦΦᵀ"""
        return self.entries @ self.entries.T

    @cached_property
    def certificate(self) -> "FrameCertificate":
        return certify(self)

    def require_full_rank(self) -> None:
        s = self.singular_values
        if s[0] == 0.0 or s[-1] / s[0] < config.RANK_TOL:
            ratio = 0.0 if s[0] == 0.0 else s[-1] / s[0]
            raise RankDeficient(
                f"full row rank violated: sigma_n/sigma_1 = {ratio:.3e} < rank_tol = {config.RANK_TOL:g}"
            )


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Φ = U [Σ_n O] Vᵀ"""
    U: FloatArray
    singular_values: FloatArray
    V: FloatArray

    def reconstruct(self) -> FloatArray:
        n = self.U.shape[0]
        return (self.U * self.singular_values) @ self.V[:, :n].T

    def orthogonality_residuals(self) -> Tuple[float, float]:
        n, N = self.U.shape[0], self.V.shape[0]
        return (
            float(np.linalg.norm(self.U.T @ self.U - np.eye(n))),
            float(np.linalg.norm(self.V.T @ self.V - np.eye(N))),
        )


class FrameCertificate(BaseModel):
    is_tight: bool
    frame_constant_c: Optional[float] = Field(default=None, gt=0)
    is_equinorm: bool
    column_norm_psi: Optional[float] = Field(default=None, ge=0)
    tightness_residual: float = Field(ge=0)
    lower_frame_bound: float
    upper_frame_bound: float
    corollary_gap: Optional[float] = None


# 分解與緊化
def decompose(phi: MeasurementMatrix) -> SvdFactors:
    phi.require_full_rank()
    U, s, Vt = np.linalg.svd(phi.entries, full_matrices=True)
    return SvdFactors(U=U, singular_values=s, V=Vt.T)


def energy_preserving_constant(phi: MeasurementMatrix) -> float:
    """c = trace(ΦΦᵀ)/n = (N/n)·ψ²，ψ 為欄範數的均方根"""
    return float(np.trace(phi.gram)) / phi.n


def _positive_constant(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidConstant(f"{name} must be a positive finite real, got {value!r}")
    return value


def tighten(phi: MeasurementMatrix, c: float = 1.0, *, preserve_energy: bool = False) -> MeasurementMatrix:
    """
    列正交化：Φ̂ = √c · U Σ⁻¹ Uᵀ Φ，使 Φ̂Φ̂ᵀ = c·I_n 且列空間不變

    preserve_energy=True 時忽略 c，改用 energy_preserving_constant(Φ)
    """
    if preserve_energy:
        c = energy_preserving_constant(phi)
    c = _positive_constant(c, "frame constant c")
    phi.require_full_rank()
    U, s, _ = phi.thin_svd
    whitening = (U / s) @ U.T
    return MeasurementMatrix(math.sqrt(c) * (whitening @ phi.entries))


def tighten_via_right_factors(phi: MeasurementMatrix, c: float = 1.0) -> MeasurementMatrix:
    """√c · U [I_n O] Vᵀ，與 tighten 數學上相同，需要完整的 V"""
    c = _positive_constant(c, "frame constant c")
    factors = decompose(phi)
    return MeasurementMatrix(math.sqrt(c) * (factors.U @ factors.V[:, :phi.n].T))


def row_space_projector(phi: MeasurementMatrix) -> FloatArray:
    """P_Φᵀ = Φᵀ(ΦΦᵀ)⁻¹Φ"""
    phi.require_full_rank()
    Vt = phi.thin_svd[2]
    return Vt.T @ Vt


def projector_distance(a: MeasurementMatrix, b: MeasurementMatrix) -> float:
    return float(np.linalg.norm(row_space_projector(a) - row_space_projector(b)))


# 認證
def certify(phi: MeasurementMatrix) -> FrameCertificate:
    gram = phi.gram
    n, N = phi.n, phi.N
    trace = float(np.trace(gram))
    c = trace / n
    if c > 0.0:
        residual = float(np.linalg.norm(gram - c * np.eye(n))) / (c * math.sqrt(n))
    else:
        residual = math.inf
    is_tight = residual <= config.TIGHT_TOL

    norms = np.linalg.norm(phi.entries, axis=0)
    spread = float(norms.max() - norms.min())
    is_equinorm = spread <= config.NORM_TOL * float(norms.max())
    # ψ 取均方根，讓 c = (N/n)ψ² 成為 trace 恆等式
    psi = math.sqrt(trace / N) if is_equinorm else None

    eigenvalues = np.linalg.eigvalsh(gram)
    corollary_gap = None
    if is_tight and is_equinorm:
        corollary_gap = abs(c - (N / n) * psi ** 2) / c

    return FrameCertificate(
        is_tight=is_tight,
        frame_constant_c=c if is_tight else None,
        is_equinorm=is_equinorm,
        column_norm_psi=psi,
        tightness_residual=residual,
        lower_frame_bound=float(eigenvalues[0]),
        upper_frame_bound=float(eigenvalues[-1]),
        corollary_gap=corollary_gap,
    )


# 建構
def normalize_columns(phi: MeasurementMatrix, psi: float) -> MeasurementMatrix:
    psi = _positive_constant(psi, "column norm psi")
    norms = np.linalg.norm(phi.entries, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroColumn(f"column {int(zero[0])} has zero norm; equi-norm scaling impossible")
    return MeasurementMatrix(phi.entries * (psi / norms))


def generate_gaussian(n: int, N: int, seed: SeedLike) -> MeasurementMatrix:
    """i.i.d. N(0, 1) 元素的高斯隨機矩陣（非緊框架）"""
    if not 0 < n < N:
        raise BadDimensions(f"Gaussian measurement matrix needs 0 < n < N, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    phi = MeasurementMatrix(rng.standard_normal((n, N)))
    phi.require_full_rank()
    return phi


# 文字檔讀寫
def format_array(values: npt.ArrayLike) -> str:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    rows, cols = values.shape
    lines = [f"{rows} {cols}"]
    lines.extend(" ".join(f"{v:.17g}" for v in row) for row in values)
    return "\n".join(lines) + "\n"


def parse_array(text: str) -> FloatArray:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MatrixFormatError("empty input: expected header line 'rows cols'")

    match = _HEADER.match(lines[0].strip())
    if not match:
        raise MatrixFormatError(f"malformed header {lines[0]!r}: expected two integers 'rows cols'")
    rows, cols = int(match.group(1)), int(match.group(2))
    if rows == 0 or cols == 0:
        raise MatrixFormatError(f"header declares an empty array ({rows}x{cols})")

    body = lines[1:]
    if len(body) != rows:
        raise MatrixFormatError(f"header declares {rows} rows, found {len(body)}")

    values = np.empty((rows, cols), dtype=np.float64)
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != cols:
            raise MatrixFormatError(f"row {i + 1}: expected {cols} values, found {len(fields)}")
        try:
            values[i] = [float(f) for f in fields]
        except ValueError as e:
            raise MatrixFormatError(f"row {i + 1}: {e}") from e
    if not np.all(np.isfinite(values)):
        raise MatrixFormatError("non-finite value in array file")
    return values


def loads_matrix(text: str) -> MeasurementMatrix:
    return MeasurementMatrix(parse_array(text))


def read_matrix(filepath: str) -> MeasurementMatrix:
    with open(filepath, 'r', encoding='utf-8') as f:
        return loads_matrix(f.read())


def write_matrix(filepath: str, phi: MeasurementMatrix) -> None:
    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(format_array(phi.entries))
