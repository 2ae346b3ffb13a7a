"""
蒙地卡羅錯誤率估計

種子串流配置（皆由 derive_seed(seed, ...) 衍生）：
    HYPOTHESIS_STREAM               假設訊號集合
    MATRIX_STREAM, n 索引            每個 n 的高斯矩陣
    NOISE_STREAM, 試驗索引           每次試驗的雜訊（所有格點與框架模式共用）
    MATRIX_STREAM, n 索引, 試驗索引   每次試驗重抽矩陣時使用
"""
import csv
import io
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Iterable, List, Optional, TextIO, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import stats

import config
from analysis import TheoreticalError, average_union_bound, error_probability_2ary
from classifier import ClassifierKind, CompressiveClassifier, classify
from errors import ConfigError, Infeasible
from frames import MeasurementMatrix, generate_gaussian, tighten
from log import log
from signals import HypothesisSet, NoiseModel, derive_seed, generate_hypotheses, sample_noisy_measurement, snr_to_sigma

HYPOTHESIS_STREAM = 0
MATRIX_STREAM = 1
NOISE_STREAM = 2

CSV_HEADER = ["n", "snr_db", "k", "m", "frame_mode", "trials", "errors", "error_rate", "ci_low", "ci_high", "theoretical"]


class FrameMode(str, Enum):
    NON_TIGHT = "non_tight"
    TIGHTENED = "tightened"


# 資料模型
class ExperimentConfig(BaseModel):
    N: int = Field(default=config.DESK_N, gt=1)
    k: int = Field(default=1, ge=1)
    m: int = Field(default=2, ge=2)
    n_values: List[int] = Field(default_factory=lambda: list(config.DESK_N_VALUES), min_length=1)
    snr_db_values: List[float] = Field(default_factory=lambda: list(config.DESK_SNR_DB_VALUES), min_length=1)
    trials: int = Field(default=config.DESK_TRIALS, ge=1)
    seed: int = Field(ge=0)
    classifier_kind: ClassifierKind = ClassifierKind.CORRELATION
    frame_modes: List[FrameMode] = Field(default_factory=lambda: [FrameMode.NON_TIGHT, FrameMode.TIGHTENED], min_length=1)
    signal_norm: float = Field(default=1.0, gt=0)
    tighten_constant: float = Field(default=1.0, gt=0)
    redraw_matrix_per_trial: bool = False

    @field_validator('frame_modes')
    @classmethod
    def _unique_modes(cls, modes):
        if len(set(modes)) != len(modes):
            raise ValueError("frame_modes must not repeat")
        return modes

    @model_validator(mode='after')
    def _n_in_range(self):
        bad = [n for n in self.n_values if not 0 < n < self.N]
        if bad:
            raise ValueError(f"every n must satisfy 0 < n < N={self.N}, got {bad}")
        return self

    def require_feasible(self) -> None:
        if self.m * self.k > self.N:
            raise Infeasible(f"disjoint supports need m*k <= N, got m*k = {self.m * self.k} > N = {self.N}")


class ErrorEstimate(BaseModel):
    errors: int = Field(ge=0)
    trials: int = Field(ge=1)
    rate: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, errors: int, trials: int, confidence: float = 0.95) -> "ErrorEstimate":
        if not 0 <= errors <= trials:
            raise ValueError(f"need 0 <= errors <= trials, got {errors}/{trials}")
        rate = errors / trials
        ci = stats.binomtest(errors, trials).proportion_ci(confidence_level=confidence, method='wilson')
        # 浮點捨入可能讓端點越過 rate
        return cls(
            errors=errors,
            trials=trials,
            rate=rate,
            ci_low=min(float(ci.low), rate),
            ci_high=max(float(ci.high), rate),
        )

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


class SweepRow(BaseModel):
    n: int
    snr_db: float
    k: int
    m: int
    frame_mode: FrameMode
    estimate: ErrorEstimate
    theoretical: Optional[TheoreticalError] = None


class OrderingSummary(BaseModel):
    points: int
    tightened_not_worse: int
    violations: List[Tuple[int, float]] = []

    def describe(self) -> str:
        return f"tightened <= non-tight at {self.tightened_not_worse}/{self.points} points"


class SweepResult(BaseModel):
    config: ExperimentConfig
    rows: List[SweepRow]

    def row(self, n: int, snr_db: float, frame_mode: FrameMode) -> SweepRow:
        for r in self.rows:
            if r.n == n and r.snr_db == snr_db and r.frame_mode == frame_mode:
                return r
        raise KeyError((n, snr_db, frame_mode))

    def ordering_summary(self) -> OrderingSummary:
        """每個格點：tightened 錯誤率 ≤ non-tight 錯誤率 + non-tight 半寬"""
        modes = set(self.config.frame_modes)
        if modes != {FrameMode.NON_TIGHT, FrameMode.TIGHTENED}:
            return OrderingSummary(points=0, tightened_not_worse=0)
        points, ok, violations = 0, 0, []
        for n in self.config.n_values:
            for snr_db in self.config.snr_db_values:
                loose = self.row(n, snr_db, FrameMode.NON_TIGHT).estimate
                tight = self.row(n, snr_db, FrameMode.TIGHTENED).estimate
                points += 1
                if tight.rate <= loose.rate + loose.half_width:
                    ok += 1
                else:
                    violations.append((n, snr_db))
        return OrderingSummary(points=points, tightened_not_worse=ok, violations=violations)

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            e = r.estimate
            writer.writerow([
                r.n,
                f"{r.snr_db:.10g}",
                r.k,
                r.m,
                r.frame_mode.value,
                e.trials,
                e.errors,
                f"{e.rate:.10g}",
                f"{e.ci_low:.10g}",
                f"{e.ci_high:.10g}",
                "" if r.theoretical is None else f"{r.theoretical.probability:.10g}",
            ])

    def to_csv(self) -> str:
        buffer = io.StringIO()
        self.write_csv(buffer)
        return buffer.getvalue()


def read_csv_rows(stream: Iterable[str]) -> List[dict]:
    """讀回 CSV；數值欄位轉型，theoretical 空白為 None"""
    reader = csv.DictReader(stream)
    if reader.fieldnames != CSV_HEADER:
        raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for record in reader:
        rows.append({
            "n": int(record["n"]),
            "snr_db": float(record["snr_db"]),
            "k": int(record["k"]),
            "m": int(record["m"]),
            "frame_mode": FrameMode(record["frame_mode"]),
            "trials": int(record["trials"]),
            "errors": int(record["errors"]),
            "error_rate": float(record["error_rate"]),
            "ci_low": float(record["ci_low"]),
            "ci_high": float(record["ci_high"]),
            "theoretical": float(record["theoretical"]) if record["theoretical"] else None,
        })
    return rows


# 試驗
def run_trial(
    phi: MeasurementMatrix,
    hypotheses: HypothesisSet,
    sigma: float,
    true_index: int,
    trial_seed,
    kind: ClassifierKind = ClassifierKind.CORRELATION,
) -> bool:
    """單次試驗，回傳是否判錯"""
    noise = NoiseModel(sigma, phi.N)
    y = sample_noisy_measurement(phi, hypotheses[true_index], noise, trial_seed)
    return classify(y, phi, hypotheses, kind) != true_index


def _count_errors_chunk(
    classifier: CompressiveClassifier, sigma: float, seed: int, start: int, stop: int
) -> int:
    hypotheses = classifier.hypotheses
    m, N = hypotheses.m, hypotheses.N
    true_indices = np.arange(start, stop) % m
    # 與 sample_noisy_measurement 相同的抽樣：每次試驗一個獨立 Generator
    noise = np.stack([
        np.random.default_rng(derive_seed(seed, NOISE_STREAM, t)).standard_normal(N)
        for t in range(start, stop)
    ])
    X = hypotheses.matrix[true_indices] + sigma * noise
    Y = X @ classifier.phi.entries.T
    return int(np.count_nonzero(classifier.classify_batch(Y) != true_indices))


def _chunks(trials: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk_size, trials)) for start in range(0, trials, chunk_size)]


def estimate_error_rate(
    phi: MeasurementMatrix,
    hypotheses: HypothesisSet,
    sigma: float,
    trials: int,
    seed: int,
    kind: ClassifierKind = ClassifierKind.CORRELATION,
    workers: Optional[int] = None,
    chunk_size: int = config.CHUNK_SIZE,
) -> ErrorEstimate:
    """
    固定 Φ 下的錯誤率；第 t 次試驗的真實假設為 t mod m
    試驗切成固定大小的區塊，錯誤數為整數加總，結果與執行緒數無關
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    NoiseModel(sigma, phi.N)
    classifier = CompressiveClassifier(phi, hypotheses, kind)
    chunks = _chunks(trials, chunk_size)
    workers = workers or config.WORKERS
    if workers <= 1 or len(chunks) == 1:
        errors = sum(_count_errors_chunk(classifier, sigma, seed, a, b) for a, b in chunks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(lambda ab: _count_errors_chunk(classifier, sigma, seed, *ab), chunks))
    return ErrorEstimate.from_counts(errors, trials)


def _estimate_with_redraw(
    cfg: ExperimentConfig, n_index: int, mode: FrameMode, hypotheses: HypothesisSet, sigma: float, workers: int
) -> ErrorEstimate:
    n = cfg.n_values[n_index]

    def one(t: int) -> bool:
        phi = generate_gaussian(n, cfg.N, derive_seed(cfg.seed, MATRIX_STREAM, n_index, t))
        if mode is FrameMode.TIGHTENED:
            phi = tighten(phi, cfg.tighten_constant)
        return run_trial(phi, hypotheses, sigma, t % hypotheses.m, derive_seed(cfg.seed, NOISE_STREAM, t), cfg.classifier_kind)

    if workers <= 1:
        errors = sum(one(t) for t in range(cfg.trials))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(one, range(cfg.trials)))
    return ErrorEstimate.from_counts(int(errors), cfg.trials)


def _theoretical(phi: MeasurementMatrix, hypotheses: HypothesisSet, sigma: float, kind: ClassifierKind) -> TheoreticalError:
    if kind is ClassifierKind.MATCHED_FILTER:
        # 匹配濾波統計量是 tighten(Φ, 1) 下相關統計量的正比例，錯誤機率相同
        phi = tighten(phi, 1.0)
    if hypotheses.m == 2:
        return error_probability_2ary(phi, hypotheses[0], hypotheses[1], sigma)
    return average_union_bound(phi, hypotheses, sigma)


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> SweepResult:
    """
    對 (n, SNR, 框架模式) 網格估計錯誤率
    同一個 n 的所有 SNR 共用一個高斯矩陣，緊化版本由它轉換而來
    """
    cfg.require_feasible()
    workers = workers or config.WORKERS
    hypotheses = generate_hypotheses(cfg.N, cfg.k, cfg.m, cfg.signal_norm, derive_seed(cfg.seed, HYPOTHESIS_STREAM))
    log(f"開始模擬: N={cfg.N} k={cfg.k} m={cfg.m} trials={cfg.trials} workers={workers}")

    rows = []
    for n_index, n in enumerate(cfg.n_values):
        matrices = {}
        if not cfg.redraw_matrix_per_trial:
            phi = generate_gaussian(n, cfg.N, derive_seed(cfg.seed, MATRIX_STREAM, n_index))
            matrices[FrameMode.NON_TIGHT] = phi
            matrices[FrameMode.TIGHTENED] = tighten(phi, cfg.tighten_constant)

        for snr_db in cfg.snr_db_values:
            sigma = snr_to_sigma(snr_db, cfg.signal_norm)
            for mode in cfg.frame_modes:
                if cfg.redraw_matrix_per_trial:
                    estimate = _estimate_with_redraw(cfg, n_index, mode, hypotheses, sigma, workers)
                    theoretical = None
                else:
                    phi_mode = matrices[mode]
                    estimate = estimate_error_rate(
                        phi_mode, hypotheses, sigma, cfg.trials, cfg.seed, cfg.classifier_kind, workers
                    )
                    theoretical = _theoretical(phi_mode, hypotheses, sigma, cfg.classifier_kind)
                rows.append(SweepRow(
                    n=n, snr_db=snr_db, k=cfg.k, m=cfg.m, frame_mode=mode,
                    estimate=estimate, theoretical=theoretical,
                ))
                log(f"n={n:<4d} snr={snr_db:>5.1f}dB {mode.value:<10s} rate={estimate.rate:.4f} "
                    f"[{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]", "DEBUG")
        log(f"✓ n={n} 完成", "SUCCESS")

    return SweepResult(config=cfg, rows=rows)
