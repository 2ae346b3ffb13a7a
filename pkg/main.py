from fastapi import FastAPI, HTTPException, File, Form, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel
from typing import List, Optional
from datetime import datetime

import config
from analysis import TheoreticalError, error_probability_2ary, union_bound_mary
from errors import EXIT_PARSE, CompClassError, MatrixFormatError
from frames import FrameCertificate, MeasurementMatrix, certify, format_array, loads_matrix, tighten
from log import log
from montecarlo import ExperimentConfig, OrderingSummary, SweepResult, run_sweep
from signals import HypothesisSet, SparseSignal, snr_to_sigma

VERSION = "1.0.0"

app = FastAPI(title="CompClass API", version=VERSION)

# CORS 設定 - 允許前端跨域請求
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # 生產環境應限制為特定網域
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# 資料模型
class TightenResponse(BaseModel):
    c: float
    certificate_before: FrameCertificate
    certificate_after: FrameCertificate
    matrix: str

class AnalyzeRequest(BaseModel):
    matrix: List[List[float]]
    signals: List[List[float]]
    sigma: Optional[float] = None
    snr_db: Optional[float] = None
    true_index: Optional[int] = None

class AnalyzeResult(BaseModel):
    true_index: int
    error: TheoreticalError

class AnalyzeResponse(BaseModel):
    sigma: float
    separation_ratio: Optional[float] = None
    results: List[AnalyzeResult]

class SimulateResponse(BaseModel):
    result: SweepResult
    summary: OrderingSummary
    csv: str

# 錯誤轉換
def to_http_error(e: CompClassError) -> HTTPException:
    status = 400 if e.exit_code == EXIT_PARSE else 422
    log(f"請求失敗: {type(e).__name__}: {e}", "WARN")
    return HTTPException(status_code=status, detail=f"{type(e).__name__}: {e}")

def read_upload(file: UploadFile) -> MeasurementMatrix:
    try:
        text = file.file.read().decode('utf-8')
    except UnicodeDecodeError as e:
        raise MatrixFormatError(f"matrix file is not UTF-8 text: {e}") from e
    return loads_matrix(text)

# API 端點
@app.get("/")
def read_root():
    return {
        "message": "CompClass API",
        "version": VERSION,
        "endpoints": {
            "certify": "/api/frames/certify",
            "tighten": "/api/frames/tighten",
            "analyze": "/api/analyze",
            "simulate": "/api/simulate"
        }
    }

@app.post("/api/frames/certify", response_model=FrameCertificate)
def certify_matrix(file: UploadFile = File(...)):
    """上傳矩陣文字檔，回傳框架認證"""
    try:
        return certify(read_upload(file))
    except CompClassError as e:
        raise to_http_error(e)

@app.post("/api/frames/tighten", response_model=TightenResponse)
def tighten_matrix(file: UploadFile = File(...), c: float = Form(1.0), energy_preserving: bool = Form(False)):
    """上傳矩陣文字檔，回傳緊化後的矩陣與前後認證"""
    try:
        phi = read_upload(file)
        phi_hat = tighten(phi, c, preserve_energy=energy_preserving)
        return TightenResponse(
            c=float(phi_hat.certificate.frame_constant_c or c),
            certificate_before=phi.certificate,
            certificate_after=phi_hat.certificate,
            matrix=format_array(phi_hat.entries),
        )
    except CompClassError as e:
        raise to_http_error(e)

@app.post("/api/analyze", response_model=AnalyzeResponse)
def analyze(request: AnalyzeRequest):
    """二元錯誤機率或 m 元聯集界"""
    if (request.sigma is None) == (request.snr_db is None):
        raise HTTPException(status_code=400, detail="請提供 sigma 或 snr_db 其中之一")
    try:
        phi = MeasurementMatrix(request.matrix)
        hypotheses = HypothesisSet.from_signals([SparseSignal.from_values(s) for s in request.signals])
        sigma = request.sigma if request.sigma is not None else snr_to_sigma(request.snr_db, hypotheses.common_norm)

        if hypotheses.m == 2:
            error = error_probability_2ary(phi, hypotheses[0], hypotheses[1], sigma)
            return AnalyzeResponse(
                sigma=sigma,
                separation_ratio=2.0 * sigma * error.argument,
                results=[AnalyzeResult(true_index=0, error=error)],
            )

        targets = [request.true_index] if request.true_index is not None else range(hypotheses.m)
        results = [AnalyzeResult(true_index=t, error=union_bound_mary(phi, hypotheses, sigma, t)) for t in targets]
        return AnalyzeResponse(sigma=sigma, results=results)
    except CompClassError as e:
        raise to_http_error(e)
    except IndexError as e:
        raise HTTPException(status_code=422, detail=str(e))

@app.post("/api/simulate", response_model=SimulateResponse)
def simulate(cfg: ExperimentConfig):
    """蒙地卡羅掃描（試驗數有上限）"""
    if cfg.trials > config.MAX_API_TRIALS:
        raise HTTPException(status_code=422, detail=f"trials 上限為 {config.MAX_API_TRIALS}")
    try:
        result = run_sweep(cfg)
    except CompClassError as e:
        raise to_http_error(e)
    return SimulateResponse(result=result, summary=result.ordering_summary(), csv=result.to_csv())

@app.get("/health")
def health_check():
    """健康檢查端點"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "version": VERSION
    }

if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
