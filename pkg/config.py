"""
壓縮分類工具組 - 設定
數值容差、桌面規模預設值與環境變數
"""
import os

# 數值容差
RANK_TOL = 1e-10          # σ_n / σ_1 低於此值視為秩不足
TIGHT_TOL = 1e-8          # ‖ΦΦᵀ − cI‖_F / (c√n)
NORM_TOL = 1e-8           # 欄範數相對差
PROJ_TOL = 1e-8           # 列空間投影矩陣距離
ORTHO_TOL = 1e-9          # ‖UᵀU − I‖_F、‖VᵀV − I‖_F
RECON_TOL = 1e-12         # SVD 重建相對誤差
HYPOTHESIS_TOL = 1e-12    # 假設訊號正交性與等範數
THEOREM2_SLACK = 1e-10    # 緊化前後分離比不等式的相對容許量

# 環境變數
WORKERS = int(os.getenv('COMPCLASS_WORKERS', str(os.cpu_count() or 1)))
LOG_LEVEL = os.getenv('COMPCLASS_LOG_LEVEL', 'INFO').upper()
MAX_API_TRIALS = int(os.getenv('COMPCLASS_MAX_API_TRIALS', '20000'))

# 桌面規模模擬預設值
DESK_N = 100
DESK_N_VALUES = [20, 40, 60, 80]
DESK_SNR_DB_VALUES = [5.0, 10.0, 15.0, 20.0]
DESK_K_VALUES = [1, 5]
DESK_M_VALUES = [2, 10]
DESK_TRIALS = 5000
CHUNK_SIZE = 250          # 每個工作單元的試驗數，與執行緒數無關

# 檔案路徑
DATA_DIR = os.path.dirname(__file__)
DEFAULT_CONFIG_FILE = os.path.join(DATA_DIR, "sweep_default.conf")
