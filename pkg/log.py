"""
日誌輸出
格式與自動更新腳本相同，輸出到 stderr，stdout 保留給結果
"""
import sys
from datetime import datetime

import config

_LEVELS = {"DEBUG": 10, "INFO": 20, "SUCCESS": 20, "WARN": 30, "ERROR": 40}


def log(message, level="INFO"):
    """輸出日誌"""
    if _LEVELS.get(level, 20) < _LEVELS.get(config.LOG_LEVEL, 20):
        return
    timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
    print(f"[{timestamp}] [{level}] {message}", file=sys.stderr, flush=True)
