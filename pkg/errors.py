"""
例外類別

每個錯誤帶有 CLI 的結束碼：
2 解析錯誤、3 數值前提不成立、4 模擬中止、5 性質檢查失敗
"""

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_SWEEP = 4
EXIT_PROPERTY = 5


class CompClassError(Exception):
    """所有工具組錯誤的基底類別"""
    exit_code = EXIT_NUMERICAL


class RankDeficient(CompClassError):
    """Φ 不滿足滿列秩"""


class InvalidConstant(CompClassError):
    """常數 c 或 ψ 不是正的有限值"""


class ZeroColumn(CompClassError):
    """欄向量範數為零，無法正規化"""


class BadDimensions(CompClassError):
    """維度不符合 0 < n < N"""


class Infeasible(CompClassError):
    """m·k > N，無法建構互斥支撐集"""


class DimensionMismatch(CompClassError):
    """向量或矩陣維度彼此不一致"""


class DegenerateDifference(CompClassError):
    """Φ(s1 − s2) = 0，分離比為 0/0"""


class InvalidNoise(CompClassError):
    """雜訊標準差不是正的有限值"""


class HypothesisViolation(CompClassError):
    """假設集合不滿足正交、等範數或 m ≥ 2"""


class PropertyViolation(CompClassError):
    """緊化後分離比變小（代表實作錯誤）"""
    exit_code = EXIT_PROPERTY


class MatrixFormatError(CompClassError):
    """矩陣文字檔格式錯誤"""
    exit_code = EXIT_PARSE


class ConfigError(CompClassError):
    """設定檔或命令列參數錯誤"""
    exit_code = EXIT_PARSE
