"""
二阶锥求解器的统一配置。
所有配置项均可通过环境变量覆盖，方便调试精度与迭代上限。
"""
from __future__ import annotations

import os


def _get_bool_env(name: str, default: bool) -> bool:
    """
    读取布尔型环境变量，支持多种写法（1/true/yes/on），无则返回默认值。
    """
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def _get_float_env(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    return float(value)


SOCP_TOL = _get_float_env("CRAN_SOCP_TOL", 1e-8)  # KKT 残差目标（相对）
SOCP_MAX_ITERS = int(os.getenv("CRAN_SOCP_MAX_ITERS", "200"))  # 内点法最大迭代次数
SOCP_SHOW_PROGRESS = _get_bool_env("CRAN_SOCP_SHOW_PROGRESS", False)  # 是否打印 cvxopt 迭代过程
RANK_TOL = 1e-10  # presolve 中判定等式约束行线性相关的相对阈值
