"""
外层迭代（第一阶段 ↔ 第二阶段）的默认参数，可通过环境变量覆盖。
"""
from __future__ import annotations

import os

CONVERGENCE_TOL = float(os.getenv("CRAN_CONVERGENCE_TOL", "1e-3"))  # 相邻两轮网络功耗的相对变化阈值
MAX_OUTER_ITERS = int(os.getenv("CRAN_MAX_OUTER_ITERS", "10"))  # 外层最大迭代次数
