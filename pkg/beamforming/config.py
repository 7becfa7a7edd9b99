"""
稀疏波束成形（第一阶段）的配置项。
MM 重加权迭代上限、收敛阈值与正则项 ε 均可通过环境变量覆盖。
"""
from __future__ import annotations

import os

MM_MAX_ITERS = int(os.getenv("CRAN_MM_MAX_ITERS", "20"))  # MM 重加权最大次数
MM_TOL = float(os.getenv("CRAN_MM_TOL", "1e-4"))  # 松弛目标相对下降量低于该值即停止
EPSILON_NUMERATOR = float(os.getenv("CRAN_MM_EPSILON", "1e-3"))  # ε = EPSILON_NUMERATOR / B
