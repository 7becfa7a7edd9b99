"""
两阶段迭代算法的配置与结果模型。
"""
from __future__ import annotations

from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from beamforming.config import MM_MAX_ITERS, MM_TOL
from network import BackhaulAllocation, BeamformingSolution, RunTrace

from .config import CONVERGENCE_TOL, MAX_OUTER_ITERS


class IterationConfig(BaseModel):
    """
    字段：
        tol: 相邻两次可行迭代网络功耗的相对变化阈值
        max_iters: 外层最大迭代次数
        mm_max_iters / mm_tol: 第一阶段 MM 重加权的上限与阈值
        epsilon: MM 正则项 ε，缺省为 1e-3/B
        power_control_method: 第二阶段解法，"tight" 或 "lp"
    """
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=CONVERGENCE_TOL, gt=0)
    max_iters: int = Field(default=MAX_OUTER_ITERS, ge=1)
    mm_max_iters: int = Field(default=MM_MAX_ITERS, ge=0)
    mm_tol: float = Field(default=MM_TOL, gt=0)
    epsilon: Optional[float] = Field(default=None, gt=0)
    power_control_method: str = Field(default="tight", pattern="^(tight|lp)$")


class StopReason(str, Enum):
    CONVERGED = "converged"
    FIXED_POINT = "fixed-point"  # 预算不再变化（例如没有活跃的无线基站）
    MAX_ITERATIONS = "max-iterations"
    STAGE1_INFEASIBLE = "stage1-infeasible"
    STAGE2_INFEASIBLE = "stage2-infeasible"


class IgsbpoResult(BaseModel):
    """
    一次运行的结果。任一轮不可行时 feasible 为 False、solution/allocation 为空，trace 记录到失败为止。
    best_* 为轨迹中网络功耗最低的可行迭代（外层迭代不保证单调），不可行时仅供参考。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    feasible: bool
    stop_reason: StopReason
    trace: RunTrace
    solution: Optional[BeamformingSolution] = None
    allocation: Optional[BackhaulAllocation] = None
    network_power: float = float("inf")
    best_solution: Optional[BeamformingSolution] = None
    best_allocation: Optional[BackhaulAllocation] = None
    best_network_power: float = float("inf")

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def active_set(self) -> Tuple[int, ...]:
        return self.solution.active_set if self.solution is not None else ()

    @property
    def total_tx_power(self) -> float:
        """Σ_{l∈A} P_l，按最后一次迭代生效的功率预算计算。"""
        if self.solution is None:
            return float("nan")
        return float(np.sum(self.solution.power_budgets[list(self.solution.active_set)]))
