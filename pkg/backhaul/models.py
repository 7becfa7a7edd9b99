"""
第二阶段（无线回传功率控制）的数据模型与异常。
"""
from __future__ import annotations

from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from network import InfeasibleError


class BackhaulInfeasibleError(InfeasibleError):
    """
    回传 SINR 门限无法同时满足。
    load = Σ_l γ_l/(1+γ_l)，不小于 1 即不可行。
    """

    def __init__(self, load: float, message: str = ""):
        self.load = float(load)
        super().__init__(message or f"backhaul thresholds infeasible (load {self.load:.6g} >= 1)")


class RateRequirements(BaseModel):
    """
    每个活跃无线回传基站需要的服务速率及对应的回传 SINR 门限。
    字段：
        bs_indices: 基站全局下标（升序）
        rates: R_l（bit/信道使用）
        thresholds: γ_l = 2^R_l - 1
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bs_indices: Tuple[int, ...] = ()
    rates: np.ndarray
    thresholds: np.ndarray

    @field_validator("rates", "thresholds", mode="before")
    @classmethod
    def _arrays(cls, value) -> np.ndarray:
        arr = np.array(value, dtype=float, copy=True).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "RateRequirements":
        n = len(self.bs_indices)
        if self.rates.shape != (n,) or self.thresholds.shape != (n,):
            raise ValueError("rates and thresholds must have one entry per BS")
        if np.any(self.rates < 0) or np.any(self.thresholds < 0):
            raise ValueError("rates and thresholds must be nonnegative")
        return self

    def gamma(self) -> Dict[int, float]:
        """{基站下标: γ_l}，可直接传给 solve_power_control。"""
        return dict(zip(self.bs_indices, self.thresholds.tolist()))
