"""
第一阶段使用的数据模型：有效参数（β_l、P̂_l、量化耦合 H_k）与组权重 ω_l。
"""
from __future__ import annotations

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from network import BeamformingSolution


def _frozen(value) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class EffectiveParams(BaseModel):
    """
    字段：
        beta: (B,) 代价系数 β_l，有线 2^C/(ξ(2^C-1))，无线 1/ξ
        p_hat: (B,) 有效功率上限 P̂_l，有线 P_l(2^C-1)/2^C，无线 P_l
        quant_coupling: (K, B) 第 k 行为 H_k 的对角线 |h_lk|²/(2^C_l-1)，无线位置为 0
        budgets: (B,) 生成这些参数时的功率预算 P_l
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta: np.ndarray
    p_hat: np.ndarray
    quant_coupling: np.ndarray
    budgets: np.ndarray

    @field_validator("beta", "p_hat", "quant_coupling", "budgets", mode="before")
    @classmethod
    def _arrays(cls, value) -> np.ndarray:
        return _frozen(value)

    @model_validator(mode="after")
    def _check(self) -> "EffectiveParams":
        if np.any(self.quant_coupling < 0):
            raise ValueError("quantization coupling entries must be nonnegative")
        if np.any(self.p_hat > self.budgets * (1 + 1e-12)):
            raise ValueError("effective caps cannot exceed the power budgets")
        return self

    @property
    def num_bs(self) -> int:
        return self.beta.size


class GroupWeights(BaseModel):
    """混合 ℓ1/ℓ2 目标中每个基站的权重 ω_l，必须为正。"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _arrays(cls, value) -> np.ndarray:
        return _frozen(value)

    @model_validator(mode="after")
    def _check(self) -> "GroupWeights":
        if self.values.ndim != 1 or np.any(~np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("group weights must be finite and positive")
        return self

    @classmethod
    def uniform(cls, num_bs: int) -> "GroupWeights":
        return cls(values=np.ones(num_bs))


class ReweightingResult(BaseModel):
    """MM 重加权的结果：最后一次松弛解与每轮的松弛目标值。"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    solution: BeamformingSolution
    weights: GroupWeights
    objectives: Tuple[float, ...]

    @property
    def iterations(self) -> int:
        return len(self.objectives)
