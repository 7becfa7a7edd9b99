"""
二阶锥规划（SOCP）的标准形式与求解结果模型。

标准形式：
    minimize    cᵀx
    subject to  Gx + s = h,  s ∈ K
                Ax = b
其中 K 为按顺序排列的锥块（非负象限或二阶锥）的笛卡尔积，
二阶锥 soc(d) 表示 {(t, u): t ≥ ‖u‖₂, dim u = d - 1}。
"""
from __future__ import annotations

from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolverError(RuntimeError):
    """求解器数值失败（未收敛、KKT 系统奇异等），区别于问题本身不可行。"""


class ConeKind(str, Enum):
    NONNEG = "nonneg"
    SOC = "soc"


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


class ConeBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ConeKind
    dim: int = Field(ge=1)


def _matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class ConicProblem(BaseModel):
    """
    字段：
        c: (n,) 目标系数
        A, b: (m, n), (m,) 等式约束
        G, h: (p, n), (p,) 锥约束，s = h - Gx
        cones: 锥块列表，维数之和等于 p
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    cones: Tuple[ConeBlock, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data):
        # 缺省的 A/b、G/h 视为空约束
        if not isinstance(data, dict):
            return data
        data = dict(data)
        c = np.ravel(np.asarray(data.get("c", []), dtype=float))
        data["c"] = _matrix(c)
        for mat, rhs in (("A", "b"), ("G", "h")):
            vec = np.ravel(np.asarray(data.get(rhs) if data.get(rhs) is not None else [], dtype=float))
            raw = data.get(mat)
            arr = np.zeros((vec.size, c.size)) if raw is None else np.asarray(raw, dtype=float)
            if arr.size == 0:
                arr = np.zeros((vec.size, c.size))
            data[mat], data[rhs] = _matrix(arr), _matrix(vec)
        return data

    @model_validator(mode="after")
    def _check_shapes(self) -> "ConicProblem":
        n = self.c.size
        for name, mat, rhs in (("A", self.A, self.b), ("G", self.G, self.h)):
            if mat.ndim != 2 or mat.shape != (rhs.size, n):
                raise ValueError(f"{name} has shape {mat.shape}, expected {(rhs.size, n)}")
        if sum(block.dim for block in self.cones) != self.h.size:
            raise ValueError("cone block dimensions must sum to the slack dimension")
        return self

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_equalities(self) -> int:
        return self.b.size

    @property
    def num_slacks(self) -> int:
        return self.h.size

    def cone_slices(self):
        """依次产出 (锥块, 切片)。"""
        start = 0
        for block in self.cones:
            yield block, slice(start, start + block.dim)
            start += block.dim


class KKTResiduals(BaseModel):
    """相对 KKT 残差：原始可行性、对偶可行性、对偶间隙。"""
    model_config = ConfigDict(frozen=True)

    primal: float
    dual: float
    gap: float

    @property
    def worst(self) -> float:
        return max(self.primal, self.dual, self.gap)


class ConicSolution(BaseModel):
    """
    求解结果。y 为拼接的对偶向量：前 m 项对应等式约束，后 p 项对应锥约束（z）。
    status=infeasible 时 y 为原始不可行证书（Gᵀz + Aᵀy = 0，hᵀz + bᵀy = -1）。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: SolverStatus
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    objective: float = float("nan")
    residuals: Optional[KKTResiduals] = None
    certificate_residual: Optional[float] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is SolverStatus.OPTIMAL

    def equality_dual(self, problem: ConicProblem) -> np.ndarray:
        return self.y[: problem.num_equalities]

    def cone_dual(self, problem: ConicProblem) -> np.ndarray:
        return self.y[problem.num_equalities:]
