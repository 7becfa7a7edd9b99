"""
二阶锥规划求解服务。

核心功能：
- solve(): presolve 后调用 cvxopt 的原始-对偶内点法（Nesterov-Todd 缩放 + Mehrotra 校正）
- kkt_residuals(): 相对 KKT 残差，用于停止判据与测试
- embed_complex(): 复变量到实变量的嵌入（每个复数拆成实部/虚部两列）
- ConicBuilder: 按锥块逐步拼装 G/h、A/b 的辅助类

实例规模很小（几百个实变量），稠密线性代数即可。
每次 solve 都构造独立的工作区，不同线程可同时调用。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from cvxopt import matrix, solvers
from scipy.linalg import qr

from .config import RANK_TOL, SOCP_MAX_ITERS, SOCP_SHOW_PROGRESS, SOCP_TOL
from .models import ConeBlock, ConeKind, ConicProblem, ConicSolution, KKTResiduals, SolverStatus

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# 锥投影与残差
# ---------------------------------------------------------------------------

def _soc_projection(v: np.ndarray) -> np.ndarray:
    t, u = v[0], v[1:]
    norm_u = np.linalg.norm(u)
    if norm_u <= t:
        return v.copy()
    if norm_u <= -t:
        return np.zeros_like(v)
    scale = (t + norm_u) / 2.0
    return np.concatenate(([scale], scale * u / norm_u))


def cone_distance(problem: ConicProblem, v: np.ndarray) -> float:
    """v 到锥 K 的欧氏距离（逐块投影）。K 自对偶，对偶变量也用这个函数检查。"""
    total = 0.0
    for block, part in problem.cone_slices():
        piece = v[part]
        if block.kind is ConeKind.NONNEG:
            total += float(np.sum(np.minimum(piece, 0.0) ** 2))
        else:
            total += float(np.sum((piece - _soc_projection(piece)) ** 2))
    return float(np.sqrt(total))


def kkt_residuals(problem: ConicProblem, x: np.ndarray, y: np.ndarray) -> KKTResiduals:
    """
    相对 KKT 残差。y = [等式对偶 (m); 锥对偶 z (p)]。
        primal = max(‖Ax-b‖/max(1,‖b‖), dist_K(h-Gx)/max(1,‖h‖))
        dual   = max(‖c+Aᵀy+Gᵀz‖/max(1,‖c‖), dist_K(z)/max(1,‖c‖))
        gap    = |cᵀx + bᵀy + hᵀz| / max(1, |cᵀx|)
    维度不一致时抛出 ValueError。
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n, m, p = problem.num_vars, problem.num_equalities, problem.num_slacks
    if x.size != n or y.size != m + p:
        raise ValueError(f"expected x of size {n} and y of size {m + p}, got {x.size} and {y.size}")
    y_eq, z = y[:m], y[m:]
    c, A, b, G, h = problem.c, problem.A, problem.b, problem.G, problem.h

    slack = h - G @ x
    primal = max(
        np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b)) if m else 0.0,
        cone_distance(problem, slack) / max(1.0, np.linalg.norm(h)) if p else 0.0,
    )
    stationarity = c + A.T @ y_eq + G.T @ z
    dual = max(
        np.linalg.norm(stationarity) / max(1.0, np.linalg.norm(c)) if n else 0.0,
        cone_distance(problem, z) / max(1.0, np.linalg.norm(c)) if p else 0.0,
    )
    objective = float(c @ x) if n else 0.0
    gap = abs(objective + float(b @ y_eq) + float(h @ z)) / max(1.0, abs(objective))
    return KKTResiduals(primal=float(primal), dual=float(dual), gap=float(gap))


# ---------------------------------------------------------------------------
# presolve
# ---------------------------------------------------------------------------

@dataclass
class _Presolved:
    problem: ConicProblem
    keep_rows: np.ndarray  # 保留的等式行（原始下标）
    keep_cols: np.ndarray  # 保留的变量（原始下标）
    status: Optional[SolverStatus] = None
    certificate: Optional[np.ndarray] = None  # 等式不相容时的 y 证书


def _presolve(problem: ConicProblem) -> _Presolved:
    """去掉零列、零行以及线性相关/重复的等式行；等式不相容时直接判定不可行。"""
    A, b, G, c = problem.A, problem.b, problem.G, problem.c
    n, m = problem.num_vars, problem.num_equalities

    zero_cols = np.all(A == 0, axis=0) & np.all(G == 0, axis=0) if n else np.zeros(0, dtype=bool)
    if np.any(zero_cols & (c != 0)):
        # 不受约束且有代价的变量：目标无下界
        return _Presolved(problem, np.arange(m), np.arange(n), status=SolverStatus.UNBOUNDED)
    keep_cols = np.flatnonzero(~zero_cols)

    keep_rows = np.arange(m)
    if m:
        A_kept = A[:, keep_cols]
        x0, *_ = np.linalg.lstsq(A_kept, b, rcond=None) if keep_cols.size else (np.zeros(0),)
        residual = b - A_kept @ x0 if keep_cols.size else b.copy()
        scale = max(1.0, float(np.linalg.norm(b)))
        if np.linalg.norm(residual) > np.sqrt(RANK_TOL) * scale:
            # Aᵀr = 0 且 bᵀr = ‖r‖² > 0，归一化后即为不可行证书
            certificate = -residual / float(residual @ residual)
            return _Presolved(problem, keep_rows, keep_cols, status=SolverStatus.INFEASIBLE,
                              certificate=certificate)
        nonzero = np.flatnonzero(np.any(A_kept != 0, axis=1))
        if nonzero.size:
            _, r_factor, pivots = qr(A_kept[nonzero].T, mode="economic", pivoting=True)
            diag = np.abs(np.diag(r_factor))
            rank = int(np.sum(diag > RANK_TOL * max(1.0, diag[0]))) if diag.size else 0
            keep_rows = np.sort(nonzero[pivots[:rank]])
        else:
            keep_rows = nonzero

    reduced = ConicProblem(
        c=c[keep_cols],
        A=A[np.ix_(keep_rows, keep_cols)],
        b=b[keep_rows],
        G=G[:, keep_cols],
        h=problem.h,
        cones=problem.cones,
    )
    return _Presolved(reduced, keep_rows, keep_cols)


# ---------------------------------------------------------------------------
# cvxopt 接口
# ---------------------------------------------------------------------------

def _dense(arr: np.ndarray) -> matrix:
    """numpy 数组转 cvxopt 稠密矩阵（列优先）。"""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        return matrix(arr.tolist(), (arr.size, 1), "d")
    rows, cols = arr.shape
    return matrix(arr.T.ravel().tolist(), (rows, cols), "d")


def _cone_permutation(problem: ConicProblem) -> Tuple[np.ndarray, dict]:
    """cvxopt 要求非负块在前、二阶锥块在后；返回行排列和 dims。"""
    linear: List[int] = []
    quadratic: List[int] = []
    soc_dims: List[int] = []
    for block, part in problem.cone_slices():
        rows = list(range(part.start, part.stop))
        if block.kind is ConeKind.NONNEG:
            linear.extend(rows)
        else:
            quadratic.extend(rows)
            soc_dims.append(block.dim)
    perm = np.array(linear + quadratic, dtype=int)
    return perm, {"l": len(linear), "q": soc_dims, "s": []}


def _call_backend(problem: ConicProblem, tol: float, max_iters: int) -> dict:
    perm, dims = _cone_permutation(problem)
    options = {
        "show_progress": SOCP_SHOW_PROGRESS,
        "maxiters": max_iters,
        "abstol": tol,
        "reltol": tol,
        "feastol": tol,
    }
    kwargs = {}
    if problem.num_equalities:
        kwargs.update(A=_dense(problem.A), b=_dense(problem.b))
    result = solvers.conelp(
        _dense(problem.c),
        _dense(problem.G[perm]) if perm.size else matrix(0.0, (0, problem.num_vars)),
        _dense(problem.h[perm]) if perm.size else matrix(0.0, (0, 1)),
        dims,
        options=options,
        **kwargs,
    )
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.size)
    out = {"status": result["status"], "iterations": int(result.get("iterations", 0) or 0)}
    for key in ("x", "y", "z"):
        value = result.get(key)
        out[key] = None if value is None else np.array(value, dtype=float).ravel()
    if out["z"] is not None:
        out["z"] = out["z"][inverse]
    return out


def _restore(pre: _Presolved, original: ConicProblem, x_red, y_red, z) -> Tuple[np.ndarray, np.ndarray]:
    x = np.zeros(original.num_vars)
    if x_red is not None:
        x[pre.keep_cols] = x_red
    y_eq = np.zeros(original.num_equalities)
    if y_red is not None and pre.keep_rows.size:
        y_eq[pre.keep_rows] = y_red
    z_full = np.zeros(original.num_slacks) if z is None else z
    return x, np.concatenate((y_eq, z_full))


def solve(problem: ConicProblem, tol: float = SOCP_TOL, max_iters: int = SOCP_MAX_ITERS) -> ConicSolution:
    """
    求解二阶锥规划。
    返回的 status：
      - optimal：KKT 残差满足 tol，x 可行
      - infeasible：y 为原始不可行证书
      - unbounded：对偶不可行
      - numerical-failure：max_iters 内未收敛或后端数值异常（调用方按不可行处理但需单独记录）
    """
    pre = _presolve(problem)
    if pre.status is SolverStatus.UNBOUNDED:
        return ConicSolution(status=SolverStatus.UNBOUNDED)
    if pre.status is SolverStatus.INFEASIBLE:
        y = np.concatenate((pre.certificate, np.zeros(problem.num_slacks)))
        return ConicSolution(
            status=SolverStatus.INFEASIBLE,
            y=y,
            certificate_residual=float(np.linalg.norm(problem.A.T @ pre.certificate)),
        )

    reduced = pre.problem
    if reduced.num_vars == 0:
        # 没有自由变量：只需检查 h 是否在锥内
        x, y = _restore(pre, problem, None, None, None)
        feasible = cone_distance(reduced, reduced.h) <= tol * max(1.0, np.linalg.norm(reduced.h))
        status = SolverStatus.OPTIMAL if feasible else SolverStatus.INFEASIBLE
        return ConicSolution(status=status, x=x if feasible else None, y=y, objective=0.0,
                             residuals=kkt_residuals(problem, x, y) if feasible else None)

    try:
        raw = _call_backend(reduced, tol, max_iters)
    except (ArithmeticError, ValueError) as exc:
        logger.warning("Conic backend failed on %d-variable problem: %s", reduced.num_vars, exc)
        return ConicSolution(status=SolverStatus.NUMERICAL_FAILURE)

    status = raw["status"]
    if status == "primal infeasible":
        x, y = _restore(pre, problem, None, raw["y"], raw["z"])
        m = problem.num_equalities
        cert = float(np.linalg.norm(problem.A.T @ y[:m] + problem.G.T @ y[m:]))
        return ConicSolution(status=SolverStatus.INFEASIBLE, y=y, certificate_residual=cert,
                             iterations=raw["iterations"])
    if status == "dual infeasible":
        return ConicSolution(status=SolverStatus.UNBOUNDED, iterations=raw["iterations"])
    if raw["x"] is None:
        return ConicSolution(status=SolverStatus.NUMERICAL_FAILURE, iterations=raw["iterations"])

    x, y = _restore(pre, problem, raw["x"], raw["y"], raw["z"])
    residuals = kkt_residuals(problem, x, y)
    if status == "optimal" or residuals.worst <= tol:
        return ConicSolution(
            status=SolverStatus.OPTIMAL,
            x=x,
            y=y,
            objective=float(problem.c @ x),
            residuals=residuals,
            iterations=raw["iterations"],
        )
    logger.warning(
        "Conic solve stopped after %d iterations without convergence (worst residual %.3g)",
        raw["iterations"],
        residuals.worst,
    )
    return ConicSolution(status=SolverStatus.NUMERICAL_FAILURE, x=x, y=y, residuals=residuals,
                         iterations=raw["iterations"])


# ---------------------------------------------------------------------------
# 复数嵌入与问题拼装
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexEmbedding:
    """
    复变量 w ∈ C^d 到实变量 x ∈ R^{2d} 的映射：x[2j] = Re w_j，x[2j+1] = Im w_j。
    """
    complex_dim: int

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    def real_index(self, j: int) -> int:
        return 2 * j

    def imag_index(self, j: int) -> int:
        return 2 * j + 1

    def pack(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex).ravel()
        x = np.empty(self.real_dim)
        x[0::2], x[1::2] = w.real, w.imag
        return x

    def unpack(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[0 : self.real_dim : 2] + 1j * x[1 : self.real_dim : 2]

    def inner_product_rows(self, h: np.ndarray, positions: Optional[Sequence[int]] = None) -> np.ndarray:
        """
        h^H w 的实线性表示，返回 2 行：[Re(h^H w); Im(h^H w)]。
        positions[i] 为 h[i] 对应的复变量下标，缺省为 0..d-1。
        单个复数时两行分别是 [Re h, Im h] 与 [-Im h, Re h]。
        """
        h = np.asarray(h, dtype=complex).ravel()
        positions = range(h.size) if positions is None else positions
        rows = np.zeros((2, self.real_dim))
        for coeff, j in zip(h, positions):
            re, im = self.real_index(j), self.imag_index(j)
            rows[0, re] += coeff.real
            rows[0, im] += coeff.imag
            rows[1, re] -= coeff.imag
            rows[1, im] += coeff.real
        return rows

    def selection_rows(self, positions: Sequence[int], scale: float = 1.0) -> np.ndarray:
        """依次取出 positions 上复变量的实部和虚部（乘以 scale），共 2·len 行。"""
        rows = np.zeros((2 * len(positions), self.real_dim))
        for i, j in enumerate(positions):
            rows[2 * i, self.real_index(j)] = scale
            rows[2 * i + 1, self.imag_index(j)] = scale
        return rows


def embed_complex(complex_dim: int) -> ComplexEmbedding:
    """返回 complex_dim 维复向量的实嵌入描述。"""
    if complex_dim < 0:
        raise ValueError("complex_dim must be nonnegative")
    return ComplexEmbedding(complex_dim)


class ConicBuilder:
    """
    逐块拼装 ConicProblem。锥块写成 t ≥ ‖u‖ 的仿射形式：
    s = offset + M x，内部转换成 G = -M、h = offset。
    """

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self._G: List[np.ndarray] = []
        self._h: List[np.ndarray] = []
        self._cones: List[ConeBlock] = []
        self._A: List[np.ndarray] = []
        self._b: List[float] = []

    def _affine(self, rows: np.ndarray, offset) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.num_vars:
            raise ValueError(f"cone rows have {rows.shape[1]} columns, expected {self.num_vars}")
        offset = np.broadcast_to(np.asarray(offset, dtype=float), (rows.shape[0],))
        return -rows, offset.copy()

    def add_soc(self, rows: np.ndarray, offset=0.0) -> None:
        """约束 (offset + rows x) ∈ soc，首行为 t。"""
        G, h = self._affine(rows, offset)
        self._G.append(G)
        self._h.append(h)
        self._cones.append(ConeBlock(kind=ConeKind.SOC, dim=G.shape[0]))

    def add_nonneg(self, rows: np.ndarray, offset=0.0) -> None:
        """约束 offset + rows x ≥ 0。"""
        G, h = self._affine(rows, offset)
        self._G.append(G)
        self._h.append(h)
        self._cones.append(ConeBlock(kind=ConeKind.NONNEG, dim=G.shape[0]))

    def add_equality(self, rows: np.ndarray, rhs) -> None:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        self._A.append(rows)
        self._b.extend(np.broadcast_to(np.asarray(rhs, dtype=float), (rows.shape[0],)).tolist())

    def build(self, c: np.ndarray) -> ConicProblem:
        n = self.num_vars
        return ConicProblem(
            c=c,
            A=np.vstack(self._A) if self._A else np.zeros((0, n)),
            b=np.asarray(self._b, dtype=float),
            G=np.vstack(self._G) if self._G else np.zeros((0, n)),
            h=np.concatenate(self._h) if self._h else np.zeros(0),
            cones=tuple(self._cones),
        )
