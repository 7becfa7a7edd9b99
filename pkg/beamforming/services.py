"""
第一阶段：组稀疏波束成形（GSBF）与量化噪声计算。

流程：
1. effective_params(): 由率失真等式把量化噪声吸收进代价系数 β_l 与功率上限 P̂_l
2. solve_weighted_group_relaxation(): 加权混合 ℓ1/ℓ2 范数最小化（全部基站）
3. mm_reweight(): MM 重加权 ω_l = √(β_l P^c_l)/(‖w̃_l‖₂ + ε)
4. select_by_ordering(): 按关断优先级 θ_l 排序，二分搜索最多可关断的基站数
5. solve_fixed_set_socp(): 在给定活跃集上求解二阶锥问题，得到最终波束
6. quantization_noise(): q_l² = Σ_k|w_lk|²/(2^C_l - 1)

所有优化都在按噪声标准差 σ 缩放后的变量 x = w/σ 上求解，改善条件数。
"""
from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from network import BeamformingSolution, ChannelRealization, InfeasibleError, NetworkConfig
from socp import ConicBuilder, SolverError, SolverStatus, embed_complex, solve

from .config import EPSILON_NUMERATOR, MM_MAX_ITERS, MM_TOL
from .models import EffectiveParams, GroupWeights, ReweightingResult

logger = logging.getLogger(__name__)

_LN2 = np.log(2.0)
_RHO_FLOOR = 1e-12  # P^c_l = 0 时保持 ω_l > 0


def _capacity_fractions(cfg: NetworkConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    对每个有线基站返回 (1 - 2^-C, 1/(2^C - 1))。
    用 expm1 计算，C 很大时不会溢出。
    """
    caps = np.asarray(cfg.wireline_capacity, dtype=float)
    keep = -np.expm1(-caps * _LN2)  # (2^C - 1)/2^C
    inverse = np.exp2(-caps) / keep  # 1/(2^C - 1)
    return keep, inverse


def default_epsilon(cfg: NetworkConfig) -> float:
    """ε = 1e-3 / B。"""
    return EPSILON_NUMERATOR / cfg.num_bs


def effective_params(cfg: NetworkConfig, ch: ChannelRealization, budgets: Sequence[float]) -> EffectiveParams:
    """
    计算 β_l、P̂_l 与 H_k。
    参数：budgets 为当前每基站功率预算 P_l（必须为正）。
    """
    budgets = np.asarray(budgets, dtype=float)
    if budgets.shape != (cfg.num_bs,):
        raise ValueError(f"expected {cfg.num_bs} budgets, got shape {budgets.shape}")
    if np.any(budgets <= 0):
        raise ValueError("power budgets must be positive")
    if any(c <= 0 for c in cfg.wireline_capacity):
        raise ValueError("wireline capacities must be positive")
    ch.check_dimensions(cfg)

    xi = np.asarray(cfg.drain_efficiency, dtype=float)
    beta = 1.0 / xi
    p_hat = budgets.copy()
    coupling = np.zeros((cfg.num_users, cfg.num_bs))

    keep, inverse = _capacity_fractions(cfg)
    wired = np.arange(cfg.num_wireline)
    beta[wired] = 1.0 / (xi[wired] * keep)
    p_hat[wired] = budgets[wired] * keep
    coupling[:, wired] = (np.abs(ch.access[wired]) ** 2 * inverse[:, None]).T

    return EffectiveParams(beta=beta, p_hat=p_hat, quant_coupling=coupling, budgets=budgets)


def quantization_noise(sol: BeamformingSolution, cfg: NetworkConfig) -> Dict[int, float]:
    """率失真取等号：q_l² = Σ_k|w_lk|²/(2^C_l - 1)，只对活跃有线基站给出。"""
    _, inverse = _capacity_fractions(cfg)
    transmit = sol.bs_transmit_power
    return {l: float(transmit[l] * inverse[l]) for l in sol.active_wireline}


def _noise_vector(weights: np.ndarray, active: Sequence[int], cfg: NetworkConfig) -> np.ndarray:
    _, inverse = _capacity_fractions(cfg)
    q2 = np.zeros(cfg.num_bs)
    for l in active:
        if cfg.is_wireline(l):
            q2[l] = float(np.sum(np.abs(weights[l]) ** 2) * inverse[l])
    return q2


def _make_solution(weights: np.ndarray, active: Sequence[int], params: EffectiveParams,
                   cfg: NetworkConfig) -> BeamformingSolution:
    return BeamformingSolution.create(
        weights=weights,
        active_set=active,
        quant_noise=_noise_vector(weights, active, cfg),
        budgets=params.budgets,
        cfg=cfg,
    )


def _solve_on_set(
    active: Sequence[int],
    params: EffectiveParams,
    ch: ChannelRealization,
    cfg: NetworkConfig,
    group_weights: Optional[np.ndarray] = None,
    cost: Optional[np.ndarray] = None,
) -> Optional[np.ndarray]:
    """
    拼装并求解活跃集 active 上的二阶锥问题，返回 (B, K) 权重；不可行返回 None。
    group_weights 给定时目标为 Σ ω_l‖x_l‖（组松弛），否则为 ‖(√cost_l x_l)_l‖（即 Σ cost|w|² 的平方根）。
    约束：
      C1（每个用户）：‖(干扰项, 量化项, 1)‖ ≤ Re(h_k^H x_k)/√δ_k，且 Im(h_k^H x_k) = 0
      C2（每个基站）：‖x_l‖ ≤ √P̂_l/σ
    """
    act = sorted(int(l) for l in active)
    num_users = cfg.num_users
    sigma = float(np.sqrt(cfg.access_noise_power))
    emb = embed_complex(len(act) * num_users)
    extra = len(act) if group_weights is not None else 1
    n = emb.real_dim + extra

    def pos(i: int, k: int) -> int:
        return i * num_users + k

    def pad(rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        return np.hstack([rows, np.zeros((rows.shape[0], extra))])

    builder = ConicBuilder(n)
    wired = [(i, l) for i, l in enumerate(act) if cfg.is_wireline(l)]
    for k in range(num_users):
        h_k = ch.access[act, k]
        own = emb.inner_product_rows(h_k, [pos(i, k) for i in range(len(act))])
        rows = [own[0:1] / np.sqrt(cfg.sinr_targets[k])]
        for other in range(num_users):
            if other != k:
                rows.append(emb.inner_product_rows(h_k, [pos(i, other) for i in range(len(act))]))
        # 量化噪声：Σ_{k'} Σ_{l∈A^wl} |h_lk|²|w_lk'|²/(2^C-1)，包含 k' = k
        for i, l in wired:
            coupling = params.quant_coupling[k, l]
            if coupling > 0:
                rows.append(emb.selection_rows([pos(i, kk) for kk in range(num_users)], np.sqrt(coupling)))
        body = np.vstack(rows)
        offset = np.zeros(body.shape[0] + 1)
        offset[-1] = 1.0  # σ/σ
        builder.add_soc(pad(np.vstack([body, np.zeros((1, emb.real_dim))])), offset)
        builder.add_equality(pad(own[1:2]), 0.0)

    for i, l in enumerate(act):
        cap_rows = emb.selection_rows([pos(i, k) for k in range(num_users)])
        offset = np.zeros(cap_rows.shape[0] + 1)
        offset[0] = np.sqrt(params.p_hat[l]) / sigma
        builder.add_soc(pad(np.vstack([np.zeros((1, emb.real_dim)), cap_rows])), offset)

    c = np.zeros(n)
    if group_weights is not None:
        for i, l in enumerate(act):
            rows = np.zeros((1 + 2 * num_users, n))
            rows[0, emb.real_dim + i] = 1.0
            rows[1:, : emb.real_dim] = emb.selection_rows([pos(i, k) for k in range(num_users)])
            builder.add_soc(rows)
            c[emb.real_dim + i] = group_weights[l]
    else:
        cost = params.beta if cost is None else np.asarray(cost, dtype=float)
        scales = np.repeat(np.sqrt(cost[act]), 2 * num_users)
        rows = np.zeros((1 + emb.real_dim, n))
        rows[0, emb.real_dim] = 1.0
        rows[1:, : emb.real_dim] = np.diag(scales)
        builder.add_soc(rows)
        c[emb.real_dim] = 1.0

    result = solve(builder.build(c))
    if result.status is SolverStatus.INFEASIBLE:
        logger.debug("SOCP infeasible on active set %s", act)
        return None
    if result.status is not SolverStatus.OPTIMAL:
        raise SolverError(f"SOCP on active set {act} ended with status {result.status.value}")

    local = sigma * emb.unpack(result.x[: emb.real_dim]).reshape(len(act), num_users)
    weights = np.zeros((cfg.num_bs, num_users), dtype=complex)
    weights[act] = local
    return weights


def solve_fixed_set_socp(
    active: Sequence[int],
    params: EffectiveParams,
    ch: ChannelRealization,
    cfg: NetworkConfig,
    objective_weights: Optional[Sequence[float]] = None,
) -> Optional[BeamformingSolution]:
    """
    固定活跃集上的功耗最小化：min Σ_{l∈A} Σ_k cost_l|w_lk|²，s.t. C1(A)、C2(A)。
    objective_weights 缺省为 β。不可行返回 None；求解器数值失败抛出 SolverError。
    """
    if not active:
        raise ValueError("active set must be nonempty")
    weights = _solve_on_set(active, params, ch, cfg, cost=objective_weights)
    if weights is None:
        return None
    return _make_solution(weights, active, params, cfg)


def solve_weighted_group_relaxation(
    weights: GroupWeights,
    params: EffectiveParams,
    ch: ChannelRealization,
    cfg: NetworkConfig,
) -> BeamformingSolution:
    """
    全部基站上的加权混合范数最小化 min Σ_l ω_l‖w̃_l‖₂，s.t. C1(ℬ)、C2(ℬ)。
    返回的（一般是稠密的）解只用于排序与重加权；全开也不可行时抛出 InfeasibleError。
    """
    if weights.values.shape != (cfg.num_bs,):
        raise ValueError("one group weight per BS is required")
    everyone = list(range(cfg.num_bs))
    # 归一化到最大值为 1，最优解不变
    scaled = weights.values / np.max(weights.values)
    solved = _solve_on_set(everyone, params, ch, cfg, group_weights=scaled)
    if solved is None:
        raise InfeasibleError("SINR targets cannot be met even with every BS active")
    return _make_solution(solved, everyone, params, cfg)


def _cost_roots(params: EffectiveParams, cfg: NetworkConfig) -> np.ndarray:
    """√(β_l P^c_l)。"""
    return np.sqrt(params.beta * cfg.relative_power)


def mm_reweight(sol: BeamformingSolution, params: EffectiveParams, cfg: NetworkConfig,
                epsilon: float) -> GroupWeights:
    """ω_l = √(β_l P^c_l)/(‖w̃_l‖₂ + ε)。"""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rho = np.maximum(_cost_roots(params, cfg), _RHO_FLOOR)
    return GroupWeights(values=rho / (sol.group_norms + epsilon))


def relaxation_objective(sol: BeamformingSolution, params: EffectiveParams, cfg: NetworkConfig,
                         epsilon: float) -> float:
    """MM 所下降的凹目标 Σ_l √(β_l P^c_l)·log(‖w̃_l‖₂ + ε)。"""
    rho = np.maximum(_cost_roots(params, cfg), _RHO_FLOOR)
    return float(np.sum(rho * np.log(sol.group_norms + epsilon)))


def run_mm_reweighting(
    ch: ChannelRealization,
    params: EffectiveParams,
    cfg: NetworkConfig,
    *,
    epsilon: Optional[float] = None,
    max_iters: int = MM_MAX_ITERS,
    tol: float = MM_TOL,
) -> ReweightingResult:
    """
    从 ω_l = √(β_l P^c_l) 出发反复求解组松弛并重加权，
    直到松弛目标的相对下降量小于 tol 或达到 max_iters 次重加权。
    首次之后的松弛若求解器数值失败，停止重加权并保留上一次成功的松弛解。
    """
    eps = default_epsilon(cfg) if epsilon is None else epsilon
    weights = GroupWeights(values=np.maximum(_cost_roots(params, cfg), _RHO_FLOOR))
    sol = solve_weighted_group_relaxation(weights, params, ch, cfg)
    objectives = [relaxation_objective(sol, params, cfg, eps)]
    for it in range(max_iters):
        candidate = mm_reweight(sol, params, cfg, eps)
        try:
            sol = solve_weighted_group_relaxation(candidate, params, ch, cfg)
        except SolverError as exc:
            logger.warning("MM iteration %d: relaxation failed, keeping previous solution: %s", it + 1, exc)
            break
        weights = candidate
        objectives.append(relaxation_objective(sol, params, cfg, eps))
        decrease = objectives[-2] - objectives[-1]
        logger.debug("MM iteration %d: objective %.6g (decrease %.3g)", it + 1, objectives[-1], decrease)
        if decrease < tol * max(1.0, abs(objectives[-2])):
            break
    return ReweightingResult(solution=sol, weights=weights, objectives=tuple(objectives))


def switch_off_priority(sol: BeamformingSolution, params: EffectiveParams, ch: ChannelRealization,
                        cfg: NetworkConfig) -> np.ndarray:
    """θ_l = √(Σ_k|h_lk|²)/√(β_l P^c_l)·‖w̃_l‖₂；P^c_l = 0 的基站取 +∞（最后关断）。"""
    gain = np.sqrt(np.sum(np.abs(ch.access) ** 2, axis=1))
    roots = _cost_roots(params, cfg)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(roots > 0, gain / np.where(roots > 0, roots, 1.0) * sol.group_norms, np.inf)
    return theta


def _try_fixed_set(active, params, ch, cfg) -> Optional[BeamformingSolution]:
    try:
        return solve_fixed_set_socp(active, params, ch, cfg)
    except SolverError as exc:
        logger.warning("Treating active set %s as infeasible after solver failure: %s", list(active), exc)
        return None


def select_by_ordering(
    relaxed: BeamformingSolution,
    params: EffectiveParams,
    ch: ChannelRealization,
    cfg: NetworkConfig,
) -> Tuple[Tuple[int, ...], BeamformingSolution]:
    """
    按 θ 升序（同值按下标）排列基站，二分查找最大的关断数 J，
    使剩余集合上的固定集合 SOCP 仍可行；返回该集合及其 β 代价下的解。
    """
    theta = switch_off_priority(relaxed, params, ch, cfg)
    order = sorted(range(cfg.num_bs), key=lambda l: (theta[l], l))
    cache: Dict[int, Optional[BeamformingSolution]] = {}

    def attempt(j: int) -> Optional[BeamformingSolution]:
        if j not in cache:
            cache[j] = _try_fixed_set(sorted(order[j:]), params, ch, cfg)
        return cache[j]

    if attempt(0) is None:
        raise InfeasibleError("fixed-set problem over all BSs is infeasible")
    lo, hi = 0, cfg.num_bs  # attempt(lo) 可行；hi = B 表示空集
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if attempt(mid) is not None:
            lo = mid
        else:
            hi = mid
    chosen = cache[lo]
    if hi < cfg.num_bs:
        logger.debug("Switching off %d BSs; switching off %d more is infeasible", lo, hi - lo)
    logger.info("Selected active set %s (switched off %d of %d BSs)", list(chosen.active_set), lo, cfg.num_bs)
    return chosen.active_set, chosen


def gsbf_select(
    ch: ChannelRealization,
    params: EffectiveParams,
    cfg: NetworkConfig,
    *,
    epsilon: Optional[float] = None,
    mm_max_iters: int = MM_MAX_ITERS,
    mm_tol: float = MM_TOL,
) -> Tuple[Tuple[int, ...], BeamformingSolution]:
    """
    组稀疏波束成形：MM 重加权松弛 → θ 排序 → 二分选集 → 固定集合 SOCP。
    全开仍不可行时抛出 InfeasibleError。
    """
    mm = run_mm_reweighting(ch, params, cfg, epsilon=epsilon, max_iters=mm_max_iters, tol=mm_tol)
    logger.debug("MM reweighting finished after %d relaxations", mm.iterations)
    return select_by_ordering(mm.solution, params, ch, cfg)
