"""
对比算法：CB、SP、GS 以及小规模下的穷举最优。

- coordinated_beamforming(): 所有基站保持工作，仅最小化发射功耗
- sparsity_pattern(): 一次不加权混合 ℓ1/ℓ2 松弛，之后与 GSBF 共用排序 + 二分选集
- greedy_selection(): 每轮关断使网络功耗下降最多的基站，直到无法再下降
- exhaustive_oracle(): 枚举全部 2^B - 1 个非空子集，取网络功耗最小者

所有函数的签名均为 (ch, cfg, budgets, ...)，budgets 为当前每基站功率预算，
单次运行时取 cfg.initial_bs_power；SELECTORS 把它们包装成 igsbpo.run 可用的选择器。
"""
from __future__ import annotations

import logging
from itertools import combinations
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from beamforming import (
    GroupWeights,
    effective_params,
    select_by_ordering,
    solve_fixed_set_socp,
    solve_weighted_group_relaxation,
)
from network import BeamformingSolution, ChannelRealization, InfeasibleError, NetworkConfig, network_power
from socp import SolverError

logger = logging.getLogger(__name__)

ORACLE_MAX_BS = 10


def _budgets(cfg: NetworkConfig, budgets: Optional[Sequence[float]]) -> np.ndarray:
    return np.asarray(cfg.initial_bs_power if budgets is None else budgets, dtype=float)


def _feasible_or_none(active, params, ch, cfg) -> Optional[BeamformingSolution]:
    try:
        return solve_fixed_set_socp(active, params, ch, cfg)
    except SolverError as exc:
        logger.warning("Treating active set %s as infeasible after solver failure: %s", list(active), exc)
        return None


def coordinated_beamforming(ch: ChannelRealization, cfg: NetworkConfig,
                            budgets: Optional[Sequence[float]] = None) -> BeamformingSolution:
    """全部基站工作的固定集合 SOCP（代价 β）；不可行时抛出 InfeasibleError。"""
    params = effective_params(cfg, ch, _budgets(cfg, budgets))
    sol = solve_fixed_set_socp(range(cfg.num_bs), params, ch, cfg)
    if sol is None:
        raise InfeasibleError("coordinated beamforming is infeasible with every BS active")
    return sol


def sparsity_pattern(ch: ChannelRealization, cfg: NetworkConfig,
                     budgets: Optional[Sequence[float]] = None) -> Tuple[Tuple[int, ...], BeamformingSolution]:
    params = effective_params(cfg, ch, _budgets(cfg, budgets))
    relaxed = solve_weighted_group_relaxation(GroupWeights.uniform(cfg.num_bs), params, ch, cfg)
    return select_by_ordering(relaxed, params, ch, cfg)


def greedy_selection(ch: ChannelRealization, cfg: NetworkConfig,
                     budgets: Optional[Sequence[float]] = None) -> Tuple[Tuple[int, ...], BeamformingSolution]:
    """
    贪心关断：每轮在当前工作的基站中，尝试逐个关断并求解固定集合 SOCP，
    选网络功耗下降最多的一个；没有可行且更省电的关断时停止。
    """
    params = effective_params(cfg, ch, _budgets(cfg, budgets))
    current = _feasible_or_none(range(cfg.num_bs), params, ch, cfg)
    if current is None:
        raise InfeasibleError("greedy selection is infeasible with every BS active")
    current_power = network_power(current, cfg)

    while len(current.active_set) > 1:
        best: Optional[BeamformingSolution] = None
        best_power = current_power
        for l in current.active_set:
            candidate = _feasible_or_none([m for m in current.active_set if m != l], params, ch, cfg)
            if candidate is None:
                continue
            power = network_power(candidate, cfg)
            if power < best_power:
                best, best_power = candidate, power
        if best is None:
            break
        switched = sorted(set(current.active_set) - set(best.active_set))
        logger.debug("Greedy switches off BS %s: %.6g W -> %.6g W", switched, current_power, best_power)
        current, current_power = best, best_power
    return current.active_set, current


def exhaustive_oracle(
    ch: ChannelRealization,
    cfg: NetworkConfig,
    budgets: Optional[Sequence[float]] = None,
    max_bs: int = ORACLE_MAX_BS,
) -> Tuple[Tuple[int, ...], BeamformingSolution]:
    """
    枚举全部非空子集（先按大小、再按字典序），返回网络功耗最小的可行子集；
    同值保留先枚举到的子集。B 超过 max_bs 抛出 ValueError，全部不可行抛出 InfeasibleError。
    """
    if cfg.num_bs > max_bs:
        raise ValueError(f"exhaustive search over {cfg.num_bs} BSs exceeds the cap of {max_bs}")
    params = effective_params(cfg, ch, _budgets(cfg, budgets))
    best: Optional[BeamformingSolution] = None
    best_power = np.inf
    feasible_count = 0
    for size in range(1, cfg.num_bs + 1):
        for subset in combinations(range(cfg.num_bs), size):
            sol = _feasible_or_none(subset, params, ch, cfg)
            if sol is None:
                continue
            feasible_count += 1
            power = network_power(sol, cfg)
            if power < best_power:
                best, best_power = sol, power
    if best is None:
        raise InfeasibleError("no subset of BSs meets the SINR targets")
    logger.debug("Oracle: %d of %d subsets feasible, best %s at %.6g W",
                 feasible_count, 2 ** cfg.num_bs - 1, list(best.active_set), best_power)
    return best.active_set, best


def _coordinated_selector(ch, cfg, budgets):
    sol = coordinated_beamforming(ch, cfg, budgets)
    return sol.active_set, sol


SELECTORS: Dict[str, object] = {
    "cb": _coordinated_selector,
    "sp": sparsity_pattern,
    "gs": greedy_selection,
    "oracle": exhaustive_oracle,
}
