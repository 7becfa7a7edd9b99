"""
I-GSBPO：交替执行第一阶段（组稀疏波束成形 + 量化噪声）与第二阶段（无线回传功率控制）。

每轮：
1. selector(ch, cfg, budgets) 在当前功率预算下选出活跃集并求波束
2. 由波束计算无线基站服务速率 → SINR 门限 → 云端功率 P̃
3. 活跃无线基站的功率预算更新为其接收功率 P_l；有线基站与休眠基站的预算不变
直到网络功耗的相对变化小于 tol、预算不再变化或达到最大迭代次数。
任一阶段不可行（或第一阶段求解器数值失败）即终止，结果记为不可行；
best_* 仍给出轨迹中功耗最低的可行迭代，仅供参考。
"""
from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from backhaul import BackhaulInfeasibleError, rate_requirements, solve_power_control
from beamforming import effective_params, gsbf_select, quantization_noise
from network import (
    BackhaulAllocation,
    BeamformingSolution,
    ChannelRealization,
    InfeasibleError,
    NetworkConfig,
    RunTrace,
    TraceEntry,
    network_power,
)
from socp import SolverError

from .models import IgsbpoResult, IterationConfig, StopReason

logger = logging.getLogger(__name__)

Selector = Callable[[ChannelRealization, NetworkConfig, np.ndarray], Tuple[Sequence[int], BeamformingSolution]]


def gsbf_selector(itcfg: IterationConfig) -> Selector:
    """返回使用 gsbf_select 的第一阶段选择器。"""

    def select(ch: ChannelRealization, cfg: NetworkConfig, budgets: np.ndarray):
        params = effective_params(cfg, ch, budgets)
        return gsbf_select(ch, params, cfg, epsilon=itcfg.epsilon, mm_max_iters=itcfg.mm_max_iters,
                           mm_tol=itcfg.mm_tol)

    return select


def stage_two(sol: BeamformingSolution, ch: ChannelRealization, cfg: NetworkConfig,
              method: str = "tight") -> BackhaulAllocation:
    """速率守恒 + 功率控制；没有活跃无线基站时返回空分配。"""
    if not sol.active_wireless:
        return BackhaulAllocation()
    requirements = rate_requirements(sol, ch, cfg)
    return solve_power_control(requirements.gamma(), ch, cfg, method=method)


def converged(trace: RunTrace, itcfg: IterationConfig) -> bool:
    """最后两个可行迭代的网络功耗相对变化是否小于 tol；可行项不足两个时抛出 ValueError。"""
    feasible = trace.feasible_entries
    if len(feasible) < 2:
        raise ValueError("convergence needs at least two feasible trace entries")
    previous, current = feasible[-2].network_power, feasible[-1].network_power
    scale = max(abs(current), np.finfo(float).tiny)
    return abs(current - previous) / scale < itcfg.tol


def run(
    cfg: NetworkConfig,
    ch: ChannelRealization,
    itcfg: Optional[IterationConfig] = None,
    selector: Optional[Selector] = None,
) -> IgsbpoResult:
    """
    执行两阶段迭代。selector 缺省为 GSBF；基线算法以同样的签名接入即可获得“迭代”模式。
    """
    itcfg = itcfg or IterationConfig()
    selector = selector or gsbf_selector(itcfg)
    ch.check_dimensions(cfg)

    budgets = np.asarray(cfg.initial_bs_power, dtype=float).copy()
    trace = RunTrace()
    last: Optional[Tuple[BeamformingSolution, BackhaulAllocation, float]] = None
    best: Optional[Tuple[BeamformingSolution, BackhaulAllocation, float]] = None
    reason = StopReason.MAX_ITERATIONS

    for iteration in range(1, itcfg.max_iters + 1):
        try:
            _, sol = selector(ch, cfg, budgets)
        except (InfeasibleError, SolverError) as exc:
            logger.info("Iteration %d: stage 1 infeasible (%s)", iteration, exc)
            trace = trace.extended(TraceEntry(iteration=iteration, network_power=float("inf"), feasible=False))
            reason = StopReason.STAGE1_INFEASIBLE
            break
        noise = quantization_noise(sol, cfg)

        try:
            alloc = stage_two(sol, ch, cfg, itcfg.power_control_method)
        except BackhaulInfeasibleError as exc:
            logger.info("Iteration %d: stage 2 infeasible (load %.4g)", iteration, exc.load)
            trace = trace.extended(
                TraceEntry(iteration=iteration, network_power=float("inf"), active_set=sol.active_set, feasible=False)
            )
            reason = StopReason.STAGE2_INFEASIBLE
            break

        power = network_power(sol, cfg)
        trace = trace.extended(
            TraceEntry(iteration=iteration, network_power=power, active_set=sol.active_set, feasible=True,
                       allocation=alloc)
        )
        logger.info(
            "Iteration %d: network power %.6g W, active BSs %s, %d wireline quantizers",
            iteration, power, list(sol.active_set), len(noise),
        )
        last = (sol, alloc, power)
        if best is None or power < best[2]:
            best = last

        if len(trace.feasible_entries) >= 2 and converged(trace, itcfg):
            reason = StopReason.CONVERGED
            break
        updated = budgets.copy()
        for l, received in zip(alloc.bs_indices, alloc.received_powers):
            updated[l] = received
        if np.array_equal(updated, budgets):
            reason = StopReason.FIXED_POINT
            break
        budgets = updated

    if last is None:
        return IgsbpoResult(feasible=False, stop_reason=reason, trace=trace)
    if reason in (StopReason.STAGE1_INFEASIBLE, StopReason.STAGE2_INFEASIBLE):
        logger.info("Run ended infeasible after %d iterations; best feasible iterate %.6g W",
                    len(trace), best[2])
        return IgsbpoResult(
            feasible=False,
            stop_reason=reason,
            trace=trace,
            best_solution=best[0],
            best_allocation=best[1],
            best_network_power=best[2],
        )
    return IgsbpoResult(
        feasible=True,
        stop_reason=reason,
        trace=trace,
        solution=last[0],
        allocation=last[1],
        network_power=last[2],
        best_solution=best[0],
        best_allocation=best[1],
        best_network_power=best[2],
    )
