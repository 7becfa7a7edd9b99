"""
网络功耗与 SINR 计算公式，供所有算法模块共用。

主要函数：
- relative_backhaul_power(): 单个基站的相对回传功耗 P^c_l
- network_power(): 网络总功耗（活跃基站发射功耗/漏极效率 + P^c）
- user_sinr(): 含量化噪声的用户 SINR
- backhaul_sinr(): 无线回传链路的 SINR
- validate_solution(): 检查一组解是否满足原问题的全部约束

所有函数都是纯函数，可被多个线程同时调用。
"""
from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np

from .models import BackhaulAllocation, BeamformingSolution, ChannelRealization, NetworkConfig, Violation

logger = logging.getLogger(__name__)

DEFAULT_VALIDATION_TOL = 1e-6  # 相对容差，比求解精度高一个数量级


def relative_backhaul_power(l: int, cfg: NetworkConfig) -> float:
    """返回基站 l 的 P^c_l（瓦特）；下标越界抛出 IndexError。"""
    if not 0 <= l < cfg.num_bs:
        raise IndexError(f"BS index {l} out of range for {cfg.num_bs} BSs")
    return float(cfg.relative_power[l])


def network_power(sol: BeamformingSolution, cfg: NetworkConfig) -> float:
    """
    网络总功耗：有线活跃基站计入 (Σ_k|w_lk|² + q_l²)/ξ_l + P^c_l，
    无线活跃基站计入 Σ_k|w_lk|²/ξ_l + P^c_l，休眠基站不计。
    """
    if not sol.active_set:
        return 0.0
    active = list(sol.active_set)
    xi = np.asarray(cfg.drain_efficiency)[active]
    radiated = sol.bs_transmit_power[active] + sol.quant_noise[active]
    return float(np.sum(radiated / xi) + np.sum(cfg.relative_power[active]))


def _quantization_floor(sol: BeamformingSolution, ch: ChannelRealization) -> np.ndarray:
    """每个用户收到的量化噪声功率 Σ_{l∈A^wl} |h_lk|² q_l²。"""
    wired = list(sol.active_wireline)
    if not wired:
        return np.zeros(ch.access.shape[1])
    gains = np.abs(ch.access[wired]) ** 2
    return sol.quant_noise[wired] @ gains


def user_sinrs(sol: BeamformingSolution, ch: ChannelRealization, cfg: NetworkConfig) -> np.ndarray:
    """全部用户的 SINR（线性值）。"""
    # effective[k, i] = h_k^H w_i
    effective = ch.access.conj().T @ sol.weights
    powers = np.abs(effective) ** 2
    signal = np.diag(powers)
    interference = powers.sum(axis=1) - signal
    denominator = interference + _quantization_floor(sol, ch) + cfg.access_noise_power
    return signal / denominator


def user_sinr(k: int, sol: BeamformingSolution, ch: ChannelRealization, cfg: NetworkConfig) -> float:
    """用户 k 的 SINR：|h_k^H w_k|² / (Σ_{i≠k}|h_k^H w_i|² + Σ_{l∈A^wl}|h_lk|² q_l² + σ²)。"""
    return float(user_sinrs(sol, ch, cfg)[k])


def backhaul_sinr(alloc: BackhaulAllocation, ch: ChannelRealization, cfg: NetworkConfig) -> np.ndarray:
    """无线回传 SINR：P̃_l|ĥ_l|² / (Σ_{m≠l} P̃_m|ĥ_l|² + κ²)，与 alloc.bs_indices 对齐。"""
    if not alloc.bs_indices:
        return np.zeros(0)
    gains = np.array([ch.backhaul_gain(l, cfg) for l in alloc.bs_indices])
    total = alloc.tx_powers.sum()
    signal = alloc.tx_powers * gains
    interference = (total - alloc.tx_powers) * gains
    return signal / (interference + cfg.backhaul_noise_power)


def validate_solution(
    sol: BeamformingSolution,
    alloc: Optional[BackhaulAllocation],
    ch: ChannelRealization,
    cfg: NetworkConfig,
    tol: float = DEFAULT_VALIDATION_TOL,
) -> List[Violation]:
    """
    逐条检查原问题约束：用户 SINR ≥ δ_k、有线回传率失真约束、有线/无线功率上限、回传 SINR ≥ γ_l。
    返回违例列表；列表为空当且仅当解在容差 tol（相对）内可行。
    维度不一致时抛出 ValueError。
    """
    ch.check_dimensions(cfg)
    if sol.weights.shape != (cfg.num_bs, cfg.num_users):
        raise ValueError(f"weights shape {sol.weights.shape} does not match config")

    violations: List[Violation] = []
    sinrs = user_sinrs(sol, ch, cfg)
    for k, (sinr, target) in enumerate(zip(sinrs, cfg.sinr_targets)):
        if sinr < target * (1 - tol):
            violations.append(
                Violation(constraint="user-sinr", index=k, magnitude=(target - sinr) / target,
                          detail=f"SINR {sinr:.6g} below target {target:.6g}")
            )

    transmit = sol.bs_transmit_power
    for l in sol.active_wireline:
        p, q2, cap = transmit[l], sol.quant_noise[l], cfg.capacity_of(l)
        if p > 0:
            # q² = 0 时所需速率无穷大
            rate = np.inf if q2 <= 0 else np.log2(1 + p / q2)
            if rate > cap * (1 + tol):
                violations.append(
                    Violation(constraint="rate-distortion", index=l, magnitude=float((rate - cap) / cap),
                              detail=f"required rate {rate:.6g} exceeds capacity {cap:.6g}")
                )
        budget = sol.power_budgets[l]
        if p + q2 > budget * (1 + tol):
            violations.append(
                Violation(constraint="wireline-power", index=l, magnitude=float((p + q2 - budget) / budget))
            )
    for l in sol.active_wireless:
        budget = sol.power_budgets[l]
        if transmit[l] > budget * (1 + tol):
            violations.append(
                Violation(constraint="wireless-power", index=l, magnitude=float((transmit[l] - budget) / budget))
            )

    if alloc is not None and alloc.bs_indices:
        achieved = backhaul_sinr(alloc, ch, cfg)
        for l, value, gamma in zip(alloc.bs_indices, achieved, alloc.thresholds):
            if value < gamma - tol * max(1.0, gamma):
                violations.append(
                    Violation(constraint="backhaul-sinr", index=l, magnitude=float(gamma - value),
                              detail=f"backhaul SINR {value:.6g} below threshold {gamma:.6g}")
                )

    if violations:
        logger.debug("Solution has %d violations", len(violations))
    return violations
