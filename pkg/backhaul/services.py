"""
第二阶段：无线回传速率要求与云端发射功率控制。

流程：bs_rates() → sinr_thresholds() → solve_power_control() → received_powers()
- 速率守恒：回传速率不低于基站对用户的总服务速率，γ_l = 2^R_l - 1
- 功率控制：约束 P̃_l ≥ γ_l(Σ_{m≠l} P̃_m + κ²/|ĥ_l|²) 关于 P̃ 线性，
  可行时最优点使全部约束取等号，解线性方程组即可；
  method="lp" 使用 scipy 的 HiGHS 线性规划求解同一问题，用于交叉验证
- 接收功率 P_l 作为下一轮第一阶段无线基站的发射功率预算
"""
from __future__ import annotations

import logging
from typing import Dict, Mapping

import numpy as np
from scipy.optimize import linprog

from network import BackhaulAllocation, BeamformingSolution, ChannelRealization, NetworkConfig
from socp import SolverError

from .models import BackhaulInfeasibleError, RateRequirements

logger = logging.getLogger(__name__)

POWER_CONTROL_METHODS = ("tight", "lp")


def bs_rates(sol: BeamformingSolution, ch: ChannelRealization, cfg: NetworkConfig) -> Dict[int, float]:
    """
    每个活跃无线基站的服务速率：
    R_l = Σ_k log₂(1 + |h_lk w_lk|²/(Σ_{m≠k}|h_lk w_lm|² + σ²))。
    """
    rates: Dict[int, float] = {}
    for l in sol.active_wireless:
        received = np.abs(ch.access[l] * sol.weights[l]) ** 2
        interference = received.sum() - received
        rates[l] = float(np.sum(np.log2(1.0 + received / (interference + cfg.access_noise_power))))
    return rates


def sinr_thresholds(rates: Mapping[int, float]) -> Dict[int, float]:
    """γ_l = 2^R_l - 1（逐项）。"""
    out = {}
    for l, r in rates.items():
        if r < 0 or not np.isfinite(r):
            raise ValueError(f"rate of BS {l} must be finite and nonnegative, got {r}")
        out[l] = float(np.expm1(r * np.log(2.0)))
    return out


def rate_requirements(sol: BeamformingSolution, ch: ChannelRealization, cfg: NetworkConfig) -> RateRequirements:
    rates = bs_rates(sol, ch, cfg)
    gamma = sinr_thresholds(rates)
    indices = tuple(sorted(rates))
    return RateRequirements(
        bs_indices=indices,
        rates=[rates[l] for l in indices],
        thresholds=[gamma[l] for l in indices],
    )


def backhaul_load(gamma: Mapping[int, float]) -> float:
    """Σ_l γ_l/(1+γ_l)；小于 1 时门限可同时满足。"""
    values = np.fromiter(gamma.values(), dtype=float, count=len(gamma))
    return float(np.sum(values / (1.0 + values)))


def _tight_solution(gamma: np.ndarray, noise: np.ndarray) -> np.ndarray:
    # (I - Γ(11ᵀ - I)) p = Γu
    n = gamma.size
    coupling = np.diag(gamma) @ (np.ones((n, n)) - np.eye(n))
    return np.linalg.solve(np.eye(n) - coupling, gamma * noise)


def _lp_solution(gamma: np.ndarray, noise: np.ndarray, load: float) -> np.ndarray:
    n = gamma.size
    a_ub = np.diag(gamma) @ (np.ones((n, n)) - np.eye(n)) - np.eye(n)
    result = linprog(np.ones(n), A_ub=a_ub, b_ub=-gamma * noise, bounds=[(0, None)] * n, method="highs")
    if result.status == 2:
        raise BackhaulInfeasibleError(load)
    if result.status != 0:
        raise SolverError(f"linprog failed on backhaul power control: {result.message}")
    return np.asarray(result.x, dtype=float)


def solve_power_control(
    gamma: Mapping[int, float],
    ch: ChannelRealization,
    cfg: NetworkConfig,
    method: str = "tight",
) -> BackhaulAllocation:
    """
    最小化 Σ_l P̃_l，s.t. 每个无线基站的回传 SINR ≥ γ_l。
    参数：
        gamma: {无线基站全局下标: γ_l}
        method: "tight"（线性方程组）或 "lp"（scipy linprog）
    返回 BackhaulAllocation（含接收功率）；不可行时抛出 BackhaulInfeasibleError（load 为 Σγ/(1+γ)）。
    """
    if method not in POWER_CONTROL_METHODS:
        raise ValueError(f"unknown power control method {method!r}")
    indices = tuple(sorted(int(l) for l in gamma))
    for l in indices:
        if cfg.is_wireline(l) or not 0 <= l < cfg.num_bs:
            raise ValueError(f"BS {l} is not a wireless-backhaul BS")
    values = np.array([gamma[l] for l in indices], dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise ValueError("SINR thresholds must be finite and nonnegative")
    if not indices:
        return BackhaulAllocation()

    load = backhaul_load(gamma)
    tx = np.zeros(len(indices))
    serving = np.flatnonzero(values > 0)  # γ = 0 的基站功率为 0，先去掉再放回
    if serving.size:
        if method == "tight" and load >= 1.0:
            raise BackhaulInfeasibleError(load)
        noise = np.array([cfg.backhaul_noise_power / ch.backhaul_gain(indices[i], cfg) for i in serving])
        if method == "tight":
            powers = _tight_solution(values[serving], noise)
        else:
            powers = _lp_solution(values[serving], noise, load)
        if np.any(powers < 0) or np.any(~np.isfinite(powers)):
            raise BackhaulInfeasibleError(load, f"power control produced an invalid point (load {load:.6g})")
        tx[serving] = powers

    provisional = BackhaulAllocation(
        bs_indices=indices, tx_powers=tx, thresholds=values, received_powers=np.zeros(len(indices))
    )
    received = received_powers(provisional, ch, cfg)
    logger.debug("Backhaul power control (%s): load %.4g, total power %.6g W", method, load, tx.sum())
    return BackhaulAllocation(
        bs_indices=indices,
        tx_powers=tx,
        thresholds=values,
        received_powers=[received[l] for l in indices],
    )


def received_powers(alloc: BackhaulAllocation, ch: ChannelRealization, cfg: NetworkConfig) -> Dict[int, float]:
    """P_l = |ĥ_l|² Σ_m P̃_m + κ²：无线基站收到的总功率（信号 + 干扰 + 噪声）。"""
    total = float(alloc.tx_powers.sum())
    return {
        l: ch.backhaul_gain(l, cfg) * total + cfg.backhaul_noise_power
        for l in alloc.bs_indices
    }
