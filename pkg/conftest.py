"""
测试公用的夹具与辅助函数。
- make_config: 快速构造小规模 NetworkConfig
- make_channel: 由给定矩阵构造 ChannelRealization
- slow 标记：长时间的 Monte Carlo 测试，只有设置 CRAN_RUN_SLOW=1 时运行
"""
from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np
import pytest

from network import ChannelRealization, NetworkConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo sweeps, run with CRAN_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.getenv("CRAN_RUN_SLOW", "").strip().lower() in {"1", "true", "yes", "on"}:
        return
    skip = pytest.mark.skip(reason="set CRAN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def build_config(
    num_bs: int = 1,
    num_wireline: int = 0,
    num_users: int = 1,
    *,
    targets: Optional[Sequence[float]] = None,
    capacity: float = 140.0,
    relative_power: Optional[Sequence[float]] = None,
    budgets: float = 1.0,
    access_noise_power: float = 1e-4,
    backhaul_noise_power: float = 1e-4,
    drain_efficiency: float = 0.25,
) -> NetworkConfig:
    """休眠功耗取 0，P^c 全部记在基站工作功耗上。"""
    pc = list(relative_power) if relative_power is not None else [1.0 + l for l in range(num_bs)]
    return NetworkConfig(
        num_bs=num_bs,
        num_wireline=num_wireline,
        num_users=num_users,
        wireline_capacity=(capacity,) * num_wireline,
        drain_efficiency=(drain_efficiency,) * num_bs,
        bs_power_active=tuple(pc),
        bs_power_sleep=(0.0,) * num_bs,
        onu_power_active=(0.0,) * num_wireline,
        onu_power_sleep=(0.0,) * num_wireline,
        access_noise_power=access_noise_power,
        backhaul_noise_power=backhaul_noise_power,
        sinr_targets=tuple(targets) if targets is not None else (1.0,) * num_users,
        initial_bs_power=(budgets,) * num_bs,
    )


def build_channel(access, backhaul=None, seed: Optional[int] = None) -> ChannelRealization:
    access = np.atleast_2d(np.asarray(access, dtype=complex))
    backhaul = np.zeros(0) if backhaul is None else np.asarray(backhaul, dtype=complex)
    return ChannelRealization(access=access, backhaul=backhaul, seed=seed)


def random_channel(cfg: NetworkConfig, rng: np.random.Generator, scale: float = 0.05) -> ChannelRealization:
    """标准复高斯信道乘以统一的大尺度系数。"""
    shape = (cfg.num_bs, cfg.num_users)
    access = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    backhaul = 0.042 * (rng.standard_normal(cfg.num_wireless) + 1j * rng.standard_normal(cfg.num_wireless)) / np.sqrt(2)
    return ChannelRealization(access=access, backhaul=backhaul)


@pytest.fixture
def make_config():
    return build_config


@pytest.fixture
def make_channel():
    return build_channel


@pytest.fixture
def make_random_channel():
    return random_channel


@pytest.fixture
def single_wireless():
    """B = K = 1，无线回传，h = 1，δ = 1，σ = 0.01。"""
    cfg = build_config(num_bs=1, num_wireline=0, num_users=1, targets=[1.0], budgets=1.0)
    ch = build_channel([[1.0]], backhaul=[1.0])
    return cfg, ch
