"""
网络模型用到的所有 Pydantic 数据模型定义。
包括静态拓扑配置、信道实现、波束成形解、无线回传功率分配、迭代轨迹以及约束违例报告。
所有模型构造后不可变（frozen），numpy 数组字段在校验时设为只读。
"""
from __future__ import annotations  # 兼容未来类型注解语法

from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class InfeasibleError(RuntimeError):
    """某一优化阶段无可行解（SINR 目标或功率约束无法同时满足）。"""


def _frozen_array(value, dtype) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def db_to_linear(value_db: float) -> float:
    """dB 转线性比值。"""
    return float(10.0 ** (value_db / 10.0))


class StationSpec(BaseModel):
    """
    单个基站的配置记录，用于按任意顺序描述网络后再规范化。
    字段：
        backhaul: str             # "wireline" 或 "wireless"
        capacity: float           # 有线回传容量 C_l（仅 wireline 使用）
        drain_efficiency: float   # 功放漏极效率 ξ_l
        bs_power_active/sleep     # 基站工作/休眠功耗（W）
        onu_power_active/sleep    # ONU 工作/休眠功耗（W，仅 wireline）
        initial_power: float      # 初始发射功率预算 P_l（W）
    """
    model_config = ConfigDict(frozen=True)

    backhaul: str
    capacity: float = 0.0
    drain_efficiency: float = 0.25
    bs_power_active: float
    bs_power_sleep: float = 0.0
    onu_power_active: float = 0.0
    onu_power_sleep: float = 0.0
    initial_power: float = 1.0

    @field_validator("backhaul")
    @classmethod
    def _check_backhaul(cls, value: str) -> str:
        if value not in {"wireline", "wireless"}:
            raise ValueError(f"unknown backhaul type {value!r}")
        return value


class NetworkConfig(BaseModel):
    """
    静态网络配置：拓扑、回传类型与容量、功耗模型常数、SINR 目标和信道模型常数。
    约定：下标 0..B^wl-1 为有线回传基站，B^wl..B-1 为无线回传基站。
    所有功率单位为瓦特，SINR 为线性值。
    """
    model_config = ConfigDict(frozen=True)

    num_bs: int = Field(ge=1)  # B
    num_wireline: int = Field(ge=0)  # B^wl
    num_users: int = Field(ge=1)  # K
    wireline_capacity: Tuple[float, ...]  # C_l，长度 B^wl（bit/信道使用）
    drain_efficiency: Tuple[float, ...]  # ξ_l，长度 B
    bs_power_active: Tuple[float, ...]  # P^bs_{a,l}
    bs_power_sleep: Tuple[float, ...]  # P^bs_{s,l}
    onu_power_active: Tuple[float, ...]  # P^onu_{a,l}，长度 B^wl
    onu_power_sleep: Tuple[float, ...]  # P^onu_{s,l}
    access_noise_power: float = Field(gt=0)  # σ²
    backhaul_noise_power: float = Field(gt=0)  # κ²
    sinr_targets: Tuple[float, ...]  # δ_k，长度 K
    initial_bs_power: Tuple[float, ...]  # 初始 P_l，长度 B
    # 信道模型常数（harness.generate_channels 使用）
    large_scale_levels: Tuple[float, ...] = (0.051, 0.041, 0.032)
    large_scale_matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    backhaul_large_scale: float = Field(default=0.042, gt=0)

    @model_validator(mode="after")
    def _check_invariants(self) -> "NetworkConfig":
        b, bwl, k = self.num_bs, self.num_wireline, self.num_users
        if bwl > b:
            raise ValueError(f"num_wireline={bwl} exceeds num_bs={b}")
        expected = {
            "wireline_capacity": bwl,
            "drain_efficiency": b,
            "bs_power_active": b,
            "bs_power_sleep": b,
            "onu_power_active": bwl,
            "onu_power_sleep": bwl,
            "sinr_targets": k,
            "initial_bs_power": b,
        }
        for name, size in expected.items():
            if len(getattr(self, name)) != size:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {size}")
        if any(c <= 0 for c in self.wireline_capacity):
            raise ValueError("wireline capacities must be positive")
        if any(not (0 < xi <= 1) for xi in self.drain_efficiency):
            raise ValueError("drain efficiencies must lie in (0, 1]")
        if any(d <= 0 for d in self.sinr_targets):
            raise ValueError("SINR targets must be positive")
        if any(p <= 0 for p in self.initial_bs_power):
            raise ValueError("initial BS powers must be positive")
        if np.any(self.relative_power < 0):
            bad = int(np.argmin(self.relative_power))
            raise ValueError(f"relative backhaul power of BS {bad} is negative")
        if self.large_scale_matrix is not None:
            shape = np.shape(self.large_scale_matrix)
            if shape != (b, k):
                raise ValueError(f"large_scale_matrix has shape {shape}, expected {(b, k)}")
        return self

    @cached_property
    def relative_power(self) -> np.ndarray:
        """P^c_l：工作与休眠功耗之差，有线基站包含 ONU 部分。"""
        pc = np.asarray(self.bs_power_active, dtype=float) - np.asarray(self.bs_power_sleep, dtype=float)
        onu = np.asarray(self.onu_power_active, dtype=float) - np.asarray(self.onu_power_sleep, dtype=float)
        pc[: self.num_wireline] += onu
        pc.setflags(write=False)
        return pc

    @property
    def num_wireless(self) -> int:
        return self.num_bs - self.num_wireline

    @property
    def wireline_indices(self) -> range:
        return range(self.num_wireline)

    @property
    def wireless_indices(self) -> range:
        return range(self.num_wireline, self.num_bs)

    def is_wireline(self, l: int) -> bool:
        return 0 <= l < self.num_wireline

    def capacity_of(self, l: int) -> float:
        return self.wireline_capacity[l]

    def with_sinr_targets(self, targets: Sequence[float]) -> "NetworkConfig":
        """返回替换了 SINR 目标（线性值）的新配置。"""
        return self.model_validate({**self.model_dump(), "sinr_targets": tuple(float(t) for t in targets)})

    def with_uniform_target_db(self, target_db: float) -> "NetworkConfig":
        return self.with_sinr_targets([db_to_linear(target_db)] * self.num_users)

    @classmethod
    def from_stations(
        cls,
        stations: Sequence[StationSpec],
        *,
        num_users: int,
        access_noise_power: float,
        backhaul_noise_power: float,
        sinr_targets: Sequence[float],
        **channel_model,
    ) -> Tuple["NetworkConfig", List[int]]:
        """
        由任意顺序的基站记录构造配置，先有线后无线（稳定排序）。
        返回：(配置, 排列)，排列[i] 为新下标 i 对应的原始记录下标。
        """
        order = sorted(range(len(stations)), key=lambda i: (stations[i].backhaul != "wireline", i))
        ordered = [stations[i] for i in order]
        wired = [s for s in ordered if s.backhaul == "wireline"]
        cfg = cls(
            num_bs=len(ordered),
            num_wireline=len(wired),
            num_users=num_users,
            wireline_capacity=tuple(s.capacity for s in wired),
            drain_efficiency=tuple(s.drain_efficiency for s in ordered),
            bs_power_active=tuple(s.bs_power_active for s in ordered),
            bs_power_sleep=tuple(s.bs_power_sleep for s in ordered),
            onu_power_active=tuple(s.onu_power_active for s in wired),
            onu_power_sleep=tuple(s.onu_power_sleep for s in wired),
            access_noise_power=access_noise_power,
            backhaul_noise_power=backhaul_noise_power,
            sinr_targets=tuple(sinr_targets),
            initial_bs_power=tuple(s.initial_power for s in ordered),
            **channel_model,
        )
        return cfg, order


class ChannelRealization(BaseModel):
    """
    一次 Monte Carlo 抽样得到的信道。
    字段：
        access: (B, K) 复矩阵，h_lk 为基站 l 到用户 k 的信道
        backhaul: (B - B^wl,) 复向量，ĥ_l 为云端到无线回传基站 l 的信道
        seed: 生成该信道所用的随机种子
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    access: np.ndarray
    backhaul: np.ndarray
    seed: Optional[int] = None

    @field_validator("access", "backhaul", mode="before")
    @classmethod
    def _to_complex(cls, value) -> np.ndarray:
        return _frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_finite(self) -> "ChannelRealization":
        if self.access.ndim != 2 or self.backhaul.ndim != 1:
            raise ValueError("access must be 2-D and backhaul 1-D")
        if not (np.all(np.isfinite(self.access)) and np.all(np.isfinite(self.backhaul))):
            raise ValueError("channel entries must be finite")
        if np.any(np.abs(self.backhaul) == 0):
            raise ValueError("a wireless BS has a zero backhaul channel and is unreachable")
        return self

    def backhaul_gain(self, l: int, cfg: NetworkConfig) -> float:
        """|ĥ_l|²，l 为全局基站下标（必须是无线回传基站）。"""
        if cfg.is_wireline(l):
            raise ValueError(f"BS {l} has a wireline backhaul")
        return float(abs(self.backhaul[l - cfg.num_wireline]) ** 2)

    def check_dimensions(self, cfg: NetworkConfig) -> None:
        if self.access.shape != (cfg.num_bs, cfg.num_users):
            raise ValueError(f"access channel shape {self.access.shape} does not match config")
        if self.backhaul.shape != (cfg.num_wireless,):
            raise ValueError(f"backhaul channel shape {self.backhaul.shape} does not match config")


class BeamformingSolution(BaseModel):
    """
    第一阶段输出：每个 (基站, 用户) 的复波束成形系数及其派生量。
    quant_noise 为长度 B 的数组，仅活跃有线基站位置非零（即 Q̃ 的对角线）。
    power_budgets 为计算该解时生效的每基站功率预算 P_l。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray
    active_set: Tuple[int, ...]
    active_wireline: Tuple[int, ...]
    active_wireless: Tuple[int, ...]
    quant_noise: np.ndarray
    power_budgets: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def _weights(cls, value) -> np.ndarray:
        return _frozen_array(value, complex)

    @field_validator("quant_noise", "power_budgets", mode="before")
    @classmethod
    def _reals(cls, value) -> np.ndarray:
        return _frozen_array(value, float)

    @model_validator(mode="after")
    def _check_structure(self) -> "BeamformingSolution":
        num_bs = self.weights.shape[0]
        if self.quant_noise.shape != (num_bs,) or self.power_budgets.shape != (num_bs,):
            raise ValueError("quant_noise and power_budgets must have one entry per BS")
        if set(self.active_wireline) | set(self.active_wireless) != set(self.active_set):
            raise ValueError("active_wireline and active_wireless must partition active_set")
        inactive = [l for l in range(num_bs) if l not in self.active_set]
        if inactive and np.any(self.weights[inactive] != 0):
            raise ValueError("inactive BSs must carry zero beamforming weights")
        if np.any(self.quant_noise < 0):
            raise ValueError("quantization noise variances must be nonnegative")
        return self

    @classmethod
    def create(
        cls,
        weights: np.ndarray,
        active_set: Sequence[int],
        quant_noise: np.ndarray,
        budgets: np.ndarray,
        cfg: NetworkConfig,
    ) -> "BeamformingSolution":
        """按配置把活跃集拆分为有线/无线两部分，并把非活跃行清零。"""
        active = tuple(sorted(int(l) for l in active_set))
        w = np.zeros((cfg.num_bs, cfg.num_users), dtype=complex)
        w[list(active)] = np.asarray(weights, dtype=complex)[list(active)]
        return cls(
            weights=w,
            active_set=active,
            active_wireline=tuple(l for l in active if cfg.is_wireline(l)),
            active_wireless=tuple(l for l in active if not cfg.is_wireline(l)),
            quant_noise=quant_noise,
            power_budgets=budgets,
        )

    @property
    def group_norms(self) -> np.ndarray:
        """‖w̃_l‖₂，每个基站一项。"""
        return np.linalg.norm(self.weights, axis=1)

    @property
    def bs_transmit_power(self) -> np.ndarray:
        """Σ_k |w_lk|²，每个基站一项。"""
        return np.sum(np.abs(self.weights) ** 2, axis=1)


class BackhaulAllocation(BaseModel):
    """
    第二阶段输出：活跃无线回传基站的云端发射功率、SINR 门限与接收功率。
    bs_indices 与三个数组逐项对齐。
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bs_indices: Tuple[int, ...] = ()
    tx_powers: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    thresholds: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    received_powers: np.ndarray = Field(default_factory=lambda: np.zeros(0))

    @field_validator("tx_powers", "thresholds", "received_powers", mode="before")
    @classmethod
    def _reals(cls, value) -> np.ndarray:
        return _frozen_array(value, float)

    @model_validator(mode="after")
    def _check(self) -> "BackhaulAllocation":
        n = len(self.bs_indices)
        for name in ("tx_powers", "thresholds", "received_powers"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per wireless BS")
        if np.any(self.tx_powers < 0) or np.any(self.thresholds < 0):
            raise ValueError("backhaul powers and thresholds must be nonnegative")
        return self

    def as_dict(self, field: str) -> dict:
        return dict(zip(self.bs_indices, getattr(self, field).tolist()))


class TraceEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    network_power: float
    active_set: Tuple[int, ...] = ()
    feasible: bool
    allocation: Optional[BackhaulAllocation] = None


class RunTrace(BaseModel):
    """外层迭代轨迹：迭代序号严格递增，可行项的网络功耗必须有限。"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[TraceEntry, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "RunTrace":
        indices = [e.iteration for e in self.entries]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("trace iteration indices must be strictly increasing")
        if any(e.feasible and not np.isfinite(e.network_power) for e in self.entries):
            raise ValueError("feasible trace entries must have finite network power")
        return self

    def extended(self, entry: TraceEntry) -> "RunTrace":
        return RunTrace(entries=self.entries + (entry,))

    @property
    def feasible_entries(self) -> List[TraceEntry]:
        return [e for e in self.entries if e.feasible]

    def __len__(self) -> int:
        return len(self.entries)


class Violation(BaseModel):
    """validate_solution 报告中的一条违例。"""
    model_config = ConfigDict(frozen=True)

    constraint: str  # user-sinr / rate-distortion / wireline-power / wireless-power / backhaul-sinr / sparsity
    index: int
    magnitude: float
    detail: str = ""
