"""
实验框架用到的所有 Pydantic 数据模型定义。
包括网络预设、实验描述、结果行、均值行、解的转储记录以及 HTTP 接口的请求/响应体。
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from igsbpo import IterationConfig
from network import BackhaulAllocation, BeamformingSolution, NetworkConfig, StationSpec, db_to_linear

ALGORITHMS = ("igsbpo", "sp", "cb", "gs", "oracle")
BASELINE_MODES = ("single", "iterated")
ITERATED_SUFFIX = "+bh"

RESULT_COLUMNS = (
    "target_sinr_db",
    "realization",
    "algorithm",
    "network_power_w",
    "total_tx_power_w",
    "active_bs",
    "feasible",
    "iterations",
    "wall_ms",
)
MEAN_COLUMNS = (
    "target_sinr_db",
    "algorithm",
    "network_power_w",
    "total_tx_power_w",
    "active_bs",
    "iterations",
    "feasible_count",
    "infeasible_count",
)


class NetworkPreset(BaseModel):
    """
    网络预设（config/presets/*.json）。
    字段：
        name: str                     # 预设名，如 "hybrid12"
        description: str              # 说明
        num_users: int                # K
        access_noise_power: float     # σ²
        backhaul_noise_power: float   # κ²
        stations: List[StationSpec]   # 基站记录，顺序任意，加载后有线在前
        large_scale_levels / large_scale_matrix / backhaul_large_scale  # 信道模型常数
        unused_constants: dict        # 没有对应扫描量的常数，仅写入元数据
    """
    name: str
    description: str = ""
    num_users: int = Field(ge=1)
    access_noise_power: float = Field(gt=0)
    backhaul_noise_power: float = Field(gt=0)
    stations: List[StationSpec]
    large_scale_levels: Tuple[float, ...] = (0.051, 0.041, 0.032)
    large_scale_matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    backhaul_large_scale: float = 0.042
    unused_constants: Dict[str, float] = Field(default_factory=dict)

    def to_config(self, target_db: float = 0.0) -> NetworkConfig:
        cfg, _ = NetworkConfig.from_stations(
            self.stations,
            num_users=self.num_users,
            access_noise_power=self.access_noise_power,
            backhaul_noise_power=self.backhaul_noise_power,
            sinr_targets=[db_to_linear(target_db)] * self.num_users,
            large_scale_levels=self.large_scale_levels,
            large_scale_matrix=self.large_scale_matrix,
            backhaul_large_scale=self.backhaul_large_scale,
        )
        return cfg


class ExperimentSpec(BaseModel):
    """
    一次 Monte Carlo 实验的完整描述；JSON 文件与命令行参数都映射到这里。
    字段：
        preset: str                    # 网络预设名
        targets_db: List[float]        # SINR 目标（dB），非空
        realizations: int              # 每个目标的信道实现数
        seed: int                      # 基础随机种子，第 r 个实现使用 seed + r
        algorithms: List[str]          # igsbpo / sp / cb / gs / oracle
        output_dir: str                # 结果目录
        workers: Optional[int]         # 并行度，缺省取 CRAN_WORKERS
        baseline_mode: str             # single：基线只跑一次；iterated：基线嵌入两阶段迭代
        dump_solutions: bool           # 是否写出 results.solutions.jsonl 供 validate 复查
        iteration: IterationConfig     # 外层迭代参数
    """
    preset: str = "hybrid12"
    targets_db: List[float] = Field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0], min_length=1)
    realizations: int = Field(default=70, ge=1)
    seed: int = Field(default=42, ge=0)
    algorithms: List[str] = Field(default_factory=lambda: ["igsbpo", "sp", "cb", "gs"], min_length=1)
    output_dir: str = "results"
    workers: Optional[int] = Field(default=None, ge=1)
    baseline_mode: str = "single"
    dump_solutions: bool = False
    iteration: IterationConfig = Field(default_factory=IterationConfig)

    @field_validator("algorithms")
    @classmethod
    def _check_algorithms(cls, value: List[str]) -> List[str]:
        unknown = [a for a in value if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        return list(dict.fromkeys(value))

    @field_validator("baseline_mode")
    @classmethod
    def _check_mode(cls, value: str) -> str:
        if value not in BASELINE_MODES:
            raise ValueError(f"baseline_mode must be one of {BASELINE_MODES}")
        return value


class ResultRow(BaseModel):
    """results.csv 中的一行：一个 (目标, 实现, 算法) 单元。不可行时功耗为 NaN。"""
    model_config = ConfigDict(frozen=True)

    target_sinr_db: float
    realization: int
    algorithm: str
    network_power_w: float
    total_tx_power_w: float
    active_bs: int
    feasible: bool
    iterations: int
    wall_ms: float

    def sort_key(self) -> tuple:
        return self.target_sinr_db, self.realization, self.algorithm


class MeanRow(BaseModel):
    """results.means.csv 中的一行：只对可行实现取平均，不可行数单独计数。"""
    model_config = ConfigDict(frozen=True)

    target_sinr_db: float
    algorithm: str
    network_power_w: float
    total_tx_power_w: float
    active_bs: float
    iterations: float
    feasible_count: int
    infeasible_count: int


class SolutionDump(BaseModel):
    """results.solutions.jsonl 中的一条记录，足以在 validate 时重建解并复查约束。"""
    target_sinr_db: float
    realization: int
    algorithm: str
    seed: int
    active_set: List[int]
    weights_real: List[List[float]]
    weights_imag: List[List[float]]
    quant_noise: List[float]
    power_budgets: List[float]
    backhaul_bs: List[int] = Field(default_factory=list)
    backhaul_tx_powers: List[float] = Field(default_factory=list)
    backhaul_thresholds: List[float] = Field(default_factory=list)

    @classmethod
    def capture(cls, target_db: float, realization: int, algorithm: str, seed: int,
                sol: BeamformingSolution, alloc: Optional[BackhaulAllocation]) -> "SolutionDump":
        alloc = alloc or BackhaulAllocation()
        return cls(
            target_sinr_db=target_db,
            realization=realization,
            algorithm=algorithm,
            seed=seed,
            active_set=list(sol.active_set),
            weights_real=sol.weights.real.tolist(),
            weights_imag=sol.weights.imag.tolist(),
            quant_noise=sol.quant_noise.tolist(),
            power_budgets=sol.power_budgets.tolist(),
            backhaul_bs=list(alloc.bs_indices),
            backhaul_tx_powers=alloc.tx_powers.tolist(),
            backhaul_thresholds=alloc.thresholds.tolist(),
        )

    def restore(self, cfg: NetworkConfig) -> Tuple[BeamformingSolution, Optional[BackhaulAllocation]]:
        weights = np.asarray(self.weights_real) + 1j * np.asarray(self.weights_imag)
        sol = BeamformingSolution.create(weights, self.active_set, np.asarray(self.quant_noise),
                                         np.asarray(self.power_budgets), cfg)
        alloc = None
        if self.backhaul_bs:
            alloc = BackhaulAllocation(
                bs_indices=tuple(self.backhaul_bs),
                tx_powers=self.backhaul_tx_powers,
                thresholds=self.backhaul_thresholds,
                received_powers=np.zeros(len(self.backhaul_bs)),
            )
        return sol, alloc


class ExperimentResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: List[ResultRow]
    means: List[MeanRow]
    meta: dict
    dumps: List[SolutionDump] = Field(default_factory=list)


class OracleReport(BaseModel):
    """小规模穷举对比：每个算法相对穷举最优的平均相对差距，以及优于穷举最优（说明有错误）的次数。"""
    target_sinr_db: float
    instances: int
    feasible_instances: int
    mean_gap: Dict[str, float]
    dominance_violations: Dict[str, int]


class PresetSummary(BaseModel):
    name: str
    description: str
    num_bs: int
    num_wireline: int
    num_users: int


class ExperimentRequest(BaseModel):
    """
    POST /api/experiments 请求体。只用于小规模试算，实现数有上限。
    """
    preset: str = "small"
    targets_db: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    realizations: int = Field(default=1, ge=1, le=20)
    seed: int = Field(default=0, ge=0)
    algorithms: List[str] = Field(default_factory=lambda: ["igsbpo", "cb"], min_length=1)
    baseline_mode: str = "single"


class ExperimentResponse(BaseModel):
    means: List[MeanRow]
    rows: List[ResultRow]


class IgsbpoRequest(BaseModel):
    """POST /api/igsbpo 请求体：单个信道实现上的一次完整运行。"""
    preset: str = "small"
    target_db: float = 0.0
    seed: int = Field(default=0, ge=0)
    iteration: IterationConfig = Field(default_factory=IterationConfig)


class TracePoint(BaseModel):
    iteration: int
    network_power: Optional[float]
    active_set: List[int]
    feasible: bool


class IgsbpoResponse(BaseModel):
    feasible: bool
    stop_reason: str
    network_power: Optional[float] = None
    total_tx_power: Optional[float] = None
    active_set: List[int] = Field(default_factory=list)
    iterations: int
    trace: List[TracePoint]


class ErrorResponse(BaseModel):
    detail: str
