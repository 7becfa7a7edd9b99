"""
Monte Carlo 实验框架：信道生成、实验调度、结果读写与复查。

主要函数：
- generate_channels(): 按随机种子生成一次信道实现（Philox 计数器生成器，种子即密钥）
- run_experiment() / run_experiment_async(): 对每个 (SINR 目标, 实现) 运行所选算法，
  workers > 1 时用进程池并行，结果按 (目标, 实现, 算法) 排序
- compute_means(): 按 (目标, 算法) 对可行实现取平均
- write_experiment() / write_results() / read_results(): CSV 与元数据读写
- plot_series(): 把均值表整理成每个算法一列的曲线数据
- validate_dumps(): 重建转储的解并复查全部约束
- oracle_comparison(): 小规模实例上与穷举最优的对比
"""
from __future__ import annotations

import asyncio
import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from baselines import SELECTORS, coordinated_beamforming, exhaustive_oracle, greedy_selection, sparsity_pattern
from beamforming import effective_params, gsbf_select
from igsbpo import IterationConfig, run
from network import (
    BackhaulAllocation,
    BeamformingSolution,
    ChannelRealization,
    InfeasibleError,
    NetworkConfig,
    Violation,
    network_power,
    validate_solution,
)

from .config import get_preset, get_settings
from .models import (
    ITERATED_SUFFIX,
    MEAN_COLUMNS,
    RESULT_COLUMNS,
    ExperimentResult,
    ExperimentSpec,
    MeanRow,
    NetworkPreset,
    OracleReport,
    ResultRow,
    SolutionDump,
)

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
MEANS_FILE = "results.means.csv"
META_FILE = "results.meta.json"
SOLUTIONS_FILE = "results.solutions.jsonl"
DELIMITERS = {"csv": ",", "tsv": "\t"}


# ---------------------------------------------------------------------------
# 信道生成
# ---------------------------------------------------------------------------

def realization_seed(base_seed: int, realization: int) -> int:
    return base_seed + realization


def draw_large_scale(cfg: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """(B, K) 大尺度衰落：显式矩阵优先，否则把基站随机均分到各个等级。"""
    if cfg.large_scale_matrix is not None:
        return np.asarray(cfg.large_scale_matrix, dtype=float)
    levels = np.asarray(cfg.large_scale_levels, dtype=float)
    if levels.size == 0 or cfg.num_bs % levels.size:
        raise ValueError(
            f"{cfg.num_bs} BSs cannot be split evenly into {levels.size} large-scale groups; "
            "supply large_scale_matrix instead"
        )
    group = cfg.num_bs // levels.size
    per_bs = np.empty(cfg.num_bs)
    per_bs[rng.permutation(cfg.num_bs)] = np.repeat(levels, group)
    return np.repeat(per_bs[:, None], cfg.num_users, axis=1)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_channels(cfg: NetworkConfig, seed: int) -> ChannelRealization:
    """
    h_lk = D_lk g_lk，ĥ_l = D̃ ĝ_l，g 与 ĝ 为独立的标准复高斯变量。
    同一 seed 总是得到相同的信道。
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    large_scale = draw_large_scale(cfg, rng)
    access = large_scale * _complex_gaussian(rng, (cfg.num_bs, cfg.num_users))
    backhaul = cfg.backhaul_large_scale * _complex_gaussian(rng, (cfg.num_wireless,))
    return ChannelRealization(access=access, backhaul=backhaul, seed=seed)


# ---------------------------------------------------------------------------
# 单元计算
# ---------------------------------------------------------------------------

def _tx_power(sol: BeamformingSolution) -> float:
    return float(np.sum(sol.power_budgets[list(sol.active_set)]))


def _infeasible_row(target_db: float, realization: int, algorithm: str, iterations: int, wall_ms: float) -> ResultRow:
    return ResultRow(
        target_sinr_db=target_db, realization=realization, algorithm=algorithm,
        network_power_w=math.nan, total_tx_power_w=math.nan, active_bs=0, feasible=False,
        iterations=iterations, wall_ms=wall_ms,
    )


def _run_single_baseline(name: str, ch: ChannelRealization, cfg: NetworkConfig):
    if name == "cb":
        sol = coordinated_beamforming(ch, cfg)
    elif name == "sp":
        _, sol = sparsity_pattern(ch, cfg)
    elif name == "gs":
        _, sol = greedy_selection(ch, cfg)
    else:
        _, sol = exhaustive_oracle(ch, cfg)
    return sol


def run_cell(
    algorithm: str,
    cfg: NetworkConfig,
    ch: ChannelRealization,
    target_db: float,
    realization: int,
    baseline_mode: str = "single",
    itcfg: Optional[IterationConfig] = None,
) -> Tuple[ResultRow, Optional[SolutionDump]]:
    """
    在一个信道实现上运行一个算法并记录指标。算法抛出的任何异常只终止本单元（记为不可行）。
    """
    itcfg = itcfg or IterationConfig()
    iterated = algorithm == "igsbpo" or baseline_mode == "iterated"
    label = algorithm if algorithm == "igsbpo" or not iterated else algorithm + ITERATED_SUFFIX
    start = time.perf_counter()
    sol: Optional[BeamformingSolution] = None
    alloc: Optional[BackhaulAllocation] = None
    iterations = 1
    try:
        if iterated:
            result = run(cfg, ch, itcfg, selector=None if algorithm == "igsbpo" else SELECTORS[algorithm])
            iterations = result.iterations
            if result.feasible:
                sol, alloc = result.solution, result.allocation
        else:
            sol = _run_single_baseline(algorithm, ch, cfg)
    except InfeasibleError as exc:
        logger.debug("%s infeasible at %.1f dB, realization %d: %s", label, target_db, realization, exc)
    except Exception:  # noqa: BLE001
        logger.exception("%s crashed at %.1f dB, realization %d", label, target_db, realization)
    wall_ms = (time.perf_counter() - start) * 1000.0

    if sol is None:
        return _infeasible_row(target_db, realization, label, iterations, wall_ms), None
    row = ResultRow(
        target_sinr_db=target_db,
        realization=realization,
        algorithm=label,
        network_power_w=network_power(sol, cfg),
        total_tx_power_w=_tx_power(sol),
        active_bs=len(sol.active_set),
        feasible=True,
        iterations=iterations,
        wall_ms=wall_ms,
    )
    dump = SolutionDump.capture(target_db, realization, label, ch.seed, sol, alloc)
    return row, dump


def _realization_task(payload: tuple) -> Tuple[List[ResultRow], List[SolutionDump]]:
    """进程池工作函数：一个 (目标, 实现) 上的全部算法。"""
    base_cfg, target_db, realization, seed, algorithms, baseline_mode, itcfg, dump = payload
    cfg = base_cfg.with_uniform_target_db(target_db)
    ch = generate_channels(cfg, realization_seed(seed, realization))
    rows: List[ResultRow] = []
    dumps: List[SolutionDump] = []
    for algorithm in algorithms:
        row, record = run_cell(algorithm, cfg, ch, target_db, realization, baseline_mode, itcfg)
        rows.append(row)
        if dump and record is not None:
            dumps.append(record)
    return rows, dumps


# ---------------------------------------------------------------------------
# 实验调度
# ---------------------------------------------------------------------------

def resolve_network(spec: ExperimentSpec) -> Tuple[NetworkPreset, NetworkConfig]:
    preset = get_preset(spec.preset)
    return preset, preset.to_config(spec.targets_db[0])


def experiment_meta(spec: ExperimentSpec, preset: NetworkPreset, cfg: NetworkConfig) -> dict:
    """元数据：实验参数、网络配置以及默认常数（B^wl、κ、未绑定的常数）。"""
    return {
        "preset": preset.name,
        "targets_db": list(spec.targets_db),
        "realizations": spec.realizations,
        "seed": spec.seed,
        "algorithms": list(spec.algorithms),
        "baseline_mode": spec.baseline_mode,
        "iteration": spec.iteration.model_dump(),
        "num_wireline": cfg.num_wireline,
        "backhaul_noise_std": math.sqrt(cfg.backhaul_noise_power),
        "access_noise_std": math.sqrt(cfg.access_noise_power),
        "unused_constants": dict(preset.unused_constants),
        "network": cfg.model_dump(mode="json"),
    }


async def run_experiment_async(spec: ExperimentSpec) -> ExperimentResult:
    """
    每个 (目标, 实现) 是一个独立任务；用信号量限制同时进行的任务数。
    workers = 1 时在默认线程中顺序执行，workers > 1 时交给进程池。
    """
    preset, cfg = resolve_network(spec)
    workers = spec.workers or get_settings().workers
    payloads = [
        (cfg, target, r, spec.seed, tuple(spec.algorithms), spec.baseline_mode, spec.iteration, spec.dump_solutions)
        for target in spec.targets_db
        for r in range(spec.realizations)
    ]
    logger.info("Running %d cells with %d workers (%s)", len(payloads) * len(spec.algorithms), workers,
                ", ".join(spec.algorithms))

    semaphore = asyncio.Semaphore(workers)
    loop = asyncio.get_running_loop()
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    async def _submit(payload: tuple):
        async with semaphore:
            if executor is None:
                return await asyncio.to_thread(_realization_task, payload)
            return await loop.run_in_executor(executor, _realization_task, payload)

    try:
        outputs = await asyncio.gather(*(_submit(p) for p in payloads))
    finally:
        if executor is not None:
            executor.shutdown()

    rows = sorted((row for part, _ in outputs for row in part), key=ResultRow.sort_key)
    dumps = sorted(
        (d for _, part in outputs for d in part),
        key=lambda d: (d.target_sinr_db, d.realization, d.algorithm),
    )
    logger.info("Experiment finished: %d rows, %d feasible", len(rows), sum(r.feasible for r in rows))
    return ExperimentResult(rows=rows, means=compute_means(rows), meta=experiment_meta(spec, preset, cfg),
                            dumps=dumps)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    return asyncio.run(run_experiment_async(spec))


def compute_means(rows: Iterable[ResultRow]) -> List[MeanRow]:
    groups: Dict[Tuple[float, str], List[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.target_sinr_db, row.algorithm), []).append(row)
    means = []
    for (target, algorithm), members in sorted(groups.items()):
        ok = [r for r in members if r.feasible]

        def _mean(field: str) -> float:
            return float(np.mean([getattr(r, field) for r in ok])) if ok else math.nan

        means.append(
            MeanRow(
                target_sinr_db=target,
                algorithm=algorithm,
                network_power_w=_mean("network_power_w"),
                total_tx_power_w=_mean("total_tx_power_w"),
                active_bs=_mean("active_bs"),
                iterations=_mean("iterations"),
                feasible_count=len(ok),
                infeasible_count=len(members) - len(ok),
            )
        )
    return means


# ---------------------------------------------------------------------------
# 结果读写
# ---------------------------------------------------------------------------

def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _delimiter(fmt: str) -> str:
    if fmt not in DELIMITERS:
        raise ValueError(f"unsupported table format {fmt!r}; choose from {sorted(DELIMITERS)}")
    return DELIMITERS[fmt]


def _write_csv(path: str, columns: Sequence[str], records: Iterable[dict], fmt: str = "csv") -> None:
    delimiter = _delimiter(fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, delimiter=delimiter, lineterminator="\n")
            writer.writerow(columns)
            for record in records:
                writer.writerow([_format(record[c]) for c in columns])
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def write_results(rows: Iterable[ResultRow], path: str, fmt: str = "csv") -> None:
    """写出结果表；空表只有表头。fmt 为 csv 或 tsv。"""
    _write_csv(path, RESULT_COLUMNS, (row.model_dump() for row in rows), fmt)


def write_means(means: Iterable[MeanRow], path: str, fmt: str = "csv") -> None:
    _write_csv(path, MEAN_COLUMNS, (row.model_dump() for row in means), fmt)


def _read_csv(path: str, fmt: str = "csv") -> List[dict]:
    delimiter = _delimiter(fmt)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f, delimiter=delimiter))
    except OSError as exc:
        raise OSError(f"failed to read {path}: {exc}") from exc


def read_results(path: str, fmt: str = "csv") -> List[ResultRow]:
    """读回结果表；布尔列接受 true/false。"""
    return [ResultRow.model_validate(record) for record in _read_csv(path, fmt)]


def read_means(path: str, fmt: str = "csv") -> List[MeanRow]:
    return [MeanRow.model_validate(record) for record in _read_csv(path, fmt)]


def write_experiment(result: ExperimentResult, output_dir: str) -> Dict[str, str]:
    """写出结果、均值、元数据以及（若有）解的转储，返回 {类型: 路径}。"""
    os.makedirs(output_dir, exist_ok=True)
    paths = {
        "results": os.path.join(output_dir, RESULTS_FILE),
        "means": os.path.join(output_dir, MEANS_FILE),
        "meta": os.path.join(output_dir, META_FILE),
    }
    write_results(result.rows, paths["results"])
    write_means(result.means, paths["means"])
    try:
        with open(paths["meta"], "w", encoding="utf-8") as f:
            json.dump(result.meta, f, indent=2, ensure_ascii=False)
        if result.dumps:
            paths["solutions"] = os.path.join(output_dir, SOLUTIONS_FILE)
            with open(paths["solutions"], "w", encoding="utf-8") as f:
                for dump in result.dumps:
                    f.write(dump.model_dump_json() + "\n")
    except OSError as exc:
        raise OSError(f"failed to write experiment files in {output_dir}: {exc}") from exc
    return paths


def plot_series(means: Sequence[MeanRow], metric: str = "network_power_w") -> Tuple[List[str], List[List[float]]]:
    """
    把均值表整理成 (表头, 行)：第一列为 SINR 目标，其后每个算法一列。
    """
    if metric not in {"network_power_w", "total_tx_power_w", "active_bs", "iterations"}:
        raise ValueError(f"unsupported metric {metric!r}")
    algorithms = sorted({m.algorithm for m in means})
    targets = sorted({m.target_sinr_db for m in means})
    lookup = {(m.target_sinr_db, m.algorithm): getattr(m, metric) for m in means}
    header = ["target_sinr_db", *algorithms]
    rows = [[t, *(lookup.get((t, a), math.nan) for a in algorithms)] for t in targets]
    return header, rows


def write_plot_series(header: Sequence[str], rows: Sequence[Sequence[float]], path: Optional[str] = None) -> str:
    """返回 CSV 文本；给定 path 时同时写入文件。"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(float(v)) for v in row])
    text = buffer.getvalue()
    if path:
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(text)
        except OSError as exc:
            raise OSError(f"failed to write {path}: {exc}") from exc
    return text


def validate_dumps(results_dir: str) -> List[Tuple[SolutionDump, List[Violation]]]:
    """
    重建 results.solutions.jsonl 中的每个解（信道由种子重新生成）并复查约束，
    只返回存在违例的记录。
    """
    meta_path = os.path.join(results_dir, META_FILE)
    dump_path = os.path.join(results_dir, SOLUTIONS_FILE)
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
        with open(dump_path, "r", encoding="utf-8") as f:
            dumps = [SolutionDump.model_validate_json(line) for line in f if line.strip()]
    except OSError as exc:
        raise OSError(f"cannot read solution dumps in {results_dir}: {exc}") from exc

    base = NetworkConfig.model_validate(meta["network"])
    failures = []
    for dump in dumps:
        cfg = base.with_uniform_target_db(dump.target_sinr_db)
        ch = generate_channels(cfg, dump.seed)
        sol, alloc = dump.restore(cfg)
        violations = validate_solution(sol, alloc, ch, cfg)
        if violations:
            logger.warning("%s at %.1f dB, realization %d: %d violations", dump.algorithm,
                           dump.target_sinr_db, dump.realization, len(violations))
            failures.append((dump, violations))
    logger.info("Validated %d solutions, %d with violations", len(dumps), len(failures))
    return failures


# ---------------------------------------------------------------------------
# 穷举对比
# ---------------------------------------------------------------------------

def _stage_one_igsbpo(ch: ChannelRealization, cfg: NetworkConfig) -> BeamformingSolution:
    params = effective_params(cfg, ch, np.asarray(cfg.initial_bs_power))
    _, sol = gsbf_select(ch, params, cfg)
    return sol


def oracle_comparison(preset_name: str = "small", target_db: float = 10.0, realizations: int = 20,
                      seed: int = 0) -> OracleReport:
    """
    在固定功率预算下比较 GSBF（第一阶段）、SP、GS、CB 与穷举最优的网络功耗。
    gap = (算法 - 最优)/最优；算法比最优还低记为一次支配违例。
    """
    cfg = get_preset(preset_name).to_config(target_db)
    contenders = {
        "igsbpo": _stage_one_igsbpo,
        "sp": lambda ch, c: sparsity_pattern(ch, c)[1],
        "gs": lambda ch, c: greedy_selection(ch, c)[1],
        "cb": coordinated_beamforming,
    }
    gaps: Dict[str, List[float]] = {name: [] for name in contenders}
    violations = {name: 0 for name in contenders}
    feasible_instances = 0
    for r in range(realizations):
        ch = generate_channels(cfg, realization_seed(seed, r))
        try:
            _, best = exhaustive_oracle(ch, cfg)
        except InfeasibleError:
            continue
        feasible_instances += 1
        optimum = network_power(best, cfg)
        for name, algorithm in contenders.items():
            try:
                value = network_power(algorithm(ch, cfg), cfg)
            except InfeasibleError:
                continue
            gap = (value - optimum) / optimum
            if gap < -1e-6:
                violations[name] += 1
                logger.warning("%s beats the exhaustive optimum on realization %d (gap %.3g)", name, r, gap)
            gaps[name].append(gap)
        logger.info("Realization %d: optimum %.6g W with BSs %s", r, optimum, list(best.active_set))
    return OracleReport(
        target_sinr_db=target_db,
        instances=realizations,
        feasible_instances=feasible_instances,
        mean_gap={name: float(np.mean(v)) if v else math.nan for name, v in gaps.items()},
        dominance_violations=violations,
    )
