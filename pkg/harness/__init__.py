"""Monte Carlo 实验框架：信道生成、实验调度、结果读写与 HTTP 接口。"""
from .config import NETWORK_PRESETS, HarnessSettings, get_preset, get_settings, load_presets
from .models import (
    ALGORITHMS,
    BASELINE_MODES,
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
from .services import (
    compute_means,
    draw_large_scale,
    generate_channels,
    oracle_comparison,
    plot_series,
    read_means,
    read_results,
    realization_seed,
    run_cell,
    run_experiment,
    run_experiment_async,
    validate_dumps,
    write_experiment,
    write_means,
    write_plot_series,
    write_results,
)

__all__ = [
    "ALGORITHMS",
    "BASELINE_MODES",
    "MEAN_COLUMNS",
    "NETWORK_PRESETS",
    "RESULT_COLUMNS",
    "ExperimentResult",
    "ExperimentSpec",
    "HarnessSettings",
    "MeanRow",
    "NetworkPreset",
    "OracleReport",
    "ResultRow",
    "SolutionDump",
    "compute_means",
    "draw_large_scale",
    "generate_channels",
    "get_preset",
    "get_settings",
    "load_presets",
    "oracle_comparison",
    "plot_series",
    "read_means",
    "read_results",
    "realization_seed",
    "run_cell",
    "run_experiment",
    "run_experiment_async",
    "validate_dumps",
    "write_experiment",
    "write_means",
    "write_plot_series",
    "write_results",
]
