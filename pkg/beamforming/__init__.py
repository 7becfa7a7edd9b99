"""第一阶段：组稀疏波束成形与基站选择。"""
from .models import EffectiveParams, GroupWeights, ReweightingResult
from .services import (
    default_epsilon,
    effective_params,
    gsbf_select,
    mm_reweight,
    quantization_noise,
    relaxation_objective,
    run_mm_reweighting,
    select_by_ordering,
    solve_fixed_set_socp,
    solve_weighted_group_relaxation,
    switch_off_priority,
)

__all__ = [
    "EffectiveParams",
    "GroupWeights",
    "ReweightingResult",
    "default_epsilon",
    "effective_params",
    "gsbf_select",
    "mm_reweight",
    "quantization_noise",
    "relaxation_objective",
    "run_mm_reweighting",
    "select_by_ordering",
    "solve_fixed_set_socp",
    "solve_weighted_group_relaxation",
    "switch_off_priority",
]
