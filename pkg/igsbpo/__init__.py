"""两阶段迭代算法（稀疏波束成形 + 无线回传功率控制）。"""
from .models import IgsbpoResult, IterationConfig, StopReason
from .services import Selector, converged, gsbf_selector, run, stage_two

__all__ = [
    "IgsbpoResult",
    "IterationConfig",
    "Selector",
    "StopReason",
    "converged",
    "gsbf_selector",
    "run",
    "stage_two",
]
