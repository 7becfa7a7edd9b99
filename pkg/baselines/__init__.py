"""对比算法：CB、SP、GS 与穷举最优。"""
from .services import (
    ORACLE_MAX_BS,
    SELECTORS,
    coordinated_beamforming,
    exhaustive_oracle,
    greedy_selection,
    sparsity_pattern,
)

__all__ = [
    "ORACLE_MAX_BS",
    "SELECTORS",
    "coordinated_beamforming",
    "exhaustive_oracle",
    "greedy_selection",
    "sparsity_pattern",
]
