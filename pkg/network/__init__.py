"""Domain types and power/SINR accounting shared by every algorithm package."""
from .models import (
    BackhaulAllocation,
    BeamformingSolution,
    ChannelRealization,
    InfeasibleError,
    NetworkConfig,
    RunTrace,
    StationSpec,
    TraceEntry,
    Violation,
    db_to_linear,
)
from .services import (
    DEFAULT_VALIDATION_TOL,
    backhaul_sinr,
    network_power,
    relative_backhaul_power,
    user_sinr,
    user_sinrs,
    validate_solution,
)

__all__ = [
    "BackhaulAllocation",
    "BeamformingSolution",
    "ChannelRealization",
    "InfeasibleError",
    "NetworkConfig",
    "RunTrace",
    "StationSpec",
    "TraceEntry",
    "Violation",
    "db_to_linear",
    "DEFAULT_VALIDATION_TOL",
    "backhaul_sinr",
    "network_power",
    "relative_backhaul_power",
    "user_sinr",
    "user_sinrs",
    "validate_solution",
]
