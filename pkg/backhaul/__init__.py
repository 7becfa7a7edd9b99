"""第二阶段：无线回传速率守恒与功率控制。"""
from .models import BackhaulInfeasibleError, RateRequirements
from .services import (
    POWER_CONTROL_METHODS,
    backhaul_load,
    bs_rates,
    rate_requirements,
    received_powers,
    sinr_thresholds,
    solve_power_control,
)

__all__ = [
    "BackhaulInfeasibleError",
    "RateRequirements",
    "POWER_CONTROL_METHODS",
    "backhaul_load",
    "bs_rates",
    "rate_requirements",
    "received_powers",
    "sinr_thresholds",
    "solve_power_control",
]
