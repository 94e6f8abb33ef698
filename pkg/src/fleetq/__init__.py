"""Sizing a shared fleet of conventional cars for electric-vehicle owners."""

__version__ = "0.1.0"

from .errors import (
    FleetqError,
    InfeasibleError,
    InvalidInputError,
    UnstableRegimeError,
)
from .prob_core import (
    FleetScenario,
    QosTarget,
    binomial_tail_exact,
    binomial_tail_normal,
    min_fleet_spontaneous,
    normal_rule_of_thumb,
    normal_tail,
)
from .queue_bound import bound_curve, lemma_params, min_fleet_planned, waiting_bound
from .simulator import SimConfig, lindley_oracle, simulate, sweep_fleet

__all__ = [
    "FleetqError", "InfeasibleError", "InvalidInputError", "UnstableRegimeError",
    "FleetScenario", "QosTarget", "binomial_tail_exact", "binomial_tail_normal",
    "min_fleet_spontaneous", "normal_rule_of_thumb", "normal_tail",
    "bound_curve", "lemma_params", "min_fleet_planned", "waiting_bound",
    "SimConfig", "lindley_oracle", "simulate", "sweep_fleet",
]
