"""Energy-optimal scheduling for trains sharing a signalled level track."""

from .constant_speed import CsProblem, CsSolution, cs_cost, cs_gradient, cs_hessian, cs_solve
from .constraints import ConstraintTable, TimeExpr, build_custom_table, build_full_table, check_separation, evaluate
from .dynamics import ALTERNATIVE_TRAIN, REFERENCE_TRAIN, TrainParams, u_b, u_s, v_sup
from .errors import TrainSepError
from .realistic import descend, evaluate_fleet, fleet_gradient
from .single_train import SegmentSpec, Strategy, solve_long_haul, solve_rapid_transit, solve_timed_sections
from .stochastic import NoiseModel, active_pairs, run_trials, theoretical_separation

__version__ = "0.1.0"

__all__ = [
    "ALTERNATIVE_TRAIN",
    "REFERENCE_TRAIN",
    "ConstraintTable",
    "CsProblem",
    "CsSolution",
    "NoiseModel",
    "SegmentSpec",
    "Strategy",
    "TimeExpr",
    "TrainParams",
    "TrainSepError",
    "active_pairs",
    "build_custom_table",
    "build_full_table",
    "check_separation",
    "cs_cost",
    "cs_gradient",
    "cs_hessian",
    "cs_solve",
    "descend",
    "evaluate",
    "evaluate_fleet",
    "fleet_gradient",
    "run_trials",
    "solve_long_haul",
    "solve_rapid_transit",
    "solve_timed_sections",
    "theoretical_separation",
    "u_b",
    "u_s",
    "v_sup",
]
