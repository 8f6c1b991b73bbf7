"""Cascaded incremental nonlinear dynamic inversion controller."""

from .allocation import EffectivenessMatrix, allocate, controllable_axes, update_effectiveness, weighted_pseudo_inverse
from .controller import ControlParams, INDIController, Measurement, Setpoint, Telemetry
from .filters import FilterConfigError, FilterState, LowPass2, analytic_magnitude, butterworth2_coefficients, butterworth2_step
from .indi import (
    OuterResult,
    attitude_loop,
    effectiveness_matrix,
    full_scale_roll_moment,
    hover_roll_command,
    indi_inner,
    indi_outer,
    position_loop,
)

__all__ = [
    "EffectivenessMatrix", "allocate", "controllable_axes", "update_effectiveness", "weighted_pseudo_inverse",
    "ControlParams", "INDIController", "Measurement", "Setpoint", "Telemetry",
    "FilterConfigError", "FilterState", "LowPass2", "analytic_magnitude", "butterworth2_coefficients",
    "butterworth2_step", "OuterResult", "attitude_loop", "effectiveness_matrix", "full_scale_roll_moment",
    "hover_roll_command", "indi_inner", "indi_outer", "position_loop",
]
