"""Six-degree-of-freedom tail-sitter plant: aerodynamics, motors, ground contact, integration."""

from .aero import aero_wrench, drag_coefficient, lift_coefficient
from .dynamics import IntegrationFault, VehicleState, kinetic_energy, resting_state, step_dynamics
from .motors import motor_thrust, thrust_lag
from .params import N_ACTUATORS, N_MOTORS, N_SURFACES, VehicleParams, reference_vehicle_path
from .trim import Trim, trim_level_flight
from .vehicle import Plant, PlantOutput
from .wind import WindModel

__all__ = [
    "aero_wrench", "drag_coefficient", "lift_coefficient",
    "IntegrationFault", "VehicleState", "kinetic_energy", "resting_state", "step_dynamics",
    "motor_thrust", "thrust_lag",
    "N_ACTUATORS", "N_MOTORS", "N_SURFACES", "VehicleParams", "reference_vehicle_path",
    "Trim", "trim_level_flight", "Plant", "PlantOutput", "WindModel",
]
