"""Full airframe: motors, servos, aerodynamics and rigid body stepped together."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .aero import aero_kernel
from .dynamics import IntegrationFault, VehicleState, rigid_body_kernel
from .motors import motor_bank
from .params import N_MOTORS, N_SURFACES, VehicleParams
from .rotation import quat_to_matrix

# packed scalar layout for the fused kernel
(_MASS, _G, _RHO, _TMAX, _TAU, _KM, _DISC, _ETA_H, _ETA_C, _ETA_V, _WASH_GAIN, _FLAP_RATE,
 _WASH_LIFT, _WASH_H, _K, _C, _MU_S, _MU_K) = range(18)


@dataclass
class PlantOutput:
    force_world: np.ndarray  # total external force incl. gravity and ground, N
    specific_force_body: np.ndarray  # accelerometer reading, m/s^2
    motor_power: float  # W
    thrust: np.ndarray  # signed thrust per motor, N
    flaps: np.ndarray  # actual surface positions, normalized
    airspeed: float  # m/s


@njit(cache=True)
def plant_kernel(pos, vel, q, omega, anchors, thrust, flaps, command, wind, direction, dt,
                 sc, inertia, contacts, motor_pos, motor_spin,
                 panel_pos, panel_area, panel_half, panel_washed, panel_q, coef, fus):
    rot = quat_to_matrix(q)
    v_air = rot.T @ (vel - wind)
    thrust1, signed, power, wash = motor_bank(
        thrust, command[:12], sc[_TMAX], sc[_TAU], dt, direction, v_air[0], sc[_RHO],
        sc[_DISC], sc[_ETA_H], sc[_ETA_C], sc[_ETA_V], sc[_WASH_GAIN])
    flaps1 = flaps.copy()
    step = sc[_FLAP_RATE] * dt
    for k in range(4):
        target = min(max(command[12 + k], -1.0), 1.0)
        flaps1[k] += min(max(target - flaps[k], -step), step)

    force, moment = aero_kernel(v_air, omega, wash, flaps1, panel_pos, panel_area, panel_half,
                                panel_washed, panel_q, coef, sc[_RHO], fus)
    total = 0.0
    for i in range(12):
        total += signed[i]
        moment[0] += motor_spin[i] * sc[_KM] * signed[i]
        moment[1] += motor_pos[i, 2] * signed[i]
        moment[2] -= motor_pos[i, 1] * signed[i]
    force[0] += total
    alt = -pos[2]
    if alt < sc[_WASH_H] and total > 0.0:
        # slipstream turned by the ground lifts the wing while it is still leaning
        fade = 1.0 - max(alt, 0.0) / sc[_WASH_H]
        lean = math.sqrt(max(0.0, 1.0 - rot[2, 0] * rot[2, 0]))
        force[2] -= sc[_WASH_LIFT] * total * fade * lean

    pos1, vel1, q1, w1, anchors1, f_world = rigid_body_kernel(
        pos, vel, q, omega, force, moment, sc[_MASS], inertia, sc[_G], dt, contacts, anchors,
        sc[_K], sc[_C], sc[_MU_S], sc[_MU_K])
    f_world[2] -= sc[_MASS] * sc[_G]
    specific = rot.T @ f_world / sc[_MASS]
    f_world[2] += sc[_MASS] * sc[_G]
    airspeed = math.sqrt(v_air[0] ** 2 + v_air[1] ** 2 + v_air[2] ** 2)
    finite = math.isfinite(pos1.sum() + vel1.sum() + q1.sum() + w1.sum())
    return pos1, vel1, q1, w1, anchors1, thrust1, flaps1, signed, power, f_world, specific, airspeed, finite


class Plant:
    """Stateful wrapper holding actuator dynamics around the pure rigid-body step."""

    def __init__(self, params: VehicleParams):
        self.params = p = params
        scalars = np.zeros(18)
        scalars[[_MASS, _G, _RHO, _TMAX, _TAU, _KM, _DISC, _ETA_H, _ETA_C, _ETA_V, _WASH_GAIN,
                 _FLAP_RATE, _WASH_LIFT, _WASH_H, _K, _C, _MU_S, _MU_K]] = [
            p.mass_kg, p.gravity, p.air_density, p.max_thrust_n, p.motor_time_constant_s,
            p.torque_ratio, p.prop_disc_area_m2, p.hover_efficiency, p.cruise_efficiency,
            p.efficiency_ref_speed, p.wash_gain, p.servo_rate_limit_rad_s / p.flap_max_deflection_rad,
            p.wash_lift_factor, p.wash_lift_height_m, p.contact_stiffness, p.contact_damping,
            p.friction_static, p.friction_kinetic]
        panels = p.panels
        self._const = (scalars, p.inertia, p.contact_points, p.motor_positions, p.motor_spin,
                       panels["position"], panels["area"], panels["half"], panels["washed"],
                       panels["q_scale"], p.aero_coefficients(), np.array(p.fuselage_cda_m2))
        self.thrust = np.zeros(N_MOTORS)
        self.flaps = np.zeros(N_SURFACES)
        self.direction = np.ones(N_MOTORS)

    def reverse_motor(self, index: int):
        self.direction[index] = -1.0

    def step(self, state: VehicleState, actuators: np.ndarray, wind: np.ndarray, dt: float,
             ) -> tuple[VehicleState, PlantOutput]:
        (pos, vel, q, w, anchors, self.thrust, self.flaps, signed, power, f_world, specific,
         airspeed, finite) = plant_kernel(state.position, state.velocity, state.attitude, state.rate,
                                  state.contact_anchors, self.thrust, self.flaps, actuators, wind,
                                  self.direction, dt, *self._const)
        if not finite:
            raise IntegrationFault(f"non-finite state at t={state.time + dt:.3f}s")
        new = VehicleState(pos, vel, q, w, state.time + dt, anchors)
        return new, PlantOutput(f_world, specific, power, signed, self.flaps, airspeed)
