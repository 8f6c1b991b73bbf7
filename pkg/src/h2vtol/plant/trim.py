"""Steady level-flight trim for the airframe model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import fsolve

from .aero import aero_kernel
from .motors import induced_velocity, motor_power
from .params import VehicleParams


@dataclass(frozen=True)
class Trim:
    speed: float  # m/s
    alpha: float  # rad, equal to pitch in level flight
    thrust: float  # N, total
    elevator: float  # normalized, front flaps +e, back flaps -e
    lift: float  # N, aerodynamic force normal to the flight path
    drag: float  # N
    motor_power: float  # W


def _wrench(params: VehicleParams, speed, alpha, thrust, elevator):
    p = params
    per_motor = thrust / 12.0
    v_air = np.array([speed * math.cos(alpha), 0.0, speed * math.sin(alpha)])
    vi = induced_velocity(per_motor, v_air[0], p.air_density, p.prop_disc_area_m2)
    wash = np.full(4, p.wash_gain * vi)
    flaps = np.array([elevator, elevator, -elevator, -elevator])
    panels = p.panels
    force, moment = aero_kernel(v_air, np.zeros(3), wash, flaps, panels["position"], panels["area"],
                                panels["half"], panels["washed"], panels["q_scale"],
                                p.aero_coefficients(), p.air_density, np.array(p.fuselage_cda_m2))
    # motor pitching moment from the vertical offset of the two wings
    moment[1] += float(p.motor_positions[:, 2].sum()) * per_motor
    return force, moment


def trim_level_flight(params: VehicleParams, speed: float) -> Trim:
    """Solve pitch, thrust and elevator for unaccelerated level flight at ``speed``."""
    p = params

    def residual(x):
        alpha, thrust, elevator = x
        f, m = _wrench(p, speed, alpha, thrust, elevator)
        ca, sa = math.cos(alpha), math.sin(alpha)
        fx = f[0] + thrust
        # body forces rotated to the horizontal/vertical of level flight
        horizontal = fx * ca + f[2] * sa
        vertical = -fx * sa + f[2] * ca + p.weight
        return [horizontal, vertical, m[1]]

    q = 0.5 * p.air_density * speed ** 2
    guess = [max((p.weight / (q * p.wing_area_m2) - p.cl0) / p.cl_alpha, 0.0), 0.1 * p.weight, 0.0]
    sol, _, ok, msg = fsolve(residual, guess, full_output=True, xtol=1e-12)
    if ok != 1:
        raise RuntimeError(f"trim did not converge at {speed} m/s: {msg}")
    alpha, thrust, elevator = (float(v) for v in sol)
    f, _ = _wrench(p, speed, alpha, thrust, elevator)
    ca, sa = math.cos(alpha), math.sin(alpha)
    # aerodynamic force split into wind axes (air flows along -x rotated by alpha)
    lift = -(f[2] * ca - f[0] * sa)
    drag = -(f[0] * ca + f[2] * sa)
    power = 12.0 * motor_power(thrust / 12.0, speed * ca, p.air_density, p.prop_disc_area_m2,
                               p.hover_efficiency, p.cruise_efficiency, p.efficiency_ref_speed)
    return Trim(speed, alpha, thrust, elevator, float(lift), float(drag), float(power))
