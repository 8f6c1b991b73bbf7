"""Propeller thrust, electrical power and slipstream from momentum theory."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def induced_velocity(thrust, axial_speed, rho, disc_area):
    """Induced velocity at the disc for ``thrust`` >= 0 at ``axial_speed``."""
    if thrust <= 0.0:
        return 0.0
    v = max(axial_speed, 0.0)
    return -0.5 * v + math.sqrt(0.25 * v * v + thrust / (2.0 * rho * disc_area))


@njit(cache=True)
def propulsive_efficiency(axial_speed, eta_hover, eta_cruise, ref_speed):
    x = min(max(axial_speed, 0.0) / ref_speed, 1.0)
    return eta_hover + (eta_cruise - eta_hover) * x


@njit(cache=True)
def motor_power(thrust, axial_speed, rho, disc_area, eta_hover, eta_cruise, ref_speed):
    """Electrical power to hold ``thrust`` N; zero when the propeller windmills."""
    if thrust <= 0.0:
        return 0.0
    v = max(axial_speed, 0.0)
    vi = induced_velocity(thrust, v, rho, disc_area)
    return thrust * (v + vi) / propulsive_efficiency(v, eta_hover, eta_cruise, ref_speed)


@njit(cache=True)
def motor_bank(thrust, command, max_thrust, tau, dt, direction, axial_speed,
               rho, disc_area, eta_hover, eta_cruise, ref_speed, wash_gain):
    """Advance the 12 thrust lags and return (thrust, signed thrust, power, wash per half).

    ``direction`` is +1 for a healthy propeller and -1 for one spinning in reverse.
    """
    n = thrust.shape[0]
    new = np.empty(n)
    signed = np.empty(n)
    wash = np.zeros(4)
    total_power = 0.0
    k = 1.0 - math.exp(-dt / tau)
    for i in range(n):
        target = min(max(command[i], 0.0), 1.0) * max_thrust
        new[i] = thrust[i] + k * (target - thrust[i])
        signed[i] = direction[i] * new[i]
        total_power += motor_power(new[i], axial_speed, rho, disc_area, eta_hover, eta_cruise, ref_speed)
        vi = induced_velocity(new[i], axial_speed, rho, disc_area)
        wash[i // 3] += direction[i] * wash_gain * vi / 3.0
    return new, signed, total_power, wash


def motor_thrust(command: float, airspeed_axial: float, params=None) -> dict:
    """Steady-state thrust and electrical power for one motor at ``command`` in [0, 1]."""
    if params is None:
        from .params import VehicleParams
        params = VehicleParams()
    if not 0.0 <= command <= 1.0:
        raise ValueError("command must lie in [0, 1]")
    thrust = command * params.max_thrust_n
    power = motor_power(thrust, airspeed_axial, params.air_density, params.prop_disc_area_m2,
                        params.hover_efficiency, params.cruise_efficiency, params.efficiency_ref_speed)
    return {"thrust": thrust, "electrical_power": power}


def thrust_lag(thrust, command_thrust, dt: float, tau: float):
    """Exact first-order response of thrust toward ``command_thrust`` over ``dt``."""
    k = 1.0 - math.exp(-dt / tau)
    return np.asarray(thrust) + k * (np.asarray(command_thrust) - np.asarray(thrust))
