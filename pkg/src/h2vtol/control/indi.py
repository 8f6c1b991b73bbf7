"""Cascaded incremental nonlinear dynamic inversion: control laws.

The outer loop turns a linear-acceleration increment into a thrust increment
and a tilt of the thrust axis; the inner loop turns an angular-acceleration
increment into actuator increments through the effectiveness matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..plant.params import N_MOTORS, VehicleParams, WING_HALVES
from ..plant.motors import induced_velocity
from ..plant.rotation import quat_conj, quat_exp, quat_mul, quat_normalize, quat_to_matrix
from .allocation import EffectivenessMatrix, allocate, null_space_step


def position_loop(position_ref, position, velocity, kp: float = 1.0, kd: float = 2.0,
                  velocity_ref=None) -> np.ndarray:
    """PD law giving the world acceleration reference."""
    vref = np.zeros(3) if velocity_ref is None else np.asarray(velocity_ref, dtype=float)
    return kp * (np.asarray(position_ref, dtype=float) - position) + kd * (vref - velocity)


def attitude_error(attitude_ref, attitude) -> np.ndarray:
    """Body-frame error vector, twice the vector part of the shortest error quaternion."""
    e = quat_mul(quat_conj(np.asarray(attitude, dtype=float)), np.asarray(attitude_ref, dtype=float))
    if e[0] < 0.0:
        e = -e
    return 2.0 * e[1:]


def attitude_loop(attitude_ref, attitude, rate, kq: float = 50.0, kr: float = 12.0) -> np.ndarray:
    """Angular-acceleration reference from the attitude error and body rate."""
    return kq * attitude_error(attitude_ref, attitude) - kr * np.asarray(rate, dtype=float)


def indi_inner(rate_dot_ref, rate_dot_filtered, thrust_increment, u_filtered,
               g: EffectivenessMatrix, u_prev=None, dt=None, null_space_gain: float = 0.0) -> np.ndarray:
    """Actuator command ``u_f + G^+ [rate_dot_ref - rate_dot_f ; dT]``, limited.

    With ``null_space_gain`` > 0 the reference point also drifts toward equal motor
    thrust inside the null space of ``G``.
    """
    nu = np.atleast_1d(np.asarray(rate_dot_ref, dtype=float) - np.asarray(rate_dot_filtered, dtype=float))
    if thrust_increment is not None:
        nu = np.append(nu, thrust_increment)
    u_ref = np.asarray(u_filtered, dtype=float)
    if null_space_gain > 0.0 and dt is not None:
        u_ref = u_ref + null_space_step(g, u_ref, null_space_gain * dt)
    u, _ = allocate(g, u_ref, nu, u_prev, dt)
    return u


@dataclass(frozen=True)
class OuterResult:
    attitude_ref: np.ndarray
    thrust: float
    tilt: float  # rad
    saturated: bool


def indi_outer(accel_ref, accel_filtered, attitude_filtered, thrust_filtered: float, *,
               mass: float = 10.0, lift_slope_force: float = 0.0, max_thrust: float = 205.0,
               max_tilt: float = math.radians(40.0), span_weight: float = 1.0) -> OuterResult:
    """Incremental outer loop.

    ``accel_*`` are world-frame accelerations. The increment along the current
    thrust axis becomes a thrust increment; the perpendicular part tilts the
    thrust axis by ``atan2(m |df|, T_f + lift_slope_force)``. ``span_weight``
    scales the tilt component along the wing span (bank is used instead in
    wing-borne flight).
    """
    q_f = np.asarray(attitude_filtered, dtype=float)
    rot = quat_to_matrix(q_f)
    nose = rot[:, 0]
    df = np.asarray(accel_ref, dtype=float) - np.asarray(accel_filtered, dtype=float)
    along = float(df @ nose)
    thrust = thrust_filtered + mass * along
    saturated = False
    if thrust < 0.0 or thrust > max_thrust:
        thrust = min(max(thrust, 0.0), max_thrust)
        saturated = True
    perp = df - along * nose
    if span_weight != 1.0:
        span = rot[:, 1]
        perp = perp - (1.0 - span_weight) * float(perp @ span) * span
    mag = math.sqrt(float(perp @ perp))
    if mag < 1e-12:
        return OuterResult(q_f / np.linalg.norm(q_f), thrust, 0.0, saturated)
    tilt = math.atan2(mass * mag, max(thrust_filtered + lift_slope_force, 1e-6))
    if tilt > max_tilt:
        tilt, saturated = max_tilt, True
    d = perp / mag
    axis = np.array([nose[1] * d[2] - nose[2] * d[1], nose[2] * d[0] - nose[0] * d[2],
                     nose[0] * d[1] - nose[1] * d[0]])
    axis /= math.sqrt(float(axis @ axis))
    q_r = quat_normalize(quat_mul(quat_exp(axis * tilt), q_f))
    return OuterResult(q_r, thrust, tilt, saturated)


@lru_cache(maxsize=16)
def _fixed_effectiveness(params: VehicleParams):
    """Motor columns, which do not depend on the operating point, and per wing half the
    dynamic-pressure-weighted panel areas (prop-washed, clean) and the flap arm (x, y)."""
    p = params
    inertia = p.inertia
    g = np.zeros((4, N_MOTORS + 4))
    pos = p.motor_positions
    g[0, :N_MOTORS] = p.motor_spin * p.torque_ratio * p.max_thrust_n / inertia[0]
    g[1, :N_MOTORS] = pos[:, 2] * p.max_thrust_n / inertia[1]
    g[2, :N_MOTORS] = -pos[:, 1] * p.max_thrust_n / inertia[2]
    g[3, :N_MOTORS] = p.max_thrust_n
    panels = p.panels
    scaled = panels["area"] * panels["q_scale"]
    areas, arms = [], []
    for k, _name in enumerate(WING_HALVES):
        sel = panels["half"] == k
        washed = panels["washed"][sel] > 0.0
        areas.append((float(scaled[sel][washed].sum()), float(scaled[sel][~washed].sum())))
        arms.append(tuple(panels["position"][sel][0][:2]))
    return g, tuple(areas), tuple(arms)


def effectiveness_matrix(params: VehicleParams, axial_airspeed: float = 0.0,
                         motor_thrust=None) -> np.ndarray:
    """(4, 16) effectiveness of the 12 motors and 4 flaps at the current operating point.

    Flap authority scales with the dynamic pressure over each wing half: the
    slipstream part from momentum theory, the clean part from the airspeed.
    """
    p = params
    fixed, areas, arms = _fixed_effectiveness(p)
    g = fixed.copy()
    if motor_thrust is None:
        motor_thrust = np.full(N_MOTORS, p.weight / N_MOTORS)
    thrust = np.maximum(np.asarray(motor_thrust, dtype=float), 0.0)
    inertia = p.inertia
    v = max(axial_airspeed, 0.0)
    for k in range(len(WING_HALVES)):
        t = float(thrust[3 * k: 3 * k + 3].sum()) / 3.0
        wash = p.wash_gain * induced_velocity(t, v, p.air_density, p.prop_disc_area_m2)
        washed_area, clean_area = areas[k]
        dyn = 0.5 * p.air_density * ((v + wash) ** 2 * washed_area + v * v * clean_area)
        force_z = -p.flap_lift_coefficient * dyn
        x, y = arms[k]
        g[0, N_MOTORS + k] = y * force_z / inertia[0]
        g[1, N_MOTORS + k] = -x * force_z / inertia[1]
    return g


def full_scale_roll_moment(params: VehicleParams) -> float:
    """Largest hover-roll moment: every motor on one side at full thrust."""
    y = params.motor_positions[:, 1]
    return float(np.abs(y).sum() * params.max_thrust_n / 2.0)


def hover_roll_command(params: VehicleParams, u) -> float:
    """Hover-roll (body z) moment the controller believes it commands with motor vector ``u``."""
    y = params.motor_positions[:, 1]
    return float(-(y * params.max_thrust_n) @ np.asarray(u)[:N_MOTORS])
