"""Controller state machine stepped at the control rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..plant.params import N_ACTUATORS, N_MOTORS, VehicleParams
from ..plant.rotation import quat_to_matrix
from . import core
from .allocation import EffectivenessMatrix, update_effectiveness
from .core import controller_step
from .filters import LowPass2
from .indi import effectiveness_matrix, full_scale_roll_moment


@dataclass(frozen=True)
class ControlParams:
    kp_position: float = 1.0
    kd_position: float = 2.0
    kq_attitude: float = 50.0
    kr_attitude: float = 12.0
    control_rate_hz: float = 500.0
    # body y and z rates are hover pitch and roll; body x is hover yaw
    cutoff_pitch_roll_rate_hz: float = 1.5
    cutoff_yaw_rate_hz: float = 0.5
    cutoff_accel_hz: float = 0.5
    cutoff_attitude_hz: float = 0.5
    max_horizontal_accel: float = 4.0
    max_vertical_accel: float = 3.0
    max_tilt_deg: float = 40.0
    max_bank_deg: float = 30.0
    motor_rate_limit: float = 25.0  # full scale per second
    motor_weight: float = 1.0
    flap_weight: float = 1.0
    null_space_gain: float = 5.0  # 1/s at full wing-borne blend, pull toward equal motor thrust and neutral flaps
    wingborne_low_speed: float = 8.0  # m/s, below this the thrust axis does all the work
    wingborne_high_speed: float = 14.0
    effectiveness_update_hz: float = 50.0

    def __post_init__(self):
        nyquist = 0.5 * self.control_rate_hz
        for name in ("cutoff_pitch_roll_rate_hz", "cutoff_yaw_rate_hz", "cutoff_accel_hz",
                     "cutoff_attitude_hz"):
            if not 0.0 < getattr(self, name) < nyquist:
                raise ValueError(f"{name} must lie in (0, {nyquist})")


@dataclass
class Setpoint:
    """References handed from the mission phase logic to the controller."""
    position: np.ndarray | None = None
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    heading: float = 0.0  # rad, direction the belly faces in hover / the nose in cruise
    attitude: np.ndarray | None = None  # overrides the outer loop when given
    thrust: float | None = None  # direct total-thrust demand, N
    thrust_floor: float = 0.0
    pinned: np.ndarray | None = None  # bool mask of actuators held at their lower limit
    motors_off: bool = False


@dataclass
class Measurement:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    rate: np.ndarray
    specific_force: np.ndarray  # body frame accelerometer
    air_velocity: np.ndarray  # world-frame velocity relative to air


@dataclass
class Telemetry:
    accel_ref: np.ndarray
    accel_filtered: np.ndarray
    attitude_ref: np.ndarray
    attitude_filtered: np.ndarray
    rate_dot_ref: np.ndarray
    rate_dot_filtered: np.ndarray
    thrust_ref: float
    command: np.ndarray
    saturated: np.ndarray
    outer_saturated: bool
    roll_bias: float
    attitude_error: float  # rad
    degraded_axes: tuple[str, ...]


class INDIController:
    def __init__(self, vehicle: VehicleParams, params: ControlParams = ControlParams()):
        self.vehicle = vehicle
        self.params = params
        rate = params.control_rate_hz
        self.dt = 1.0 / rate
        # measurement filters: rate derivative (x, y, z), acceleration, attitude
        sensed = ([params.cutoff_yaw_rate_hz] + [params.cutoff_pitch_roll_rate_hz] * 2
                  + [params.cutoff_accel_hz] * 3 + [params.cutoff_attitude_hz] * 4)
        # the actuator model passes through each measurement filter for synchronization
        model = ([params.cutoff_pitch_roll_rate_hz] * N_ACTUATORS + [params.cutoff_yaw_rate_hz] * N_ACTUATORS
                 + [params.cutoff_accel_hz] * N_ACTUATORS)
        self.filters = LowPass2(sensed + model, rate, len(sensed) + len(model))
        self._fb = np.ascontiguousarray(self.filters.b)
        self._fa = np.ascontiguousarray(self.filters.a)
        self._primed = np.zeros(1, dtype=np.bool_)
        self._mem = np.zeros(8)
        self._meas = np.zeros(core.N_MEAS)
        self._sp = np.zeros(core.N_SETPOINT)
        self.u_model = np.zeros(N_ACTUATORS)
        self.u_cmd = np.zeros(N_ACTUATORS)
        self.health = np.ones(N_ACTUATORS, dtype=bool)
        self._motor_lag = 1.0 - math.exp(-self.dt / vehicle.motor_time_constant_s)
        self._flap_step = vehicle.servo_rate_limit_rad_s / vehicle.flap_max_deflection_rad * self.dt
        self._max_thrust = 0.95 * N_MOTORS * vehicle.max_thrust_n
        # hover-roll moment per unit motor command, normalized by the full-scale moment
        self._roll_per_command = (-vehicle.motor_positions[:, 1] * vehicle.max_thrust_n
                                  / full_scale_roll_moment(vehicle))
        self._g: EffectivenessMatrix | None = None
        self._g_age = math.inf
        self._degraded = None
        self.steps = 0
        n = N_ACTUATORS
        self._lower = np.r_[np.zeros(N_MOTORS), -np.ones(4)]
        self._upper = np.ones(n)
        self._rate_limit = np.r_[np.full(N_MOTORS, params.motor_rate_limit),
                                 np.full(4, vehicle.servo_rate_limit_rad_s / vehicle.flap_max_deflection_rad)]
        self._weights = np.r_[np.full(N_MOTORS, params.motor_weight), np.full(4, params.flap_weight)]
        sc = np.zeros(core.N_SCALARS)
        sc[[core.KP, core.KD, core.KQ, core.KR, core.DT, core.GRAV, core.MASS, core.MOTOR_LAG,
            core.FLAP_STEP, core.MAX_THRUST, core.MAX_H_ACC, core.MAX_V_ACC, core.MAX_TILT,
            core.MAX_BANK, core.BETA_LOW, core.BETA_HIGH, core.RHO, core.WING_AREA, core.CL_ALPHA,
            core.T_MAX, core.NULL_GAIN]] = [
            params.kp_position, params.kd_position, params.kq_attitude, params.kr_attitude, self.dt,
            vehicle.gravity, vehicle.mass_kg, self._motor_lag, self._flap_step, self._max_thrust,
            params.max_horizontal_accel, params.max_vertical_accel, math.radians(params.max_tilt_deg),
            math.radians(params.max_bank_deg), params.wingborne_low_speed, params.wingborne_high_speed,
            vehicle.air_density, vehicle.wing_area_m2, vehicle.cl_alpha, vehicle.max_thrust_n,
            params.null_space_gain]
        self._scalars = sc

    def set_health(self, health):
        health = np.asarray(health, dtype=bool)
        if health.tobytes() != self.health.tobytes():
            self.health = health.copy()
            self._g_age = math.inf
            self._degraded = None

    def effectiveness(self, axial_airspeed: float, pinned=None) -> EffectivenessMatrix:
        thrust = self.u_model[:N_MOTORS] * self.vehicle.max_thrust_n
        m = effectiveness_matrix(self.vehicle, axial_airspeed, thrust)
        upper = self._upper.copy()
        if pinned is not None:
            upper[pinned] = self._lower[pinned]
        g = EffectivenessMatrix(m, self._lower, upper, self._rate_limit, self._weights, self.health)
        # the rank only changes with actuator health, so the axis check is cached
        if self._degraded is None:
            self._degraded = update_effectiveness(g, self.health).degraded_axes
        return replace(g, degraded_axes=self._degraded)

    def step(self, meas: Measurement, sp: Setpoint) -> tuple[np.ndarray, Telemetry]:
        if sp.motors_off:
            self.u_cmd[:] = 0.0
            self.steps += 1
            tel = np.zeros(core.N_TELEMETRY)
            tel[core.T_ATT_REF:core.T_ATT_REF + 4] = meas.attitude
            tel[core.T_ATT_F:core.T_ATT_F + 4] = meas.attitude
            return self.u_cmd.copy(), self._telemetry(tel, np.zeros(N_ACTUATORS, dtype=bool))
        m = self._meas
        m[core.M_POS:core.M_POS + 3] = meas.position
        m[core.M_VEL:core.M_VEL + 3] = meas.velocity
        m[core.M_Q:core.M_Q + 4] = meas.attitude
        m[core.M_RATE:core.M_RATE + 3] = meas.rate
        m[core.M_SPEC:core.M_SPEC + 3] = meas.specific_force
        m[core.M_AIR:core.M_AIR + 3] = meas.air_velocity
        r = self._sp
        r[core.S_HAS_POS] = sp.position is not None
        if sp.position is not None:
            r[core.S_POS:core.S_POS + 3] = sp.position
        r[core.S_VEL:core.S_VEL + 3] = sp.velocity
        r[core.S_HEADING] = sp.heading
        r[core.S_HAS_ATT] = sp.attitude is not None
        if sp.attitude is not None:
            r[core.S_ATT:core.S_ATT + 4] = sp.attitude
        r[core.S_HAS_THRUST] = sp.thrust is not None
        r[core.S_THRUST] = 0.0 if sp.thrust is None else sp.thrust
        r[core.S_FLOOR] = sp.thrust_floor

        self._g_age += self.dt
        if self._g is None or self._g_age >= 1.0 / self.params.effectiveness_update_hz or sp.pinned is not None:
            nose = quat_to_matrix(meas.attitude)[:, 0]
            self._g = self.effectiveness(float(nose @ m[core.M_AIR:core.M_AIR + 3]), sp.pinned)
            g = self._g
            self._eff = np.ascontiguousarray(g.effective)
            self._lim = np.ascontiguousarray(np.vstack([g.weights, g.lower, g.upper, g.rate_limit]))
            self._g_age = 0.0
        u, sat, tel = controller_step(m, r, self._fb, self._fa, self.filters.d1, self.filters.d2,
                                      self._primed, self.u_model, self.u_cmd, self._mem, self._eff,
                                      self._lim, self._g.health, self._scalars)
        self.steps += 1
        return u, self._telemetry(tel, sat)

    def _telemetry(self, tel, sat) -> Telemetry:
        g = self._g
        return Telemetry(
            accel_ref=tel[core.T_ACC_REF:core.T_ACC_REF + 3], accel_filtered=tel[core.T_ACC_F:core.T_ACC_F + 3],
            attitude_ref=tel[core.T_ATT_REF:core.T_ATT_REF + 4], attitude_filtered=tel[core.T_ATT_F:core.T_ATT_F + 4],
            rate_dot_ref=tel[core.T_RDR:core.T_RDR + 3], rate_dot_filtered=tel[core.T_RDF:core.T_RDF + 3],
            thrust_ref=float(tel[core.T_THRUST]), command=self.u_cmd.copy(), saturated=sat,
            outer_saturated=bool(tel[core.T_OUTER_SAT]),
            roll_bias=float(self._roll_per_command @ self.u_cmd[:N_MOTORS]),
            attitude_error=float(tel[core.T_ERR]), degraded_axes=g.degraded_axes if g is not None else (),
        )
