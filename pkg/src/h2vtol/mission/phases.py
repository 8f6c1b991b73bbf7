"""Flight-phase state machine: take-off, hover, transitions, cruise and drop-down landing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..control.controller import Setpoint
from ..plant.dynamics import VehicleState
from ..plant.params import N_ACTUATORS, N_MOTORS, VehicleParams
from ..plant.rotation import nose_elevation, quat_from_euler, quat_to_matrix
from ..util import smoothstep


class FlightPhase(str, Enum):
    GROUND = "Ground"
    ANGLED_TAKEOFF = "AngledTakeoff"
    HOVER = "Hover"
    TRANSITION_TO_FORWARD = "TransitionToForward"
    FORWARD = "Forward"
    TRANSITION_TO_HOVER = "TransitionToHover"
    DROP_DOWN_LANDING = "DropDownLanding"
    SHUTDOWN = "Shutdown"


P = FlightPhase
PHASE_GRAPH: dict[FlightPhase, frozenset[FlightPhase]] = {
    P.GROUND: frozenset({P.ANGLED_TAKEOFF, P.SHUTDOWN}),
    P.ANGLED_TAKEOFF: frozenset({P.HOVER}),
    P.HOVER: frozenset({P.TRANSITION_TO_FORWARD, P.DROP_DOWN_LANDING}),
    P.TRANSITION_TO_FORWARD: frozenset({P.FORWARD}),
    P.FORWARD: frozenset({P.TRANSITION_TO_HOVER}),
    P.TRANSITION_TO_HOVER: frozenset({P.HOVER}),
    P.DROP_DOWN_LANDING: frozenset({P.SHUTDOWN}),
    P.SHUTDOWN: frozenset(),
}
# phases in which the controller tracks an attitude and a loss of control can be declared
CONTROLLED_PHASES = frozenset({P.HOVER, P.TRANSITION_TO_FORWARD, P.FORWARD, P.TRANSITION_TO_HOVER})


class PhaseGraphError(RuntimeError):
    pass


def check_transition(a: FlightPhase, b: FlightPhase):
    if b not in PHASE_GRAPH[a]:
        raise PhaseGraphError(f"no edge {a.value} -> {b.value}")


@dataclass(frozen=True)
class MissionPlan:
    heading_deg: float = 0.0  # direction of travel; in hover the belly faces it
    takeoff_delay_s: float = 0.5  # time on the ground before spooling up
    takeoff_exit_altitude_m: float = 2.0
    takeoff_pitch_rate_deg_s: float = 60.0  # how fast the reference swings from ground pitch to vertical
    hover_altitude_m: float = 10.0
    hover_before_s: float = 10.0
    cruise_s: float = 0.0  # zero skips both transitions
    cruise_airspeed: float = 20.0
    transition_s: float = 4.0  # pitch-down ramp into forward flight
    # back to hover: slow down on the wing, then flare to vertical
    flare_airspeed: float = 13.0
    slow_down_accel: float = 1.5  # m/s^2
    flare_s: float = 2.0
    transition_min_altitude_m: float = 5.0
    forward_exit_airspeed: float = 14.0
    hover_exit_groundspeed: float = 2.0
    hover_after_s: float = 10.0
    land: bool = True
    descent_rate: float = 0.8  # m/s
    touchdown_clearance_m: float = 0.05
    touchdown_sink_rate: float = 0.3  # m/s
    touchdown_hold_s: float = 0.5
    slide_threshold_deg: float = 35.0  # nose angle from vertical at which thrust is cut
    nose_lower_rate_deg_s: float = 20.0
    nose_lower_thrust_fraction: float = 0.35  # of weight, carried by the front motors
    rest_speed: float = 0.05  # m/s and rad/s
    rest_hold_s: float = 0.5
    fidelity: str = "full"  # "full" or "hybrid" (quasi-static cruise)
    cruise_settle_s: float = 60.0  # dynamic flight kept at each end of a quasi-static cruise

    def __post_init__(self):
        if self.fidelity not in ("full", "hybrid"):
            raise ValueError("fidelity must be 'full' or 'hybrid'")
        for name in ("hover_before_s", "cruise_s", "hover_after_s", "transition_s", "flare_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.cruise_airspeed <= 0 or self.descent_rate <= 0:
            raise ValueError("cruise_airspeed and descent_rate must be positive")

    @property
    def heading(self) -> float:
        return math.radians(self.heading_deg)

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading), 0.0])


@dataclass
class PhaseInput:
    time: float
    state: VehicleState
    air_velocity: np.ndarray  # world frame
    clearance: float  # m, height of the lowest contact point


@dataclass
class PhaseState:
    phase: FlightPhase = FlightPhase.GROUND
    entry_time: float = 0.0
    cruise_pitch: float = 0.0  # rad, trimmed pitch at the cruise airspeed
    hover_entries: int = 0
    target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    start_pitch: float = 0.0
    stage: str = ""  # sub-step within the landing
    stage_time: float = 0.0
    timer: float = 0.0  # how long the current hold condition has been true
    last_time: float = 0.0
    rejected: int = 0  # transitions refused by a guard
    timeline: list = field(default_factory=list)  # (phase, entry time)

    def enter(self, phase: FlightPhase, time: float):
        check_transition(self.phase, phase)
        self.phase = phase
        self.entry_time = time
        self.stage = ""
        self.timer = 0.0
        self.timeline.append((phase, time))


def ground_clearance(state: VehicleState, params: VehicleParams) -> float:
    pts = params.contact_points @ quat_to_matrix(state.attitude).T + state.position
    return float(-pts[:, 2].max())


def _held(ps: PhaseState, condition: bool, dt: float, hold: float) -> bool:
    ps.timer = ps.timer + dt if condition else 0.0
    return ps.timer >= hold


REAR_MOTORS = np.zeros(N_ACTUATORS, dtype=bool)
REAR_MOTORS[N_MOTORS // 2:N_MOTORS] = True


def phase_step(ps: PhaseState, inp: PhaseInput, plan: MissionPlan, params: VehicleParams,
               ) -> tuple[PhaseState, Setpoint]:
    """Advance the phase machine one control step and return the controller references.

    ``ps`` is updated in place and returned.
    """
    t = inp.time
    dt = max(t - ps.last_time, 0.0)
    ps.last_time = t
    s = inp.state
    since = t - ps.entry_time
    psi = plan.heading
    altitude_ref = -plan.hover_altitude_m

    if ps.phase is P.GROUND:
        if since >= plan.takeoff_delay_s:
            ps.enter(P.ANGLED_TAKEOFF, t)
            ps.start_pitch = nose_elevation(s.attitude)
            ps.target = np.array([s.position[0], s.position[1], altitude_ref])
        return ps, Setpoint(motors_off=True)

    if ps.phase is P.ANGLED_TAKEOFF:
        if s.altitude >= plan.takeoff_exit_altitude_m:
            ps.enter(P.HOVER, t)
            ps.hover_entries += 1
            ps.target = np.array([s.position[0], s.position[1], altitude_ref])
        else:
            pitch = min(ps.start_pitch + math.radians(plan.takeoff_pitch_rate_deg_s) * since, 0.5 * math.pi)
            return ps, Setpoint(attitude=quat_from_euler(0.0, pitch, psi), thrust=np.inf,
                                position=ps.target, heading=psi)

    if ps.phase is P.HOVER:
        first = ps.hover_entries == 1
        hold = plan.hover_before_s if first else plan.hover_after_s
        if since >= hold:
            if first and plan.cruise_s > 0.0:
                if s.altitude >= plan.transition_min_altitude_m:
                    ps.enter(P.TRANSITION_TO_FORWARD, t)
                    ps.target = np.array([s.position[0], s.position[1], altitude_ref])
                else:
                    ps.rejected += 1
            elif plan.land:
                ps.enter(P.DROP_DOWN_LANDING, t)
                ps.stage = "descend"
                ps.target = s.position.copy()
        if ps.phase is P.HOVER:
            return ps, Setpoint(position=ps.target, heading=psi)

    if ps.phase is P.TRANSITION_TO_FORWARD:
        since = t - ps.entry_time
        airspeed = float(np.linalg.norm(inp.air_velocity))
        if since >= plan.transition_s and airspeed >= plan.forward_exit_airspeed:
            ps.enter(P.FORWARD, t)
            ps.target = np.array([s.position[0], s.position[1], altitude_ref])
        else:
            frac = smoothstep(since / plan.transition_s) if plan.transition_s > 0 else 1.0
            pitch = 0.5 * math.pi + frac * (ps.cruise_pitch - 0.5 * math.pi)
            return ps, Setpoint(attitude=quat_from_euler(0.0, pitch, psi), position=ps.target, heading=psi)

    if ps.phase is P.FORWARD:
        since = t - ps.entry_time
        if since >= plan.cruise_s:
            ps.enter(P.TRANSITION_TO_HOVER, t)
            ps.stage = "slow"
        else:
            return ps, Setpoint(**forward_references(ps, inp, plan))

    if ps.phase is P.TRANSITION_TO_HOVER:
        return ps, _back_transition(ps, inp, plan)

    if ps.phase is P.DROP_DOWN_LANDING:
        return ps, _landing(ps, inp, plan, params, dt)

    return ps, Setpoint(motors_off=True)


def forward_references(ps: PhaseState, inp: PhaseInput, plan: MissionPlan) -> dict:
    """Track the straight line through the cruise entry point at the cruise airspeed."""
    s = inp.state
    d = plan.direction
    wind = s.velocity - inp.air_velocity
    along = float((s.position[:2] - ps.target[:2]) @ d[:2])
    position = ps.target + along * d
    position[2] = ps.target[2]
    groundspeed = plan.cruise_airspeed + float(wind @ d)
    return dict(position=position, velocity=groundspeed * d, heading=plan.heading)


def _back_transition(ps: PhaseState, inp: PhaseInput, plan: MissionPlan) -> Setpoint:
    s = inp.state
    t = inp.time
    psi = plan.heading
    airspeed = float(np.linalg.norm(inp.air_velocity))
    if ps.stage == "slow":
        since = t - ps.entry_time
        slow_time = max(plan.cruise_airspeed - plan.flare_airspeed, 0.0) / plan.slow_down_accel
        if airspeed <= plan.flare_airspeed + 0.5 or since >= slow_time + 5.0:
            ps.stage = "flare"
            ps.stage_time = t
            ps.start_pitch = nose_elevation(s.attitude)
            ps.target = np.array([s.position[0], s.position[1], ps.target[2]])
        else:
            refs = forward_references(ps, inp, plan)
            speed = max(plan.cruise_airspeed - plan.slow_down_accel * since, plan.flare_airspeed)
            refs["velocity"] *= speed / plan.cruise_airspeed
            return Setpoint(**refs)
    since = t - ps.stage_time
    groundspeed = float(np.hypot(s.velocity[0], s.velocity[1]))
    if since >= plan.flare_s and (groundspeed <= plan.hover_exit_groundspeed or since >= plan.flare_s + 3.0):
        ps.enter(P.HOVER, t)
        ps.hover_entries += 1
        ps.target = np.array([s.position[0], s.position[1], -plan.hover_altitude_m])
        return Setpoint(position=ps.target, heading=psi)
    frac = smoothstep(since / plan.flare_s) if plan.flare_s > 0 else 1.0
    pitch = ps.start_pitch + frac * (0.5 * math.pi - ps.start_pitch)
    ps.target[:2] = s.position[:2]
    return Setpoint(attitude=quat_from_euler(0.0, pitch, psi), position=ps.target, heading=psi)


def _landing(ps: PhaseState, inp: PhaseInput, plan: MissionPlan, params: VehicleParams, dt: float) -> Setpoint:
    s = inp.state
    t = inp.time
    psi = plan.heading
    if ps.stage == "descend":
        sink = float(s.velocity[2])
        if _held(ps, inp.clearance <= plan.touchdown_clearance_m and sink < plan.touchdown_sink_rate,
                 dt, plan.touchdown_hold_s):
            ps.stage = "lower_nose"
            ps.timer = 0.0
            ps.stage_time = t
            ps.start_pitch = nose_elevation(s.attitude)
        else:
            # the reference sinks steadily and keeps going below ground until touchdown is confirmed
            ps.target[2] += plan.descent_rate * dt
            velocity = np.array([0.0, 0.0, plan.descent_rate])
            return Setpoint(position=ps.target, velocity=velocity, heading=psi)
    if ps.stage == "lower_nose":
        elevation = nose_elevation(s.attitude)
        if elevation <= 0.5 * math.pi - math.radians(plan.slide_threshold_deg):
            ps.stage = "settle"
            ps.timer = 0.0
        else:
            pitch = ps.start_pitch - math.radians(plan.nose_lower_rate_deg_s) * (t - ps.stage_time)
            pitch = max(pitch, params.ground_attitude_pitch())
            # rear motors at minimum; the front motors alone pitch the nose down
            return Setpoint(attitude=quat_from_euler(0.0, pitch, psi), heading=psi,
                            thrust=plan.nose_lower_thrust_fraction * params.weight, pinned=REAR_MOTORS)
    if ps.stage == "settle":
        at_rest = (float(np.linalg.norm(s.velocity)) < plan.rest_speed
                   and float(np.linalg.norm(s.rate)) < plan.rest_speed)
        if _held(ps, at_rest, dt, plan.rest_hold_s):
            ps.enter(P.SHUTDOWN, t)
    return Setpoint(motors_off=True)


__all__ = [
    "FlightPhase", "PHASE_GRAPH", "CONTROLLED_PHASES", "PhaseGraphError", "check_transition", "MissionPlan",
    "PhaseInput", "PhaseState", "ground_clearance", "phase_step", "forward_references"
]
