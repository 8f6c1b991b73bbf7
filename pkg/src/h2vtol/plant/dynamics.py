"""Rigid-body state, ground contact and the fixed-step integrator.

World frame is north-east-down with the ground plane at z = 0; body frame is
x forward along the thrust axis, y along the right wing, z toward the belly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .params import VehicleParams
from .rotation import quat_exp, quat_mul, quat_normalize, quat_to_matrix


class IntegrationFault(RuntimeError):
    """The integrator produced a non-finite state."""


def _no_contact():
    return np.full((4, 2), np.nan)


@dataclass
class VehicleState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    rate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    time: float = 0.0
    # per-contact friction anchor (world x, y); NaN while the point is airborne
    contact_anchors: np.ndarray = field(default_factory=_no_contact)

    @property
    def altitude(self) -> float:
        return -float(self.position[2])

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.attitude)


def resting_state(params: VehicleParams, heading: float = 0.0, north: float = 0.0,
                  east: float = 0.0) -> VehicleState:
    """Vehicle sitting on tail and gear at its ground pitch, spring preload included."""
    from .rotation import quat_from_euler
    q = quat_from_euler(0.0, params.ground_attitude_pitch(), heading)
    rot = quat_to_matrix(q)
    pts = params.contact_points @ rot.T
    preload = params.weight / (len(pts) * params.contact_stiffness)
    z = -pts[:, 2].max() + preload
    pos = np.array([north, east, z])
    anchors = (pos[:2] + pts[:, :2]).copy()
    return VehicleState(position=pos, attitude=q, contact_anchors=anchors)


@njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def contact_wrench(pos, vel, rot, omega, contacts, anchors, stiffness, damping, mu_s, mu_k):
    """Penalty ground reaction with stick-slip friction.

    Returns world force, body moment and the updated friction anchors.
    """
    force = np.zeros(3)
    moment = np.zeros(3)
    out = anchors.copy()
    for i in range(contacts.shape[0]):
        r = contacts[i]
        p = pos + rot @ r
        v = vel + rot @ _cross(omega, r)
        depth = p[2]
        if depth <= 0.0:
            out[i, 0] = np.nan
            out[i, 1] = np.nan
            continue
        fn = stiffness * depth + damping * v[2]
        if fn < 0.0:
            fn = 0.0
        if np.isnan(out[i, 0]):
            out[i, 0] = p[0]
            out[i, 1] = p[1]
        fx = -stiffness * (p[0] - out[i, 0]) - damping * v[0]
        fy = -stiffness * (p[1] - out[i, 1]) - damping * v[1]
        ft = math.sqrt(fx * fx + fy * fy)
        if ft > mu_s * fn:
            scale = mu_k * fn / ft
            fx *= scale
            fy *= scale
            # slide the anchor so the spring carries exactly the kinetic force
            out[i, 0] = p[0] + fx / stiffness
            out[i, 1] = p[1] + fy / stiffness
        f = np.array([fx, fy, -fn])
        force += f
        moment += _cross(r, rot.T @ f)
    return force, moment, out


@njit(cache=True)
def rigid_body_kernel(pos, vel, q, omega, force_b, moment_b, mass, inertia, gravity, dt,
                      contacts, anchors, stiffness, damping, mu_s, mu_k):
    rot = quat_to_matrix(q)
    f_world = rot @ force_b
    f_world[2] += mass * gravity
    fc, mc, anchors = contact_wrench(pos, vel, rot, omega, contacts, anchors,
                                     stiffness, damping, mu_s, mu_k)
    f_world += fc
    moment = moment_b + mc
    # symplectic Euler for translation
    vel1 = vel + f_world / mass * dt
    pos1 = pos + vel1 * dt
    # implicit midpoint on Euler's equations, fixed-point iterated
    w1 = omega.copy()
    for _ in range(3):
        wm = 0.5 * (omega + w1)
        w1 = omega + dt * (moment - _cross(wm, inertia * wm)) / inertia
    wm = 0.5 * (omega + w1)
    q1 = quat_normalize(quat_mul(q, quat_exp(wm * dt)))
    return pos1, vel1, q1, w1, anchors, f_world


def step_dynamics(state: VehicleState, params: VehicleParams, total_wrench, dt: float,
                  ) -> VehicleState:
    """Advance the rigid body by ``dt`` under a body-frame (force, moment) wrench.

    Gravity and ground contact are added here.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01] s")
    force, moment = total_wrench
    pos, vel, q, w, anchors, _ = rigid_body_kernel(
        np.asarray(state.position, dtype=float), np.asarray(state.velocity, dtype=float),
        np.asarray(state.attitude, dtype=float), np.asarray(state.rate, dtype=float),
        np.asarray(force, dtype=float), np.asarray(moment, dtype=float),
        params.mass_kg, params.inertia, params.gravity, dt, params.contact_points,
        np.asarray(state.contact_anchors, dtype=float), params.contact_stiffness,
        params.contact_damping, params.friction_static, params.friction_kinetic,
    )
    if not (np.isfinite(pos).all() and np.isfinite(vel).all() and np.isfinite(q).all()
            and np.isfinite(w).all()):
        raise IntegrationFault(f"non-finite state at t={state.time + dt:.3f}s")
    return replace(state, position=pos, velocity=vel, attitude=q, rate=w,
                   time=state.time + dt, contact_anchors=anchors)


def kinetic_energy(state: VehicleState, params: VehicleParams) -> float:
    w = np.asarray(state.rate)
    return 0.5 * params.mass_kg * float(state.velocity @ state.velocity) + 0.5 * float(w @ (params.inertia * w))
