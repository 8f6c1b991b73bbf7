"""Control effectiveness and weighted pseudo-inverse allocation with one redistribution pass."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

AXES = ("roll_x", "pitch_y", "yaw_z", "thrust")


@dataclass(frozen=True)
class EffectivenessMatrix:
    """Map from actuator increments to increments of [p_dot, q_dot, r_dot, thrust].

    The first three rows are body angular accelerations (moment divided by
    inertia), the last is thrust in N.
    """
    matrix: np.ndarray  # (axes, n)
    lower: np.ndarray  # position limits
    upper: np.ndarray
    rate_limit: np.ndarray  # units per second
    weights: np.ndarray  # allocation cost weights, larger = used less
    health: np.ndarray  # bool per actuator
    degraded_axes: tuple[str, ...] = ()

    @property
    def n_actuators(self) -> int:
        return self.matrix.shape[1]

    @property
    def effective(self) -> np.ndarray:
        return self.matrix * self.health


def controllable_axes(matrix: np.ndarray, tol: float = 1e-9) -> tuple[bool, ...]:
    """Per axis, whether a unit demand on that axis alone is reachable."""
    out = []
    scale = max(np.abs(matrix).max(), 1e-300)
    for k in range(matrix.shape[0]):
        e = np.zeros(matrix.shape[0])
        e[k] = 1.0
        x, *_ = np.linalg.lstsq(matrix / scale, e, rcond=None)
        out.append(bool(np.linalg.norm(matrix / scale @ x - e) < 1e-6))
    return tuple(out)


def update_effectiveness(g: EffectivenessMatrix, health) -> EffectivenessMatrix:
    """Zero the columns of failed actuators and report axes that lost authority."""
    health = np.asarray(health, dtype=bool)
    masked = g.matrix * health
    ok = controllable_axes(masked)
    degraded = tuple(name for name, good in zip(AXES[: masked.shape[0]], ok) if not good)
    if masked.shape[0] != len(AXES):
        degraded = tuple(f"axis{k}" for k, good in enumerate(ok) if not good)
    return replace(g, health=health, degraded_axes=degraded)


def weighted_pseudo_inverse(matrix: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``W^-1 G^T (G W^-1 G^T)^-1``; the SVD form on the reachable subspace if singular."""
    return _wpinv(np.ascontiguousarray(matrix, dtype=np.float64), np.asarray(weights, dtype=np.float64))


@njit(cache=True)
def _wpinv(matrix, weights):
    winv = 1.0 / weights
    gw = matrix * winv
    m = gw @ matrix.T
    scale = np.abs(m).max()
    if scale > 0.0:
        det = np.linalg.det(m / scale)
        if abs(det) > 1e-12:
            return gw.T @ np.linalg.inv(m)
    s = np.sqrt(winv)
    return np.expand_dims(s, 1) * np.linalg.pinv(matrix * s)


@njit(cache=True)
def _allocate(eff, weights, health, u_ref, nu, lo, hi):
    du = _wpinv(eff, weights) @ nu
    u = u_ref + du
    n = u.shape[0]
    sat = np.zeros(n, dtype=np.bool_)
    any_sat = False
    for i in range(n):
        if health[i] and (u[i] < lo[i] or u[i] > hi[i]):
            sat[i] = True
            any_sat = True
    if any_sat:
        pinned = np.minimum(np.maximum(u, lo), hi)
        residual = nu.copy()
        for i in range(n):
            if sat[i]:
                residual -= eff[:, i] * (pinned[i] - u_ref[i])
        free = np.where(health & ~sat)[0]
        u = pinned
        if free.shape[0] > 0:
            g_free = np.ascontiguousarray(eff[:, free])
            du_free = _wpinv(g_free, weights[free]) @ residual
            for j in range(free.shape[0]):
                u[free[j]] = u_ref[free[j]] + du_free[j]
    u = np.minimum(np.maximum(u, lo), hi)
    out_sat = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if not health[i]:
            u[i] = min(max(0.0, lo[i]), hi[i])
        elif (u[i] <= lo[i] + 1e-12 and du[i] < 0.0) or (u[i] >= hi[i] - 1e-12 and du[i] > 0.0):
            out_sat[i] = True
    return u, out_sat


# cost of motor imbalance relative to flap deflection in the null-space preference
MOTOR_IMBALANCE_WEIGHT = 10.0


@njit(cache=True)
def _null_space_step(eff, health, u, n_motors, step):
    """Move ``u`` by ``step`` toward the preferred point of its null-space family: equal
    thrust on the healthy motors and neutral flaps, with motor imbalance weighted higher.
    ``G u`` is unchanged, so the commanded moments and thrust stay the same."""
    n = u.shape[0]
    d = np.zeros(n)
    total = 0.0
    count = 0
    for i in range(n_motors):
        if health[i]:
            total += u[i]
            count += 1
    if count == 0 or step == 0.0:
        return d
    mean = total / count
    target = np.zeros(n)
    metric = np.ones(n)
    for i in range(n):
        if not health[i]:
            continue
        if i < n_motors:
            target[i] = mean - u[i]
            metric[i] = MOTOR_IMBALANCE_WEIGHT
        else:
            target[i] = -u[i]
    d = target - _wpinv(eff, metric) @ (eff @ target)
    for i in range(n):
        d[i] = step * d[i] if health[i] else 0.0
    return d


def null_space_step(g: EffectivenessMatrix, u, step: float, n_motors: int = 12) -> np.ndarray:
    """Increment that evens out motor thrust and centres the flaps without changing ``G u``;
    ``step`` is the fraction of the offset removed (gain times time step)."""
    eff = np.ascontiguousarray(g.matrix * g.health)
    return _null_space_step(eff, np.asarray(g.health, dtype=np.bool_), np.asarray(u, dtype=np.float64),
                            n_motors, float(step))


def _limits(g: EffectivenessMatrix, u_prev, dt):
    lo, hi = g.lower.copy(), g.upper.copy()
    if u_prev is not None and dt is not None:
        lo = np.maximum(lo, u_prev - g.rate_limit * dt)
        hi = np.minimum(hi, u_prev + g.rate_limit * dt)
        hi = np.maximum(hi, lo)
    return lo, hi


def allocate(g: EffectivenessMatrix, u_ref: np.ndarray, nu: np.ndarray, u_prev=None, dt=None,
             ) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``G du = nu`` around ``u_ref``; returns ``(u, saturated_mask)``.

    Actuators that hit a limit are pinned there and the residual demand is
    re-solved once with the remaining healthy columns. Failed actuators are
    commanded to neutral.
    """
    lo, hi = _limits(g, u_prev, dt)
    eff = np.ascontiguousarray(g.matrix * g.health)
    return _allocate(eff, np.asarray(g.weights, dtype=np.float64), np.asarray(g.health, dtype=np.bool_),
                     np.asarray(u_ref, dtype=np.float64), np.atleast_1d(np.asarray(nu, dtype=np.float64)),
                     lo.astype(np.float64), hi.astype(np.float64))
