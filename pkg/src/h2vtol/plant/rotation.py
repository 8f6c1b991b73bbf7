"""Unit-quaternion helpers. Quaternions are ``[w, x, y, z]`` and rotate body to world."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def quat_mul(a, b):
    aw, ax, ay, az = a[0], a[1], a[2], a[3]
    bw, bx, by, bz = b[0], b[1], b[2], b[3]
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


@njit(cache=True)
def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


@njit(cache=True)
def quat_normalize(q):
    return q / math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


@njit(cache=True)
def quat_to_matrix(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@njit(cache=True)
def quat_exp(rotvec):
    """Quaternion of a rotation vector (axis times angle)."""
    angle = math.sqrt(rotvec[0] ** 2 + rotvec[1] ** 2 + rotvec[2] ** 2)
    if angle < 1e-12:
        return quat_normalize(np.array([1.0, 0.5 * rotvec[0], 0.5 * rotvec[1], 0.5 * rotvec[2]]))
    s = math.sin(0.5 * angle) / angle
    return np.array([math.cos(0.5 * angle), s * rotvec[0], s * rotvec[1], s * rotvec[2]])


@njit(cache=True)
def quat_log(q):
    """Rotation vector of a unit quaternion, taking the short way round."""
    if q[0] < 0.0:
        q = -q
    v = math.sqrt(q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    if v < 1e-12:
        return np.array([2.0 * q[1], 2.0 * q[2], 2.0 * q[3]])
    angle = 2.0 * math.atan2(v, q[0])
    return np.array([q[1], q[2], q[3]]) * (angle / v)


def quat_rotate(q, v):
    return quat_to_matrix(np.asarray(q, dtype=float)) @ np.asarray(v, dtype=float)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    return quat_exp(axis / np.linalg.norm(axis) * angle)


@njit(cache=True)
def _matrix_to_quat(m):
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    q = quat_normalize(q)
    return q if q[0] >= 0.0 else -q


def quat_from_matrix(m) -> np.ndarray:
    return _matrix_to_quat(np.ascontiguousarray(m, dtype=np.float64))


def quat_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """ZYX Euler angles (rad) to quaternion."""
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def hover_attitude(heading: float = 0.0) -> np.ndarray:
    """Nose up, belly facing ``heading`` (rad from north)."""
    return quat_from_euler(0.0, math.pi / 2, heading)


@njit(cache=True)
def _frame_quat(x, y):
    x = x / math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    d = y[0] * x[0] + y[1] * x[1] + y[2] * x[2]
    y = y - d * x
    y = y / math.sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
    m = np.empty((3, 3))
    m[:, 0] = x
    m[:, 1] = y
    m[0, 2] = x[1] * y[2] - x[2] * y[1]
    m[1, 2] = x[2] * y[0] - x[0] * y[2]
    m[2, 2] = x[0] * y[1] - x[1] * y[0]
    return _matrix_to_quat(m)


def attitude_from_axes(nose, span) -> np.ndarray:
    """Quaternion whose body x is ``nose`` and body y is ``span`` (orthogonalized)."""
    return _frame_quat(np.asarray(nose, dtype=np.float64), np.asarray(span, dtype=np.float64))


def nose_elevation(q) -> float:
    """Angle of body x above the horizon, rad; +pi/2 in hover."""
    m = quat_to_matrix(np.asarray(q, dtype=float))
    return math.asin(max(-1.0, min(1.0, -m[2, 0])))


def angle_between(q1, q2) -> float:
    """Smallest rotation angle taking ``q1`` to ``q2``, rad."""
    d = abs(float(np.dot(q1, q2)))
    return 2.0 * math.acos(min(1.0, d))
