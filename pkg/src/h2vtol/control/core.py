"""Fused per-step control path compiled with numba.

Same laws as :mod:`h2vtol.control.indi` and :mod:`h2vtol.control.allocation`,
arranged so one call does filtering, both INDI loops and allocation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..plant.rotation import _frame_quat, quat_conj, quat_exp, quat_mul, quat_normalize, quat_to_matrix
from .allocation import _allocate, _null_space_step

# packed scalar layout
(KP, KD, KQ, KR, DT, GRAV, MASS, MOTOR_LAG, FLAP_STEP, MAX_THRUST, MAX_H_ACC, MAX_V_ACC, MAX_TILT,
 MAX_BANK, BETA_LOW, BETA_HIGH, RHO, WING_AREA, CL_ALPHA, T_MAX, NULL_GAIN) = range(21)
N_SCALARS = 21


@njit(cache=True)
def biquad(x, b, a, d1, d2, primed):
    """Direct-form-II second-order section over channels; updates ``d1``/``d2`` in place."""
    if not primed[0]:
        for i in range(x.shape[0]):
            d1[i] = x[i] / (1.0 + a[1, i] + a[2, i])
            d2[i] = d1[i]
        primed[0] = True
    y = np.empty_like(x)
    for i in range(x.shape[0]):
        d0 = x[i] - a[1, i] * d1[i] - a[2, i] * d2[i]
        y[i] = b[0, i] * d0 + b[1, i] * d1[i] + b[2, i] * d2[i]
        d2[i] = d1[i]
        d1[i] = d0
    return y


@njit(cache=True)
def outer_step(accel_ref, accel_f, q_f, thrust_f, mass, lift_slope_force, max_thrust, max_tilt,
               span_weight):
    """Returns (attitude_ref, thrust, tilt, saturated)."""
    rot = quat_to_matrix(q_f)
    nose = rot[:, 0].copy()
    df = accel_ref - accel_f
    along = df[0] * nose[0] + df[1] * nose[1] + df[2] * nose[2]
    thrust = thrust_f + mass * along
    sat = False
    if thrust < 0.0 or thrust > max_thrust:
        thrust = min(max(thrust, 0.0), max_thrust)
        sat = True
    perp = df - along * nose
    if span_weight != 1.0:
        span = rot[:, 1].copy()
        perp = perp - (1.0 - span_weight) * (perp[0] * span[0] + perp[1] * span[1] + perp[2] * span[2]) * span
    mag = math.sqrt(perp[0] ** 2 + perp[1] ** 2 + perp[2] ** 2)
    if mag < 1e-12:
        return quat_normalize(q_f), thrust, 0.0, sat
    tilt = math.atan2(mass * mag, max(thrust_f + lift_slope_force, 1e-6))
    if tilt > max_tilt:
        tilt = max_tilt
        sat = True
    d = perp / mag
    axis = np.array([nose[1] * d[2] - nose[2] * d[1], nose[2] * d[0] - nose[0] * d[2],
                     nose[0] * d[1] - nose[1] * d[0]])
    axis /= math.sqrt(axis[0] ** 2 + axis[1] ** 2 + axis[2] ** 2)
    return quat_normalize(quat_mul(quat_exp(axis * tilt), q_f)), thrust, tilt, sat


@njit(cache=True)
def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@njit(cache=True)
def shape_attitude(q_tilted, heading, air, beta, accel_ref, gravity, max_bank):
    """Set the rotation about the thrust axis: heading in hover, bank and no sideslip when wing-borne."""
    nose = quat_to_matrix(q_tilted)[:, 0].copy()
    heading_ref = heading
    if beta > 0.0 and math.hypot(air[0], air[1]) > 1.0:
        heading_ref = heading + beta * _wrap(math.atan2(air[1], air[0]) - heading)
        az = math.atan2(nose[1], nose[0])
        turn = beta * _wrap(heading_ref - az)
        c, s = math.cos(turn), math.sin(turn)
        nose = np.array([c * nose[0] - s * nose[1], s * nose[0] + c * nose[1], nose[2]])
    span = np.array([-math.sin(heading_ref), math.cos(heading_ref), 0.0])
    if abs(span[0] * nose[0] + span[1] * nose[1]) > 0.99:
        return q_tilted
    q = _frame_quat(nose, span)
    if beta > 0.0:
        lateral = accel_ref[0] * span[0] + accel_ref[1] * span[1]
        bank = beta * min(max(math.atan2(lateral, gravity), -max_bank), max_bank)
        q = quat_mul(quat_exp(nose * bank), q)
    return q


# packed measurement: position, velocity, attitude, rate, specific force, air velocity
M_POS, M_VEL, M_Q, M_RATE, M_SPEC, M_AIR = 0, 3, 6, 10, 13, 16
N_MEAS = 19
# packed setpoint
S_POS, S_HAS_POS, S_VEL, S_HEADING, S_ATT, S_HAS_ATT, S_THRUST, S_HAS_THRUST, S_FLOOR = 0, 3, 4, 7, 8, 12, 13, 14, 15
N_SETPOINT = 16
# packed telemetry
T_ACC_REF, T_ACC_F, T_ATT_REF, T_ATT_F, T_RDR, T_RDF, T_THRUST, T_OUTER_SAT, T_ERR = 0, 3, 6, 10, 14, 17, 20, 21, 22
N_TELEMETRY = 23
N_SENSED = 10


@njit(cache=True)
def controller_step(meas, sp, fb, fa, fd1, fd2, primed, u_model, u_cmd, mem, eff, lim, health, sc):
    """One control cycle. ``mem`` holds the previous rate (3), a primed flag and the previous
    attitude (4); ``lim`` rows are weights, lower, upper and rate limits."""
    n = u_cmd.shape[0]
    nm = n - 4
    dt = sc[DT]
    q = meas[M_Q:M_Q + 4].copy()
    rate = meas[M_RATE:M_RATE + 3].copy()
    air = meas[M_AIR:M_AIR + 3].copy()
    rot = quat_to_matrix(q)

    rate_dot = np.zeros(3)
    if mem[3] > 0.0:
        rate_dot = (rate - mem[:3]) / dt
    qs = q.copy()
    if mem[3] > 0.0 and qs @ mem[4:8] < 0.0:
        qs = -qs
    mem[:3] = rate
    mem[3] = 1.0
    mem[4:8] = qs
    accel = rot @ meas[M_SPEC:M_SPEC + 3]
    accel[2] += sc[GRAV]

    # actuator model driven by the previous command
    for i in range(nm):
        u_model[i] += sc[MOTOR_LAG] * (u_cmd[i] - u_model[i])
    for i in range(nm, n):
        u_model[i] += min(max(u_cmd[i] - u_model[i], -sc[FLAP_STEP]), sc[FLAP_STEP])

    # one filter bank: measurements, then the actuator model through each measurement filter
    sample = np.empty(N_SENSED + 3 * n)
    sample[:3] = rate_dot
    sample[3:6] = accel
    sample[6:10] = qs
    for k in range(3):
        sample[N_SENSED + k * n:N_SENSED + (k + 1) * n] = u_model
    out = biquad(sample, fb, fa, fd1, fd2, primed)
    rate_dot_f = out[:3].copy()
    accel_f = out[3:6].copy()
    q_f = quat_normalize(out[6:10].copy())
    u_fast = out[N_SENSED:N_SENSED + n].copy()
    u_slow = out[N_SENSED + n:N_SENSED + 2 * n].copy()
    u_outer = out[N_SENSED + 2 * n:].copy()
    thrust_outer = 0.0
    thrust_fast = 0.0
    for i in range(nm):
        if health[i]:
            thrust_outer += sc[T_MAX] * u_outer[i]
            thrust_fast += sc[T_MAX] * u_fast[i]

    airspeed = math.sqrt(air[0] ** 2 + air[1] ** 2 + air[2] ** 2)
    x = (airspeed - sc[BETA_LOW]) / (sc[BETA_HIGH] - sc[BETA_LOW])
    beta = 0.0 if x <= 0.0 else 1.0 if x >= 1.0 else x * x * (3.0 - 2.0 * x)

    accel_ref = np.zeros(3)
    if sp[S_HAS_POS] > 0.0:
        accel_ref = (sc[KP] * (sp[S_POS:S_POS + 3] - meas[M_POS:M_POS + 3])
                     + sc[KD] * (sp[S_VEL:S_VEL + 3] - meas[M_VEL:M_VEL + 3]))
    horiz = math.hypot(accel_ref[0], accel_ref[1])
    if horiz > sc[MAX_H_ACC]:
        accel_ref[0] *= sc[MAX_H_ACC] / horiz
        accel_ref[1] *= sc[MAX_H_ACC] / horiz
    accel_ref[2] = min(max(accel_ref[2], -sc[MAX_V_ACC]), sc[MAX_V_ACC])

    outer_sat = False
    if sp[S_HAS_ATT] > 0.0:
        att_ref = sp[S_ATT:S_ATT + 4].copy()
        if sp[S_HAS_THRUST] > 0.0:
            thrust_ref = sp[S_THRUST]
        else:
            # hold altitude by projecting the vertical demand onto the thrust axis
            up_share = max(-rot[2, 0], 0.3)
            thrust_ref = thrust_outer - sc[MASS] * (accel_ref[2] - accel_f[2]) / up_share
    else:
        q_dyn = 0.5 * sc[RHO] * airspeed * airspeed
        q_out, thrust_ref, _, outer_sat = outer_step(
            accel_ref, accel_f, q_f, thrust_outer, sc[MASS], beta * q_dyn * sc[WING_AREA] * sc[CL_ALPHA],
            sc[MAX_THRUST], sc[MAX_TILT], 1.0 - beta)
        att_ref = shape_attitude(q_out, sp[S_HEADING], air, beta, accel_ref, sc[GRAV], sc[MAX_BANK])
    thrust_ref = min(max(thrust_ref, sp[S_FLOOR], 0.0), sc[MAX_THRUST])

    e = quat_mul(quat_conj(q), att_ref)
    if e[0] < 0.0:
        e = -e
    rate_dot_ref = sc[KQ] * 2.0 * e[1:] - sc[KR] * rate

    nu = np.empty(4)
    nu[:3] = rate_dot_ref - rate_dot_f
    # body-x rate derivative is filtered slower; correct the increment to match
    for i in range(n):
        nu[0] += eff[0, i] * (u_slow[i] - u_fast[i])
    nu[3] = thrust_ref - thrust_fast
    lo = np.maximum(lim[1], u_cmd - lim[3] * dt)
    hi = np.maximum(np.minimum(lim[2], u_cmd + lim[3] * dt), lo)
    # the actuator preference only pays off wing-borne, where flaps are cheaper than differential thrust
    u_ref = u_fast + _null_space_step(eff, health, u_fast, nm, beta * sc[NULL_GAIN] * dt)
    u, sat = _allocate(eff, lim[0].copy(), health, u_ref, nu, lo, hi)
    u_cmd[:] = u

    tel = np.empty(N_TELEMETRY)
    tel[T_ACC_REF:T_ACC_REF + 3] = accel_ref
    tel[T_ACC_F:T_ACC_F + 3] = accel_f
    tel[T_ATT_REF:T_ATT_REF + 4] = att_ref
    tel[T_ATT_F:T_ATT_F + 4] = q_f
    tel[T_RDR:T_RDR + 3] = rate_dot_ref
    tel[T_RDF:T_RDF + 3] = rate_dot_f
    tel[T_THRUST] = thrust_ref
    tel[T_OUTER_SAT] = 1.0 if outer_sat else 0.0
    tel[T_ERR] = 2.0 * math.acos(min(1.0, abs(att_ref @ q)))
    return u, sat, tel
