"""Gentle-stall wing aerodynamics on eight panels with propeller wash.

Each wing half is split into a part inside its propellers' slipstream and a
clean part. The lift curve is linear up to stall, then blends over a few
degrees into a slowly falling plateau that merges with the flat-plate curve
at 90 degrees.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# index layout of the packed coefficient vector, see VehicleParams.aero_coefficients
CL0, CLA, A_STALL, BLEND, PLATEAU, CD0, K_IND, CD_PLATE, CL_FLAP = range(9)


@njit(cache=True)
def _smoothstep(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return x * x * (3.0 - 2.0 * x)


@njit(cache=True)
def _post_stall_cl(a, cl_stall, a_stall, plateau):
    """Post-stall lift for ``a`` in [a_stall, pi/2] on the positive side."""
    r = (a - a_stall) / (0.5 * math.pi - a_stall)
    c = math.cos(0.5 * math.pi * r)
    return (1.0 - r * r) * plateau * cl_stall * c * c + r * r * 2.0 * math.sin(a) * math.cos(a)


@njit(cache=True)
def cl_cd(alpha, coef):
    """Lift and drag coefficients at ``alpha`` rad in (-pi, pi]."""
    cl0, cla, a_s, blend = coef[CL0], coef[CLA], coef[A_STALL], coef[BLEND]
    flat_cl = 2.0 * math.sin(alpha) * math.cos(alpha)
    sin2 = math.sin(alpha) ** 2
    if abs(alpha) > 0.5 * math.pi:
        return flat_cl, coef[CD0] + coef[CD_PLATE] * sin2
    cl_lin = cl0 + cla * alpha
    cd_lin = coef[CD0] + coef[K_IND] * cl_lin * cl_lin
    a = abs(alpha)
    if a <= a_s:
        return cl_lin, cd_lin
    # negative angles mirror the stall shape around the lift at -a_stall
    sign = 1.0 if alpha > 0.0 else -1.0
    cl_stall = cl0 + cla * sign * a_s
    post = sign * _post_stall_cl(a, sign * cl_stall, a_s, coef[PLATEAU])
    w = _smoothstep((a - a_s) / blend)
    cl = (1.0 - w) * cl_lin + w * post
    cd = (1.0 - w) * cd_lin + w * (coef[CD0] + coef[CD_PLATE] * sin2)
    return cl, cd


def lift_coefficient(alpha_deg, coef=None) -> float:
    """Lift coefficient at ``alpha_deg`` degrees in [-180, 180]."""
    if coef is None:
        from .params import VehicleParams
        coef = VehicleParams().aero_coefficients()
    return cl_cd(math.radians(alpha_deg), coef)[0]


def drag_coefficient(alpha_deg, coef=None) -> float:
    if coef is None:
        from .params import VehicleParams
        coef = VehicleParams().aero_coefficients()
    return cl_cd(math.radians(alpha_deg), coef)[1]


@njit(cache=True)
def aero_kernel(v_air, omega, wash, flaps, pos, area, half, washed, q_scale,
                coef, rho, fuselage_cda):
    """Body-frame aerodynamic force and moment.

    ``v_air`` is the body velocity relative to the air, ``wash`` the slipstream
    speed behind each wing half and ``flaps`` the normalized deflections.
    """
    force = np.zeros(3)
    moment = np.zeros(3)
    for i in range(pos.shape[0]):
        rx, ry, rz = pos[i, 0], pos[i, 1], pos[i, 2]
        u = v_air[0] + omega[1] * rz - omega[2] * ry
        w = v_air[2] + omega[0] * ry - omega[1] * rx
        if washed[i] > 0.0:
            u += wash[half[i]]
        v2 = u * u + w * w
        if v2 < 1e-12:
            continue
        speed = math.sqrt(v2)
        alpha = math.atan2(w, u)
        cl, cd = cl_cd(alpha, coef)
        ca = math.cos(alpha)
        cl += coef[CL_FLAP] * flaps[half[i]] * ca * ca
        qs = 0.5 * rho * v2 * area[i] * q_scale[i]
        fx = qs * (cl * w - cd * u) / speed
        fz = qs * (-cl * u - cd * w) / speed
        force[0] += fx
        force[2] += fz
        moment[0] += ry * fz
        moment[1] += rz * fx - rx * fz
        moment[2] += -ry * fx
    for k in range(3):
        force[k] -= 0.5 * rho * fuselage_cda[k] * abs(v_air[k]) * v_air[k]
    return force, moment


def aero_wrench(state, wind, surface_deflections, params, wash=None):
    """Aerodynamic force and moment (body frame) for a vehicle state.

    ``wind`` is the world-frame air velocity. ``wash`` gives the slipstream
    speed per wing half; omit it for unpowered flight.
    """
    from .rotation import quat_to_matrix
    rot = quat_to_matrix(np.asarray(state.attitude, dtype=float))
    v_air = rot.T @ (np.asarray(state.velocity, dtype=float) - np.asarray(wind, dtype=float))
    p = params.panels
    force, moment = aero_kernel(
        v_air, np.asarray(state.rate, dtype=float),
        np.zeros(4) if wash is None else np.asarray(wash, dtype=float),
        np.asarray(surface_deflections, dtype=float),
        p["position"], p["area"], p["half"], p["washed"], p["q_scale"],
        params.aero_coefficients(), params.air_density, np.array(params.fuselage_cda_m2),
    )
    return force, moment
