"""Vehicle parameters and the derived geometry used by the dynamics kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np


N_MOTORS = 12
N_SURFACES = 4
N_ACTUATORS = N_MOTORS + N_SURFACES

# Wing halves in motor order: front-left, front-right, back-left, back-right.
# Motors are numbered tip to root on each half.
WING_HALVES = ("front_left", "front_right", "back_left", "back_right")


@dataclass(frozen=True)
class VehicleParams:
    mass_kg: float = 10.0
    inertia_kgm2: tuple[float, float, float] = (0.8, 1.1, 1.5)
    gravity: float = 9.81
    air_density: float = 1.225

    # tandem wing
    wing_area_m2: float = 0.6
    front_wing_fraction: float = 0.45
    front_wing_x_m: float = 0.3
    back_wing_x_m: float = -0.3
    front_wing_z_m: float = -0.2  # front wing sits on the back side so its motors pitch the nose down
    back_wing_z_m: float = 0.2
    panel_span_y_m: float = 0.6

    # propulsion
    motor_span_m: tuple[float, float, float] = (0.9, 0.6, 0.3)
    max_thrust_n: float = 18.0
    motor_time_constant_s: float = 0.04
    torque_ratio: float = 0.015
    prop_disc_area_m2: float = 0.0856
    hover_efficiency: float = 0.408
    cruise_efficiency: float = 0.486
    efficiency_ref_speed: float = 20.0

    # control surfaces, one per wing half
    flap_lift_coefficient: float = 1.0
    flap_max_deflection_rad: float = 0.35
    servo_rate_limit_rad_s: float = 6.0

    # lift and drag
    cl0: float = 0.3
    cl_alpha: float = 4.8
    alpha_stall_deg: float = 15.0
    stall_blend_deg: float = 4.0
    post_stall_plateau: float = 0.95
    cd0: float = 0.03
    induced_drag_k: float = 0.06
    flat_plate_cd: float = 1.28
    fuselage_cda_m2: tuple[float, float, float] = (0.01, 0.02, 0.02)
    downwash_factor: float = 0.9

    # propeller wash over the wing
    wash_gain: float = 1.5
    wash_fraction: float = 0.5
    wash_lift_factor: float = 0.15
    wash_lift_height_m: float = 1.0

    # ground contact
    ground_pitch_deg: float = -55.0
    tail_contact_x_m: float = -0.45
    gear_contact_x_m: float = 0.25
    contact_half_width_m: float = 0.3
    contact_stiffness: float = 2.0e4
    contact_damping: float = 300.0
    friction_static: float = 0.5
    friction_kinetic: float = 0.4

    # electrical loads besides the motors
    payload_power_w: float = 60.0
    overhead_power_w: float = 40.0

    def __post_init__(self):
        if self.mass_kg <= 0:
            raise ValueError("mass_kg must be positive")
        if min(self.inertia_kgm2) <= 0:
            raise ValueError("inertia must be positive definite")
        if not -60.0 <= self.ground_pitch_deg <= -55.0:
            raise ValueError("ground_pitch_deg must lie in [-60, -55]")

    @property
    def weight(self) -> float:
        return self.mass_kg * self.gravity

    @property
    def inertia(self) -> np.ndarray:
        return np.array(self.inertia_kgm2, dtype=float)

    @cached_property
    def motor_positions(self) -> np.ndarray:
        """(12, 3) body-frame motor positions."""
        rows = []
        for half in WING_HALVES:
            x = self.front_wing_x_m if half.startswith("front") else self.back_wing_x_m
            z = self.front_wing_z_m if half.startswith("front") else self.back_wing_z_m
            side = -1.0 if half.endswith("left") else 1.0
            rows += [(x, side * y, z) for y in self.motor_span_m]
        return np.array(rows)

    @cached_property
    def motor_spin(self) -> np.ndarray:
        """Reaction-torque sign about body x per motor; alternating, balanced."""
        pattern = (1.0, -1.0, 1.0)
        signs = []
        for k in range(4):
            flip = -1.0 if k in (1, 2) else 1.0
            signs += [flip * s for s in pattern]
        return np.array(signs)

    @cached_property
    def contact_points(self) -> np.ndarray:
        """(4, 3) body-frame ground contact points: two tail points, two gear points.

        The gear depth follows from the ground pitch so that the vehicle rests
        on all four points at that attitude.
        """
        rest_elevation = math.radians(90.0 + self.ground_pitch_deg)
        gear_z = (self.gear_contact_x_m - self.tail_contact_x_m) * math.tan(rest_elevation)
        w = self.contact_half_width_m
        return np.array([
            (self.tail_contact_x_m, -w, 0.0),
            (self.tail_contact_x_m, w, 0.0),
            (self.gear_contact_x_m, -w, gear_z),
            (self.gear_contact_x_m, w, gear_z),
        ])

    @cached_property
    def panels(self) -> dict[str, np.ndarray]:
        """Eight wing panels: each wing half split into prop-washed and clean parts."""
        pos, area, half, washed, q_scale = [], [], [], [], []
        for k, name in enumerate(WING_HALVES):
            front = name.startswith("front")
            x = self.front_wing_x_m if front else self.back_wing_x_m
            z = self.front_wing_z_m if front else self.back_wing_z_m
            y = (-1.0 if name.endswith("left") else 1.0) * self.panel_span_y_m
            frac = self.front_wing_fraction if front else 1.0 - self.front_wing_fraction
            s_half = 0.5 * self.wing_area_m2 * frac
            for is_washed in (1.0, 0.0):
                pos.append((x, y, z))
                area.append(s_half * (self.wash_fraction if is_washed else 1.0 - self.wash_fraction))
                half.append(k)
                washed.append(is_washed)
                # the back wing flies in the front wing's downwash outside the prop wash
                q_scale.append(1.0 if front or is_washed else self.downwash_factor)
        return {
            "position": np.array(pos), "area": np.array(area),
            "half": np.array(half, dtype=np.int64), "washed": np.array(washed),
            "q_scale": np.array(q_scale),
        }

    def aero_coefficients(self) -> np.ndarray:
        return np.array([
            self.cl0, self.cl_alpha, math.radians(self.alpha_stall_deg),
            math.radians(self.stall_blend_deg), self.post_stall_plateau,
            self.cd0, self.induced_drag_k, self.flat_plate_cd, self.flap_lift_coefficient,
        ])

    def ground_attitude_pitch(self) -> float:
        """Body pitch above the horizon when resting on the ground, rad."""
        return math.radians(90.0 + self.ground_pitch_deg)


def reference_vehicle_path() -> Path:
    return Path(str(resources.files("h2vtol.data").joinpath("vehicle.cfg")))
