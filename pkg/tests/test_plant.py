import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numba import njit

from h2vtol.plant import (
    IntegrationFault,
    Plant,
    VehicleParams,
    VehicleState,
    WindModel,
    aero_wrench,
    kinetic_energy,
    lift_coefficient,
    motor_thrust,
    resting_state,
    step_dynamics,
    thrust_lag,
    trim_level_flight,
)
from h2vtol.plant.dynamics import rigid_body_kernel
from h2vtol.plant.params import N_ACTUATORS
from h2vtol.plant.rotation import (
    angle_between,
    hover_attitude,
    quat_from_axis_angle,
    quat_from_euler,
    quat_from_matrix,
    quat_mul,
    quat_to_matrix,
)

PARAMS = VehicleParams()
PARAMS_TRANSITION_SPEED = 14.0  # m/s, where the wing is still crossing the stall


# rotations

@given(st.floats(-3.0, 3.0), st.floats(-1.5, 1.5), st.floats(-3.0, 3.0))
def test_quaternion_matrix_round_trip(roll, pitch, yaw):
    q = quat_from_euler(roll, pitch, yaw)
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)
    r = quat_to_matrix(q)
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert angle_between(quat_from_matrix(r), q) < 1e-6


def test_hover_attitude_points_nose_up():
    r = quat_to_matrix(hover_attitude(0.3))
    np.testing.assert_allclose(r[:, 0], [0.0, 0.0, -1.0], atol=1e-12)


def test_quaternion_composition_matches_matrices():
    a = quat_from_axis_angle([1.0, 2.0, 0.5], 0.7)
    b = quat_from_axis_angle([-0.3, 0.1, 1.0], -1.2)
    np.testing.assert_allclose(quat_to_matrix(quat_mul(a, b)), quat_to_matrix(a) @ quat_to_matrix(b), atol=1e-12)


# aerodynamics

def test_lift_linear_region():
    # oracle: 0.3 + 4.8 * 5 deg in radians
    assert 0.3 + 4.8 * math.radians(5.0) == pytest.approx(0.719, abs=5e-4)
    assert lift_coefficient(5.0) == pytest.approx(0.719, abs=5e-4)


def test_gentle_stall():
    stall = PARAMS.alpha_stall_deg
    assert lift_coefficient(stall + 10.0) / lift_coefficient(stall) >= 0.85


def test_flat_plate_at_right_angle():
    assert lift_coefficient(90.0) == pytest.approx(0.0, abs=1e-12)
    assert lift_coefficient(-90.0) == pytest.approx(0.0, abs=1e-12)


def test_lift_monotone_up_to_stall():
    alphas = np.arange(-10.0, PARAMS.alpha_stall_deg - 2.0, 0.05)
    cl = np.array([lift_coefficient(a) for a in alphas])
    assert np.all(np.diff(cl) > 0.0)


def test_lift_continuous_and_smooth():
    alphas = np.arange(-90.0, 90.0, 0.01)
    cl = np.array([lift_coefficient(a) for a in alphas])
    slope = np.diff(cl) / 0.01
    assert np.abs(np.diff(cl)).max() < 2e-3
    # no kinks: the slope itself changes by a bounded amount between samples
    assert np.abs(np.diff(slope)).max() < 0.05


def _level_state(speed, alpha_deg):
    a = math.radians(alpha_deg)
    return VehicleState(velocity=np.array([speed, 0.0, 0.0]), attitude=quat_from_euler(0.0, a, 0.0))


def test_zero_airspeed_gives_zero_wrench():
    f, m = aero_wrench(VehicleState(attitude=hover_attitude()), np.zeros(3), np.zeros(4), PARAMS)
    assert np.all(f == 0.0) and np.all(m == 0.0)


def test_drag_opposes_descent_in_hover_attitude():
    s = VehicleState(velocity=np.array([0.0, 0.0, 3.0]), attitude=hover_attitude())
    f, _ = aero_wrench(s, np.zeros(3), np.zeros(4), PARAMS)
    world = quat_to_matrix(s.attitude) @ f
    assert world[2] < 0.0  # moving down, pushed up
    assert world @ s.velocity < 0.0


def test_wind_equals_opposite_motion():
    s = _level_state(15.0, 4.0)
    still = VehicleState(attitude=s.attitude)
    f1, m1 = aero_wrench(s, np.zeros(3), np.zeros(4), PARAMS)
    f2, m2 = aero_wrench(still, np.array([-15.0, 0.0, 0.0]), np.zeros(4), PARAMS)
    np.testing.assert_allclose(f1, f2, atol=1e-12)
    np.testing.assert_allclose(m1, m2, atol=1e-12)


def _sweep_steps(speed):
    forces = []
    for a in np.arange(0.0, 35.0, 0.1):
        f, _ = aero_wrench(_level_state(speed, a), np.zeros(3), np.zeros(4), PARAMS)
        forces.append(quat_to_matrix(quat_from_euler(0.0, math.radians(a), 0.0)) @ f)
    return np.linalg.norm(np.diff(forces, axis=0), axis=1)


def test_alpha_sweep_force_steps_bounded_at_transition_speed():
    steps = _sweep_steps(PARAMS_TRANSITION_SPEED)
    assert steps.max() < 0.01 * PARAMS.weight


def test_alpha_sweep_no_jump_at_stall():
    # at cruise speed the lift slope alone moves more than 1 % of weight per 0.1 deg;
    # crossing the stall may only add the drag rise on top of the linear-region step
    steps = _sweep_steps(20.0)
    linear = steps[: int(10.0 / 0.1)]
    assert steps.max() <= 1.1 * linear.max()


def test_cruise_trim_lift():
    t = trim_level_flight(PARAMS, 20.0)
    # oracle: vertical balance with the thrust line tilted by alpha
    assert t.lift == pytest.approx(PARAMS.weight - t.thrust * math.sin(t.alpha), rel=1e-9)
    assert t.lift == pytest.approx(PARAMS.weight, rel=0.02)
    assert 0.0 < math.degrees(t.alpha) < 10.0


def test_cruise_trim_power():
    # flight share of the 550 W cruise load after 60 W payload and 40 W overhead
    assert trim_level_flight(PARAMS, 20.0).motor_power == pytest.approx(450.0, rel=0.05)


# motors

def test_motor_off():
    out = motor_thrust(0.0, 0.0)
    assert out == {"thrust": 0.0, "electrical_power": 0.0}


def test_hover_power():
    per_motor = PARAMS.weight / 12 / PARAMS.max_thrust_n
    total = 12 * motor_thrust(per_motor, 0.0)["electrical_power"]
    assert total == pytest.approx(1500.0, rel=0.10)


def test_motor_command_range():
    with pytest.raises(ValueError):
        motor_thrust(1.2, 0.0)


def test_windmilling_descent_draws_no_power():
    plant = Plant(PARAMS)
    s = VehicleState(position=np.array([0.0, 0.0, -100.0]), velocity=np.array([20.0, 0.0, 3.0]),
                     attitude=quat_from_euler(0.0, math.radians(-8.0), 0.0))
    _, out = plant.step(s, np.zeros(N_ACTUATORS), np.zeros(3), 0.002)
    assert out.motor_power == 0.0


def test_thrust_lag_exact_first_order():
    t = 0.0
    for _ in range(20):
        t = thrust_lag(t, 10.0, 0.002, 0.04)
    assert float(t) == pytest.approx(10.0 * (1.0 - math.exp(-0.04 / 0.04)), rel=1e-12)


# rigid body

def _airborne(**kw):
    return VehicleState(position=np.array([0.0, 0.0, -1000.0]), **kw)


def test_free_fall_one_second():
    s = _airborne()
    for _ in range(500):
        s = step_dynamics(s, PARAMS, (np.zeros(3), np.zeros(3)), 0.002)
    assert s.velocity[2] == pytest.approx(9.81, abs=1e-6)
    assert s.time == pytest.approx(1.0)


def test_hover_equilibrium():
    s = _airborne(attitude=hover_attitude())
    s1 = step_dynamics(s, PARAMS, (np.array([PARAMS.weight, 0.0, 0.0]), np.zeros(3)), 0.002)
    np.testing.assert_allclose(s1.velocity, 0.0, atol=1e-12)


def test_single_axis_moment():
    s = _airborne()
    moment, tau = 2.0, 1.5
    for _ in range(750):
        s = step_dynamics(s, PARAMS, (np.zeros(3), np.array([moment, 0.0, 0.0])), 0.002)
    assert s.rate[0] == pytest.approx(moment * tau / PARAMS.inertia_kgm2[0], abs=1e-6)
    assert abs(s.rate[1]) < 1e-12 and abs(s.rate[2]) < 1e-12


def test_step_rejects_bad_input():
    with pytest.raises(ValueError):
        step_dynamics(_airborne(), PARAMS, (np.zeros(3), np.zeros(3)), 0.02)
    with pytest.raises(IntegrationFault):
        step_dynamics(_airborne(), PARAMS, (np.array([np.nan, 0.0, 0.0]), np.zeros(3)), 0.002)


@njit
def _tumble(q, w, inertia, steps, dt):
    pos = np.array([0.0, 0.0, -1000.0])
    vel = np.zeros(3)
    contacts = np.zeros((0, 3))
    anchors = np.zeros((0, 2))
    worst = 0.0
    for _ in range(steps):
        pos, vel, q, w, anchors, _ = rigid_body_kernel(pos, vel, q, w, np.zeros(3), np.zeros(3), 10.0,
                                                        inertia, 0.0, dt, contacts, anchors,
                                                        1.0, 1.0, 0.5, 0.4)
        worst = max(worst, abs(math.sqrt(q @ q) - 1.0))
    return q, w, worst


def test_quaternion_norm_over_a_million_steps():
    w0 = np.array([1.5, -0.7, 2.2])
    _, _, worst = _tumble(quat_from_euler(0.2, 0.3, 0.4), w0, PARAMS.inertia, 1_000_000, 0.002)
    assert worst < 1e-9


def test_torque_free_tumbling_conserves_energy():
    w0 = np.array([0.3, 2.0, 0.4])  # near the unstable intermediate axis
    q, w, _ = _tumble(quat_from_euler(0.0, 0.0, 0.0), w0, PARAMS.inertia, 60_000, 0.001)
    e0 = 0.5 * w0 @ (PARAMS.inertia * w0)
    e1 = 0.5 * w @ (PARAMS.inertia * w)
    assert abs(e1 / e0 - 1.0) < 1e-3
    h0 = np.linalg.norm(PARAMS.inertia * w0)
    h1 = np.linalg.norm(PARAMS.inertia * w)
    assert abs(h1 / h0 - 1.0) < 1e-3


def test_free_flight_mechanical_energy():
    s = _airborne(velocity=np.array([5.0, -2.0, -10.0]), rate=np.array([0.5, 1.0, -0.3]))

    def energy(s):
        return kinetic_energy(s, PARAMS) + PARAMS.weight * s.altitude

    e0 = energy(s)
    for _ in range(2000):
        s = step_dynamics(s, PARAMS, (np.zeros(3), np.zeros(3)), 0.001)
    assert abs(energy(s) / e0 - 1.0) < 1e-3


# ground contact

def test_rest_on_ground_with_motors_off():
    plant = Plant(PARAMS)
    s0 = resting_state(PARAMS)
    s = s0
    for _ in range(2500):
        s, _ = plant.step(s, np.zeros(N_ACTUATORS), np.zeros(3), 0.002)
    assert np.linalg.norm(s.position - s0.position) < 1e-3
    assert angle_between(s.attitude, s0.attitude) < math.radians(0.1)
    assert np.linalg.norm(s.velocity) < 1e-3


@pytest.mark.parametrize("pitch", [-55.0, -60.0])
def test_ground_pitch_configurable(pitch):
    p = VehicleParams(ground_pitch_deg=pitch)
    s = resting_state(p)
    nose = quat_to_matrix(s.attitude)[:, 0]
    # the nose sits ``pitch`` below vertical
    assert math.degrees(math.acos(-nose[2])) == pytest.approx(-pitch, abs=1e-9)


def test_ground_pitch_range_checked():
    with pytest.raises(ValueError):
        VehicleParams(ground_pitch_deg=-40.0)


# plant wrapper and wind

def test_reversed_motor_pushes_backwards():
    plant = Plant(PARAMS)
    plant.reverse_motor(0)
    u = np.zeros(N_ACTUATORS)
    u[:12] = 0.5
    s = _airborne(attitude=hover_attitude())
    for _ in range(200):
        s, out = plant.step(s, u, np.zeros(3), 0.002)
    assert out.thrust[0] < 0.0 and np.all(out.thrust[1:] > 0.0)


def test_plant_deterministic():
    def run():
        plant = Plant(PARAMS)
        wind = WindModel((0.0, -5.0, 0.0), 1.0, seed=3)
        s = resting_state(PARAMS)
        u = np.r_[np.full(12, 0.6), np.zeros(4)]
        for _ in range(500):
            s, _ = plant.step(s, u, wind.step(0.002), 0.002)
        return s
    a, b = run(), run()
    assert a.position.tobytes() == b.position.tobytes()
    assert a.attitude.tobytes() == b.attitude.tobytes()


def test_wind_statistics():
    w = WindModel((1.0, -10.0, 0.0), intensity=1.5, seed=11)
    samples = np.array([w.step(0.1) for _ in range(200_000)])
    np.testing.assert_allclose(samples.mean(axis=0), [1.0, -10.0, 0.0], atol=0.15)
    np.testing.assert_allclose(samples.std(axis=0), 1.5, rtol=0.1)


def test_calm_wind_is_constant():
    w = WindModel((2.0, 0.0, 0.0))
    assert np.all(w.step(0.01) == [2.0, 0.0, 0.0])
