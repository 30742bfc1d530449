import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dogfight.airframe import (
    G, AirData, AircraftConfig, BodyState, ControlSurfaces, aero_forces_moments, air_data,
    default_aircraft, density, derivatives, euler_rates, level_state, rotation_body_to_earth,
    speed_of_sound, step, thrust, trim_search, wrap_angle,
)
from dogfight.errors import NoConvergenceError, SingularityError, TableError, ZeroVelocityError
from dogfight.tables import uniform_tables

FAST = settings(max_examples=60, deadline=None)
angle = st.floats(-math.pi, math.pi, allow_nan=False)
pitch = st.floats(math.radians(-85), math.radians(85), allow_nan=False)


@pytest.fixture(scope="module")
def vacuum():
    return uniform_tables(0.0, thrust=0.0)


@pytest.fixture(scope="module")
def trimmed():
    return trim_search(5000.0, 0.6)


def energy(s, mass):
    return 0.5 * mass * float(s.vel_body @ s.vel_body) + mass * G * s.altitude


# ---------------------------------------------------------------- rotation

def test_rotation_identity():
    assert np.allclose(rotation_body_to_earth([0, 0, 0]), np.eye(3), atol=0, rtol=0)


def test_rotation_pure_yaw_maps_body_x_to_earth_y():
    R = rotation_body_to_earth([0, 0, math.pi / 2])
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_rotation_example_orthonormal():
    R = rotation_body_to_earth([0.1, 0.2, 0.3])
    assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12


@FAST
@given(angle, pitch, angle)
def test_rotation_orthonormal_with_unit_determinant(phi, theta, psi):
    R = rotation_body_to_earth([phi, theta, psi])
    assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- Euler kinematics

def test_euler_rates_pure_roll():
    assert np.allclose(euler_rates([0, 0, 0], [0.1, 0, 0]), [0.1, 0, 0])


def test_euler_rates_pure_pitch():
    assert np.allclose(euler_rates([0, 0, 0], [0, 0.2, 0]), [0, 0.2, 0])


def test_euler_rates_banked_pitch_rate():
    got = euler_rates([math.pi / 4, 0, 0], [0, 1, 0])
    assert np.allclose(got, [0, math.cos(math.pi / 4), math.sin(math.pi / 4)], atol=1e-15)


def test_euler_rates_singular_pitch():
    with pytest.raises(SingularityError):
        euler_rates([0, math.pi / 2, 0], [0, 1, 0])


# ---------------------------------------------------------------- air data

def test_air_data_axial_flow():
    ad = air_data([100, 0, 0], 5000)
    assert (ad.V, ad.alpha, ad.beta) == (100, 0, 0)
    assert ad.mach == pytest.approx(100 / speed_of_sound(5000))
    assert ad.qbar == pytest.approx(0.5 * density(5000) * 100 ** 2)


def test_air_data_alpha():
    assert math.degrees(air_data([100, 0, 10], 5000).alpha) == pytest.approx(5.7106, abs=1e-4)


def test_air_data_beta():
    ad = air_data([100, 10, 0], 5000)
    assert math.degrees(ad.beta) == pytest.approx(math.degrees(math.asin(10 / math.sqrt(10100))))
    assert math.degrees(ad.beta) == pytest.approx(5.7106, abs=1e-3)


def test_air_data_zero_velocity():
    with pytest.raises(ZeroVelocityError):
        air_data([0, 0, 0], 1000)


def test_standard_atmosphere_sea_level():
    assert density(0.0) == pytest.approx(1.225, rel=1e-4)
    assert speed_of_sound(0.0) == pytest.approx(340.29, rel=1e-4)
    # isothermal above the tropopause
    assert speed_of_sound(12000) == pytest.approx(speed_of_sound(15000))


@FAST
@given(st.floats(1.0, 600.0), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
       st.floats(0.0, 15000.0))
def test_air_data_round_trip(V, alpha, beta, alt):
    v = V * np.array([math.cos(alpha) * math.cos(beta), math.sin(beta),
                      math.sin(alpha) * math.cos(beta)])
    ad = air_data(v, alt)
    assert ad.V == pytest.approx(V, abs=1e-10 * V)
    assert abs(ad.alpha - alpha) < 1e-10
    assert abs(ad.beta - beta) < 1e-10
    assert ad.qbar >= 0


# ---------------------------------------------------------------- aerodynamics and thrust

def test_aero_vacuum_is_zero():
    ad = AirData(200.0, 0.05, 0.01, 0.6, 0.0)
    f, m = aero_forces_moments(ad, ControlSurfaces(0.5, 3, 2, 1), [0.1, 0.1, 0.1])
    assert np.all(f == 0) and np.all(m == 0)


def test_aero_unit_coefficient_hand_evaluation():
    base = default_aircraft()
    cfg = AircraftConfig(base.mass, base.inertia, 27.87, base.span, base.chord, base.lower,
                         base.upper, base.rate)
    ad = AirData(200.0, 0.05, 0.0, 0.6, 1000.0)
    f, m = aero_forces_moments(ad, ControlSurfaces(), [0, 0, 0], cfg, uniform_tables(1.0))
    assert f[0] == pytest.approx(27870.0)
    assert f[2] == pytest.approx(27870.0)
    assert m[0] == pytest.approx(27870.0 * cfg.span)
    assert m[1] == pytest.approx(27870.0 * cfg.chord)


def test_aero_linear_in_dynamic_pressure():
    s = ControlSurfaces(0.5, -2.0, 1.0, 3.0)
    omega = [0.1, -0.05, 0.02]
    f1, m1 = aero_forces_moments(AirData(200, 0.1, 0.05, 0.6, 5000.0), s, omega)
    f2, m2 = aero_forces_moments(AirData(200, 0.1, 0.05, 0.6, 10000.0), s, omega)
    assert np.allclose(f2, 2 * f1, rtol=1e-14) and np.allclose(m2, 2 * m1, rtol=1e-14)


def test_aero_clamping_reported():
    diag = []
    aero_forces_moments(AirData(200, math.radians(70), 0.0, 0.6, 5000.0), ControlSurfaces(),
                        [0, 0, 0], diagnostics=diag)
    assert diag and "clamped" in diag[0]


def test_drag_opposes_motion_and_lift_up_at_positive_alpha():
    v = np.array([200, 0, 200 * math.tan(0.1)])
    f, _ = aero_forces_moments(air_data(v, 5000), ControlSurfaces(), [0, 0, 0])
    # the resistive force is subtracted, so drag is its component along the velocity
    assert f @ v / np.linalg.norm(v) > 0
    assert f[2] > 0


def test_thrust_idle_nonnegative():
    assert thrust(0.0, 5000, 0.6) >= 0


@FAST
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 15000), st.floats(0, 1))
def test_thrust_monotone_in_throttle(a, b, alt, mach):
    lo, hi = sorted((a, b))
    assert thrust(hi, alt, mach) >= thrust(lo, alt, mach)


def test_thrust_full_power_sea_level_static_matches_table():
    # first value row of the packaged maximum-power deck
    assert thrust(1.0, 0.0, 0.0) == pytest.approx(88964.4)


# ---------------------------------------------------------------- configuration

def test_aircraft_config_validation():
    base = default_aircraft()
    with pytest.raises(ValueError):
        AircraftConfig(base.mass, -base.inertia, base.wing_area, base.span, base.chord,
                       base.lower, base.upper, base.rate)
    with pytest.raises(ValueError):
        AircraftConfig(base.mass, base.inertia, 0.0, base.span, base.chord, base.lower,
                       base.upper, base.rate)


def test_aircraft_file_missing_key(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("mass = 1000\n")
    with pytest.raises(TableError):
        AircraftConfig.from_file(p)


# ---------------------------------------------------------------- derivatives

def test_free_fall_level(vacuum):
    s = level_state(5000, 0.5)
    rates = derivatives(s, tables=vacuum)
    assert np.allclose(rates[3:6], [0, 0, G], atol=1e-12)
    assert np.allclose(rates[6:], 0, atol=1e-12)


def test_free_fall_pitched(vacuum):
    s = BodyState([0, 0, -5000], [150, 0, 0], [0, math.pi / 4, 0])
    rates = derivatives(s, tables=vacuum)
    assert rates[5] == pytest.approx(G * math.cos(math.pi / 4), rel=1e-12)
    assert rates[3] == pytest.approx(-G * math.sin(math.pi / 4), rel=1e-12)


def test_position_rate_is_earth_velocity():
    s = BodyState([0, 0, -5000], [200, 5, 10], [0.2, 0.1, 1.0], [0.01, 0.02, 0.03],
                  ControlSurfaces(0.5, -2, 0, 0))
    rates = derivatives(s)
    assert np.allclose(rates[:3], rotation_body_to_earth(s.euler) @ s.vel_body)


def test_trimmed_rates_small(trimmed):
    state, _ = trimmed
    assert np.linalg.norm(derivatives(state)[3:]) < 1e-3


# ---------------------------------------------------------------- integration

def test_zero_dt_keeps_state(trimmed):
    state, surf = trimmed
    nxt = step(state, surf, 0.0)
    assert np.allclose(nxt.as_array(), state.as_array(), rtol=0, atol=1e-12)


def test_rate_limited_actuator(trimmed):
    state, surf = trimmed
    cmd = ControlSurfaces(surf.throttle, 25.0, 21.5, -30.0)
    nxt = step(state, cmd, 0.01)
    rate = default_aircraft().rate
    assert nxt.surfaces.elevator - surf.elevator == pytest.approx(rate[1] * 0.01)
    assert nxt.surfaces.aileron == pytest.approx(rate[2] * 0.01)
    assert nxt.surfaces.rudder == pytest.approx(-rate[3] * 0.01)


@FAST
@given(st.lists(st.floats(-100, 100), min_size=4, max_size=4),
       st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_actuators_always_within_bounds(command, start_frac):
    ac = default_aircraft()
    start = ac.lower + np.asarray(start_frac) * (ac.upper - ac.lower)
    s = level_state(5000, 0.6, surfaces=ControlSurfaces.from_array(start))
    nxt = step(s, ControlSurfaces.from_array(command), 0.5)
    got = nxt.surfaces.as_array()
    assert np.all(got >= ac.lower) and np.all(got <= ac.upper)
    assert np.all(np.abs(got - start) <= ac.rate * 0.5 + 1e-12)


def test_step_refinement(trimmed):
    state, surf = trimmed
    # off trim so the path curves and the integrator has work to do
    state = BodyState(state.pos, state.vel_body + [0, 3, 5], [0.2, 0.05, 0.4], [0.02, 0.03, -0.01],
                      surf)
    coarse, fine = state, state
    for _ in range(100):
        coarse = step(coarse, surf, 0.01)
    for _ in range(1000):
        fine = step(fine, surf, 0.001)
    assert np.linalg.norm(coarse.pos - fine.pos) < 0.1


def test_ballistic_energy_conserved(vacuum):
    mass = default_aircraft().mass
    s = BodyState([0, 0, -5000], [220, 10, -30], [0.3, 0.2, 1.0])
    e0 = energy(s, mass)
    for _ in range(1000):
        s = step(s, s.surfaces, 0.01, tables=vacuum)
    assert abs(energy(s, mass) - e0) / e0 < 1e-6


def test_derivatives_match_midpoint_difference(trimmed):
    state, surf = trimmed
    s = BodyState(state.pos, state.vel_body + [0, 3, 5], [0.2, 0.05, 0.4], [0.02, 0.03, -0.01],
                  surf)
    errs = []
    for h in (0.02, 0.01):
        mid = step(s, surf, h)
        end = step(s, surf, 2 * h)
        fd = (end.as_array()[:12] - s.as_array()[:12]) / (2 * h)
        errs.append(np.abs(fd - derivatives(mid)).max())
    # second order: halving h quarters the error
    assert errs[1] < 0.35 * errs[0]


def test_trim_low_residual():
    state, surf = trim_search(5000.0, 0.5)
    assert np.linalg.norm(derivatives(state)[3:]) < 1e-3
    ac = default_aircraft()
    assert np.all(surf.as_array() >= ac.lower) and np.all(surf.as_array() <= ac.upper)


def test_trim_holds_altitude(trimmed):
    state, surf = trimmed
    s = state
    for _ in range(1000):
        s = step(s, surf, 0.01)
    assert abs(s.altitude - state.altitude) < 50


def test_trim_out_of_envelope():
    with pytest.raises(NoConvergenceError):
        trim_search(5000.0, 5.0)


@FAST
@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
