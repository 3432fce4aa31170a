import numpy as np
import pytest
from hypothesis import given, seed

from conftest import make_spec, reference_shape, rotations, times, vec3
from hybrid_attitude.control import (ControllerSpec, ControllerState, JumpVariant, PlantParams, c_bounds,
                                     closed_loop_error_rate, control_input, coupling_bound, equilibria,
                                     in_jump_set, integral_rate, jump_map, u_hybrid, u_hybrid_integral,
                                     u_smooth, u_smooth_integral, validate_c)
from hybrid_attitude.errfun import Mode, ShapeParams, critical_points, e_total, psi_mode, psi_modes
from hybrid_attitude.errors import CTooLarge, ValidationError
from hybrid_attitude.sim import dynamics_rhs
from hybrid_attitude.so3 import frame_from_directions, hat, random_rotations
from hybrid_attitude.trajectory import DesiredTrajectory, reference_command
from oracles import C_FIRST, C_SECOND_B0, control_oracle

LAW_TOL = 1e-12
IDENTITY_TOL = 1e-10
J = np.diag([3.0, 2.0, 1.0])
PLANT = PlantParams(J)


def desired(t=1.0):
    p = reference_shape()
    return DesiredTrajectory(reference_command(), p.b1, p.b2).at(t)


def test_plant_validation():
    with pytest.raises(ValidationError):
        PlantParams(np.array([[1.0, 0.1, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(ValidationError):
        PlantParams(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValidationError):
        PlantParams(np.eye(2))
    with pytest.raises(ValidationError):
        PlantParams(J, [np.nan, 0, 0])
    assert PLANT.lambda_m == 1.0 and PLANT.lambda_M == 3.0


def test_spec_validation():
    with pytest.raises(ValidationError):
        make_spec(k_Omega=0.0)
    with pytest.raises(ValidationError):
        ControllerSpec("smooth-integral", reference_shape(), 4.42, 0.0, 0.04)
    with pytest.raises(ValidationError):
        ControllerSpec("hybrid-integral", reference_shape(), 4.42, 0.5, 0.0)
    with pytest.raises(ValueError):
        ControllerSpec("bang-bang", reference_shape(), 4.42)
    assert make_spec("hybrid").jump_variant is JumpVariant.PLAIN
    assert make_spec("hybrid-integral").jump_variant is JumpVariant.INTEGRAL


def test_c_candidates():
    first, second = c_bounds(make_spec(), PLANT, 0.0)
    assert first == pytest.approx(C_FIRST, rel=1e-12)
    assert first == pytest.approx(0.04446, abs=1e-5)
    assert second == pytest.approx(C_SECOND_B0, rel=1e-12)
    assert validate_c(make_spec(c=0.04), PLANT, 0.0) == pytest.approx(C_FIRST)
    with pytest.raises(CTooLarge) as info:
        validate_c(make_spec(c=0.045), PLANT, 0.0)
    assert "0.0444" in str(info.value) and "0.0497" in str(info.value)
    # the second candidate tends to zero as k_Omega grows
    assert c_bounds(make_spec(k_Omega=1e6), PLANT, 0.0)[1] < 1e-5


def test_coupling_bound():
    # 2J - tr(J) I = diag(0, -2, -4) has spectral norm 4
    assert coupling_bound(PLANT, 1.5) == pytest.approx(6.0)


def test_control_at_rest_on_desired_attitude():
    d = desired()
    for kind in ("smooth", "hybrid"):
        spec = make_spec(kind)
        u = u_smooth(d.R_d, d.R_d.T @ d.omega_d, d, spec, PLANT)
        # pure feedforward: a x J a + J R^T dw_d with a = R^T w_d
        a = d.R_d.T @ d.omega_d
        assert np.allclose(u, np.cross(a, J @ a) + J @ (d.R_d.T @ d.omega_d_dot), atol=LAW_TOL)


def test_static_command_gives_zero_input():
    from hybrid_attitude.trajectory import EulerCommand

    p = reference_shape()
    d = DesiredTrajectory(EulerCommand(), p.b1, p.b2).at(0.0)
    assert np.allclose(u_smooth(np.eye(3), np.zeros(3), d, make_spec(), PLANT), 0, atol=1e-12)


@seed(30)
@given(rotations, vec3, times)
def test_smooth_law_against_oracle(R, Omega, t):
    d, p = desired(t), reference_shape()
    expected = control_oracle(R, Omega, d.R_d, d.omega_d, d.omega_d_dot, p.b1, p.b2, 10, 11, 4.42, J)
    assert np.allclose(u_smooth(R, Omega, d, make_spec(), PLANT), expected, atol=LAW_TOL * 100)


@seed(31)
@given(rotations, vec3, vec3, times)
def test_hybrid_and_integral_laws_against_oracle(R, Omega, eI, t):
    d, p = desired(t), reference_shape()
    for m in Mode:
        e = e_total(m, R, d, p)
        expected = control_oracle(R, Omega, d.R_d, d.omega_d, d.omega_d_dot, p.b1, p.b2, 10, 11, 4.42, J, e=e)
        assert np.allclose(u_hybrid(R, Omega, d, m, make_spec("hybrid"), PLANT), expected, atol=1e-10)
        with_I = control_oracle(R, Omega, d.R_d, d.omega_d, d.omega_d_dot, p.b1, p.b2, 10, 11, 4.42, J,
                                e=e, kI=0.5, eI=eI)
        got = u_hybrid_integral(R, Omega, d, ControllerState(m, eI), make_spec("hybrid-integral"), PLANT)
        assert np.allclose(got, with_I, atol=1e-10)
    expected = control_oracle(R, Omega, d.R_d, d.omega_d, d.omega_d_dot, p.b1, p.b2, 10, 11, 4.42, J,
                              kI=0.5, eI=eI)
    got = u_smooth_integral(R, Omega, d, ControllerState(Mode.I, eI), make_spec("smooth-integral"), PLANT)
    assert np.allclose(got, expected, atol=1e-10)


def test_mode_one_reduces_to_smooth():
    d = desired()
    R, W = random_rotations(1, seed=2)[0], np.array([0.3, -0.2, 0.1])
    smooth = u_smooth(R, W, d, make_spec(), PLANT)
    assert np.array_equal(u_hybrid(R, W, d, Mode.I, make_spec("hybrid"), PLANT), smooth)
    zero = ControllerState(Mode.I, np.zeros(3))
    assert np.array_equal(u_smooth_integral(R, W, d, zero, make_spec("smooth-integral"), PLANT), smooth)
    assert np.array_equal(u_hybrid_integral(R, W, d, zero, make_spec("hybrid-integral"), PLANT), smooth)
    # with k_I = 0 the integral term drops out
    eI = ControllerState(Mode.II, [1.0, 2.0, 3.0])
    assert np.array_equal(u_hybrid_integral(R, W, d, eI, make_spec("hybrid", k_I=0.0), PLANT),
                          u_hybrid(R, W, d, Mode.II, make_spec("hybrid"), PLANT))


def test_expelling_term_vanishes_without_beta_and_gain():
    d = desired()
    p = ShapeParams.unchecked(k1=10.0, k2=0.0, alpha=1.9, beta=0.0, delta=1.0, b1=[1, 0, 0], b2=[0, 1, 0])
    spec = ControllerSpec("hybrid", p, 4.42)
    R, W = random_rotations(1, seed=3)[0], np.array([0.1, 0.2, 0.3])
    a = R.T @ d.omega_d
    ff = np.cross(a, J @ a) + J @ (R.T @ d.omega_d_dot)
    assert np.allclose(u_hybrid(R, W, d, Mode.III, spec, PLANT), ff - 4.42 * (W - a), atol=1e-14)


def test_control_input_dispatch():
    d = desired()
    R, W = random_rotations(1, seed=4)[0], np.zeros(3)
    cs = ControllerState(Mode.III, [0.1, 0, 0])
    assert np.array_equal(control_input(R, W, d, cs, make_spec("smooth"), PLANT), u_smooth(R, W, d, make_spec(), PLANT))
    spec = make_spec("hybrid-integral")
    assert np.array_equal(control_input(R, W, d, cs, spec, PLANT), u_hybrid_integral(R, W, d, cs, spec, PLANT))


def test_integral_rate():
    d = desired()
    spec = make_spec("smooth-integral")
    assert np.allclose(integral_rate(d.R_d, d.R_d.T @ d.omega_d, d, Mode.I, spec), 0, atol=1e-14)
    R, W = random_rotations(1, seed=5)[0], np.array([1.0, 0, 0])
    eW = W - R.T @ d.omega_d
    assert np.allclose(integral_rate(R, W, d, Mode.I, make_spec("smooth-integral", c=1e-300)), eW, atol=1e-14)
    hyb = make_spec("hybrid-integral")
    assert np.allclose(integral_rate(R, W, d, Mode.II, hyb), 0.04 * e_total(Mode.II, R, d, hyb.shape) + eW)


def test_jump_map_examples():
    d, p = desired(), reference_shape()
    assert jump_map(d.R_d, d, p) is Mode.I
    assert jump_map(frame_from_directions(d.r_d1, -d.r_d2, p.b1, p.b2), d, p) is Mode.II
    assert jump_map(frame_from_directions(-d.r_d1, d.r_d2, p.b1, p.b2), d, p) is Mode.III


def test_jump_set_examples():
    d, p = desired(), reference_shape()
    spec = make_spec("hybrid")
    W = d.R_d.T @ d.omega_d
    assert not in_jump_set(d.R_d, W, d, Mode.I, spec)
    R = frame_from_directions(d.r_d1, -d.r_d2, p.b1, p.b2)
    assert in_jump_set(R, R.T @ d.omega_d, d, Mode.I, spec)  # gap 22 - 20.9 = 1.1
    # the integral variant also asks for a small angular velocity error
    ispec = make_spec("hybrid-integral")
    assert in_jump_set(R, R.T @ d.omega_d, d, Mode.I, ispec, JumpVariant.INTEGRAL)
    assert not in_jump_set(R, R.T @ d.omega_d + [0.5, 0, 0], d, Mode.I, ispec, JumpVariant.INTEGRAL)


@seed(32)
@given(rotations, times)
def test_jumps_decrease_mode_value(R, t):
    d, p = desired(t), reference_shape()
    spec = make_spec("hybrid")
    for m in Mode:
        if in_jump_set(R, np.zeros(3), d, m, spec):
            new = jump_map(R, d, p)
            assert new is not m
            assert psi_mode(m, R, d, p) - psi_mode(new, R, d, p) >= p.delta - 1e-12
    assert psi_mode(jump_map(R, d, p), R, d, p) == min(psi_modes(R, d, p))


def test_undesired_critical_points_are_in_jump_set():
    d, p = desired(), reference_shape()
    spec = make_spec("hybrid")
    for cp in critical_points():
        if cp.desired:
            continue
        R = cp.rotation(d, p)
        gap = psi_mode(cp.mode, R, d, p) - min(psi_modes(R, d, p))
        # margins of exactly zero are resolved with exact arithmetic elsewhere; here allow round-off
        assert gap >= p.delta - 1e-12, cp.label


def test_equilibria():
    d, p = desired(), reference_shape()
    eq = equilibria(d)
    assert len(eq) == 4
    assert np.array_equal(eq[0][0], d.R_d)
    spec = make_spec()
    for R, w in eq:
        assert np.allclose(e_total(Mode.I, R, d, p), 0, atol=1e-13)
        rate = closed_loop_error_rate(R, R.T @ w, d, ControllerState(), spec, PLANT)
        assert np.allclose(rate, 0, atol=1e-13)


@seed(33)
@given(rotations, vec3, vec3, times)
def test_closed_loop_identity(R, Omega, eI, t):
    d = desired(t)
    plant = PlantParams(J, [0.3, -0.2, 0.1])
    for kind, m in (("smooth", Mode.I), ("hybrid", Mode.III), ("smooth-integral", Mode.I),
                    ("hybrid-integral", Mode.II)):
        spec = make_spec(kind)
        cs = ControllerState(m, eI)
        u = control_input(R, Omega, d, cs, spec, plant)
        _, Wdot = dynamics_rhs(R, Omega, u, plant)
        # d/dt e_Omega = dOmega/dt + Omega^ R^T w_d - R^T dw_d
        a = R.T @ d.omega_d
        J_eWdot = J @ (Wdot + hat(Omega) @ a - R.T @ d.omega_d_dot)
        expected = closed_loop_error_rate(R, Omega, d, cs, spec, plant)
        scale = max(1.0, np.abs(Omega).max() ** 2)
        assert np.allclose(J_eWdot, expected, atol=IDENTITY_TOL * scale)


def test_integral_cancels_disturbance_at_equilibrium():
    d = desired()
    plant = PlantParams(J, [-1.0, 2.0, 1.0])
    spec = make_spec("smooth-integral")
    cs = ControllerState(Mode.I, plant.Delta / spec.k_I)
    W = d.R_d.T @ d.omega_d
    assert np.allclose(closed_loop_error_rate(d.R_d, W, d, cs, spec, plant), 0, atol=1e-13)
    assert np.allclose(integral_rate(d.R_d, W, d, Mode.I, spec), 0, atol=1e-14)
