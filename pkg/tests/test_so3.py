import math

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from conftest import rotations, vec3
from hybrid_attitude.errors import Degenerate, NotARotation, NotSkewSymmetric
from hybrid_attitude.so3 import (_hat, _project, as_rotation, exp_so3, frame_from_directions, geodesic_distance,
                                 hat, log_so3, orthonormality_error, project_to_so3, random_rotation,
                                 random_rotations, rot_distance, rotation_angle, skew_part, vee)
from oracles import cross_matrix, expm_taylor, quaternion_rejection

IDENTITY_TOL = 1e-13
EXP_TOL = 1e-12
ORTHO_TOL = 1e-12


def test_hat_examples():
    assert np.array_equal(hat([0, 0, 0]), np.zeros((3, 3)))
    assert np.array_equal(hat([1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])


@seed(1)
@given(vec3, vec3)
def test_hat_is_cross_product(x, y):
    scale = max(1.0, np.abs(x).max() * np.abs(y).max())
    assert np.allclose(hat(x) @ y, np.cross(x, y), rtol=0, atol=IDENTITY_TOL * scale)
    assert np.array_equal(hat(x), cross_matrix(x))
    assert np.array_equal(hat(x), -hat(x).T)


@seed(2)
@given(vec3, rotations)
def test_hat_conjugation(x, R):
    assert np.allclose(R @ hat(x) @ R.T, hat(R @ x), atol=IDENTITY_TOL * max(1.0, np.abs(x).max()))


def test_hat_stacked_and_compiled_agree():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(50, 3))
    stacked = hat(v)
    for i in range(50):
        assert np.array_equal(stacked[i], hat(v[i]))
        assert np.array_equal(_hat(v[i]), hat(v[i]))


@seed(3)
@given(vec3)
def test_vee_inverts_hat(x):
    assert np.array_equal(vee(hat(x)), x)


def test_vee_rejects_non_skew():
    with pytest.raises(NotSkewSymmetric):
        vee(np.eye(3))
    with pytest.raises(NotSkewSymmetric):
        vee(hat([1, 2, 3]) + 1e-6 * np.eye(3))


def test_skew_part():
    A = np.arange(9.0).reshape(3, 3)
    S = skew_part(A)
    assert np.array_equal(S, 0.5 * (A - A.T))
    assert np.array_equal(S, -S.T)


def test_exp_examples():
    assert np.array_equal(exp_so3([0, 0, 0]), np.eye(3))
    assert np.allclose(exp_so3([0, 0, np.pi]), np.diag([-1.0, -1, 1]), atol=1e-15)


def test_exp_matches_taylor_series():
    v = np.array([0.1, 0.2, 0.3])
    assert np.max(np.abs(exp_so3(v) - expm_taylor(cross_matrix(v)))) <= EXP_TOL
    rng = np.random.default_rng(5)
    for w in rng.normal(size=(20, 3)):
        assert np.max(np.abs(exp_so3(w) - expm_taylor(cross_matrix(w), terms=40))) <= EXP_TOL


def test_exp_small_angle_branch_is_continuous():
    for s in (1e-12, 1e-9, 1e-8, 2e-8, 1e-6):
        v = s * np.array([0.6, -0.8, 0.0])
        assert np.max(np.abs(exp_so3(v) - expm_taylor(cross_matrix(v)))) <= 1e-15


@seed(4)
@given(vec3)
def test_exp_is_rotation_and_inverse(v):
    R = exp_so3(v)
    assert orthonormality_error(R) <= ORTHO_TOL
    assert np.linalg.det(R) == pytest.approx(1.0, abs=ORTHO_TOL)
    assert np.allclose(R @ exp_so3(-v), np.eye(3), atol=ORTHO_TOL)


@seed(5)
@given(st.floats(0, np.pi - 1e-3), rotations)
def test_log_round_trip(angle, A):
    axis = A[:, 0]
    v = angle * axis
    assert np.allclose(log_so3(exp_so3(v)), v, atol=1e-10)
    assert rotation_angle(exp_so3(v)) == pytest.approx(angle, abs=1e-10)


def test_log_near_half_turn():
    axis = np.array([1.0, 2.0, 2.0]) / 3
    v = (np.pi - 1e-7) * axis
    assert np.allclose(log_so3(exp_so3(v)), v, atol=1e-7)
    w = log_so3(exp_so3(np.pi * axis))
    assert np.linalg.norm(w) == pytest.approx(np.pi)
    assert np.allclose(exp_so3(w), exp_so3(np.pi * axis), atol=1e-12)


@seed(6)
@given(rotations)
def test_projection_fixes_rotations(R):
    assert np.allclose(project_to_so3(R), R, atol=1e-14)


def test_projection_examples():
    assert np.allclose(project_to_so3(1.1 * np.eye(3)), np.eye(3), atol=1e-15)
    rng = np.random.default_rng(1)
    R = random_rotation(3)
    M = R + 1e-6 * rng.normal(size=(3, 3))
    P = project_to_so3(M)
    assert orthonormality_error(P) < ORTHO_TOL
    assert np.linalg.det(P) == pytest.approx(1.0)
    assert np.array_equal(project_to_so3(P), project_to_so3(project_to_so3(P))) or \
        np.allclose(project_to_so3(P), P, atol=1e-15)
    assert np.allclose(_project(M.copy()), P, atol=1e-15)


def test_projection_is_nearest_rotation():
    rng = np.random.default_rng(2)
    M = random_rotation(4) + 0.05 * rng.normal(size=(3, 3))
    P = project_to_so3(M)
    for Q in random_rotations(200, seed=9):
        assert np.linalg.norm(M - P) <= np.linalg.norm(M - Q) + 1e-12


def test_projection_rejects_degenerate():
    with pytest.raises(Degenerate):
        project_to_so3(np.zeros((3, 3)))
    with pytest.raises(Degenerate):
        project_to_so3(np.diag([1.0, 1.0, -1.0]))


def test_as_rotation_validates():
    assert np.array_equal(as_rotation(np.eye(3)), np.eye(3))
    with pytest.raises(NotARotation):
        as_rotation(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotARotation):
        as_rotation(1.001 * np.eye(3))
    with pytest.raises(NotARotation):
        as_rotation(np.eye(2))


def test_rot_distance_examples():
    assert rot_distance(np.eye(3), np.eye(3)) == 0.0
    assert rot_distance(np.eye(3), exp_so3([0, 0, np.pi])) == pytest.approx(math.sqrt(8))
    R, Q = random_rotation(1), random_rotation(2)
    assert rot_distance(R, Q) == pytest.approx(math.sqrt(np.sum((R - Q) ** 2)))
    # chordal and geodesic distances are related by ||R - Q||_F = 2 sqrt(2) sin(theta / 2)
    theta = geodesic_distance(R, Q)
    assert rot_distance(R, Q) == pytest.approx(2 * math.sqrt(2) * math.sin(theta / 2))


def test_random_rotation_is_deterministic():
    assert np.array_equal(random_rotation(7), random_rotation(7))
    assert not np.array_equal(random_rotation(7), random_rotation(8))
    Rs = random_rotations(100, seed=0)
    assert Rs.shape == (100, 3, 3)
    assert max(orthonormality_error(R) for R in Rs) < ORTHO_TOL
    assert np.all(np.linalg.det(Rs) > 0)


def _angle_cdf_deviation(Rs):
    """Kolmogorov distance of rotation angles to the Haar law F(t) = (t - sin t) / pi."""
    cos = np.clip((np.trace(Rs, axis1=1, axis2=2) - 1) / 2, -1, 1)
    theta = np.sort(np.arccos(cos))
    n = len(theta)
    F = (theta - np.sin(theta)) / np.pi
    return max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))


def test_random_rotations_are_haar():
    n = 10_000
    Rs = random_rotations(n, seed=11)
    tr = np.trace(Rs, axis1=1, axis2=2)
    # E[tr R] = 0 and Var[tr R] = 1 under Haar measure
    assert abs(tr.mean()) < 3 / math.sqrt(n)
    assert abs(tr.var() - 1) < 0.1
    assert _angle_cdf_deviation(Rs) < 1.63 / math.sqrt(n)  # 1% Kolmogorov-Smirnov level
    ref = quaternion_rejection(n, seed=12)
    assert _angle_cdf_deviation(ref) < 1.63 / math.sqrt(n)
    assert abs(tr.mean() - np.trace(ref, axis1=1, axis2=2).mean()) < 4 * math.sqrt(2 / n)


def test_frame_from_directions():
    R = random_rotation(3)
    b1, b2 = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    assert np.allclose(frame_from_directions(R @ b1, R @ b2, b1, b2), R, atol=1e-14)
    c = np.array([0, 0.6, 0.8])
    d = np.array([0, -0.8, 0.6])
    F = frame_from_directions(R @ c, R @ d, c, d)
    assert np.allclose(F, R, atol=1e-14)
