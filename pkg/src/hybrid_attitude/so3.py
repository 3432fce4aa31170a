"""Vectors, skew matrices and rotation matrices.

Rotations are plain ``(3, 3)`` float arrays. :func:`as_rotation` is the
checked constructor; integrator stages work on unchecked arrays and are
re-projected with :func:`project_to_so3` after every full step.

The underscore-prefixed functions are compiled with numba and shared by the
simulation kernels, so the public helpers and the integrator run the same
arithmetic.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import Degenerate, NotARotation, NotSkewSymmetric

ORTHO_TOL = 1e-9
SMALL_ANGLE = 1e-8


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _hat(v):
    S = np.zeros((3, 3))
    S[0, 1] = -v[2]
    S[0, 2] = v[1]
    S[1, 0] = v[2]
    S[1, 2] = -v[0]
    S[2, 0] = -v[1]
    S[2, 1] = v[0]
    return S


@njit(cache=True)
def _project(M):
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def _vec(v) -> np.ndarray:
    a = np.ascontiguousarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def _mat(M) -> np.ndarray:
    a = np.ascontiguousarray(M, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    return a


def _vecs(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim < 1 or a.shape[-1] != 3:
        raise ValueError(f"expected 3-vectors, got shape {a.shape}")
    return a


def _mats(M) -> np.ndarray:
    a = np.asarray(M, dtype=float)
    if a.ndim < 2 or a.shape[-2:] != (3, 3):
        raise ValueError(f"expected 3x3 matrices, got shape {a.shape}")
    return a


def _off_diagonal(M: np.ndarray) -> np.ndarray:
    return np.stack([M[..., 2, 1] - M[..., 1, 2], M[..., 0, 2] - M[..., 2, 0], M[..., 1, 0] - M[..., 0, 1]], axis=-1)


def hat(v) -> np.ndarray:
    """Skew matrix ``S`` with ``S @ y == cross(v, y)``; stacks of vectors give stacks of matrices."""
    v = _vecs(v)
    S = np.zeros(v.shape + (3,))
    S[..., 0, 1], S[..., 0, 2] = -v[..., 2], v[..., 1]
    S[..., 1, 0], S[..., 1, 2] = v[..., 2], -v[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -v[..., 1], v[..., 0]
    return S


def vee(S, tol: float = ORTHO_TOL) -> np.ndarray:
    """Inverse of :func:`hat`; reads the three off-diagonal entries."""
    S = _mats(S)
    asym = np.linalg.norm(S + np.swapaxes(S, -1, -2), axis=(-2, -1))
    if np.any(asym > tol):
        raise NotSkewSymmetric(f"||S + S^T||_F = {np.max(asym):.3e} > {tol:g}")
    return np.stack([S[..., 2, 1], S[..., 0, 2], S[..., 1, 0]], axis=-1)


def skew_part(A) -> np.ndarray:
    A = _mats(A)
    return 0.5 * (A - np.swapaxes(A, -1, -2))


def exp_so3(v) -> np.ndarray:
    """Rodrigues formula for ``expm(hat(v))``; accepts stacks of vectors."""
    v = _vecs(v)
    theta = np.linalg.norm(v, axis=-1)[..., None, None]
    K = hat(v)
    K2 = K @ K
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    return np.eye(3) + a * K + b * K2


def rotation_angle(R) -> float:
    R = _mat(R)
    s = 0.5 * np.linalg.norm(_off_diagonal(R))
    c = 0.5 * (np.trace(R) - 1.0)
    return math.atan2(s, c)


def log_so3(R) -> np.ndarray:
    """Rotation vector of ``R`` with norm in ``[0, pi]``; accepts stacks of matrices."""
    R = _mats(R)
    w = 0.5 * _off_diagonal(R)
    s = np.linalg.norm(w, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(s, c)
    out = np.where((theta < SMALL_ANGLE)[..., None], w, (theta / np.where(s > 0, s, 1.0))[..., None] * w)
    near_pi = c <= -0.5
    if np.any(near_pi):
        # sin(theta) is tiny near a half turn, so read the axis off the symmetric part
        Rn, wn, cn = R[near_pi], w[near_pi], c[near_pi]
        B = 0.5 * (Rn + np.swapaxes(Rn, -1, -2)) - cn[..., None, None] * np.eye(3)
        j = np.argmax(np.diagonal(B, axis1=-2, axis2=-1), axis=-1)
        axis = np.take_along_axis(B, j[..., None, None], axis=-1)[..., 0]
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        axis *= np.where(np.einsum("...i,...i->...", axis, wn) < 0, -1.0, 1.0)[..., None]
        out[near_pi] = theta[near_pi][..., None] * axis
    return out


def orthonormality_error(R) -> float:
    R = _mat(R)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return orthonormality_error(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def as_rotation(M, tol: float = ORTHO_TOL) -> np.ndarray:
    """Validated copy of ``M`` as a rotation matrix."""
    R = np.array(M, dtype=float)
    if R.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise NotARotation("non-finite entries")
    err = orthonormality_error(R)
    det = np.linalg.det(R)
    if err > tol or abs(det - 1.0) > tol:
        raise NotARotation(f"||R^T R - I||_F = {err:.3e}, det = {det:.12f}")
    return R


def project_to_so3(M) -> np.ndarray:
    """Closest rotation to ``M`` in Frobenius norm (polar factor); accepts stacks."""
    M = _mats(M)
    det = np.linalg.det(M)
    if not np.all(det > 1e-6):
        raise Degenerate(f"det(M) = {np.min(det):.3e} <= 1e-6")
    if M.ndim == 2:
        return _project(np.ascontiguousarray(M))
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def rot_distance(R1, R2) -> float:
    """Frobenius distance ``||R1 - R2||_F``."""
    return float(np.linalg.norm(_mat(R1) - _mat(R2)))


def geodesic_distance(R1, R2) -> float:
    """Rotation angle of ``R1^T R2`` in radians."""
    return rotation_angle(_mat(R1).T @ _mat(R2))


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1),
    ], axis=-2)


def random_rotations(n: int, seed=None) -> np.ndarray:
    """``n`` Haar-uniform rotations, shape ``(n, 3, 3)``.

    Normalized isotropic Gaussian 4-vectors are uniform on the unit
    quaternion sphere, which maps to the Haar measure on SO(3).
    """
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    U, _, Vt = np.linalg.svd(_quat_to_matrix(q))
    return U @ Vt


def random_rotation(seed=None) -> np.ndarray:
    return random_rotations(1, seed)[0]


def frame_from_directions(r1, r2, b1, b2) -> np.ndarray:
    """Rotation taking the body pair ``(b1, b2)`` onto the inertial pair ``(r1, r2)``.

    Both pairs must be orthonormal.
    """
    r1, r2, b1, b2 = (_vec(x) for x in (r1, r2, b1, b2))
    A = np.column_stack([r1, r2, np.cross(r1, r2)])
    B = np.column_stack([b1, b2, np.cross(b1, b2)])
    return A @ B.T
