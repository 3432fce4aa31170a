"""Desired attitude trajectories from 3-2-1 Euler-angle commands.

The attitude is ``R_d(t) = exp(psi e3^) exp(theta e2^) exp(phi e1^)``. The
desired angular velocity (inertial frame) and its rate are obtained with
five-point central differences, so any smooth member of the angle family
is handled the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonSkewResidual, ValidationError
from .so3 import _vec

FD_STEP = 1e-4
SKEW_RESIDUAL_MAX = 1e-6

ANGLE_KINDS = ("sin", "linear", "one_minus_cos", "constant")

# 5-point central difference weights for offsets -2h, -h, +h, +2h
_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


@dataclass(frozen=True)
class AngleFunction:
    """One Euler angle as a member of the parametric family.

    ``sin``: a sin(bt) + c, ``linear``: a t + c,
    ``one_minus_cos``: a (1 - cos(bt)) + c, ``constant``: c.
    """

    kind: str = "constant"
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ANGLE_KINDS:
            raise ValidationError(f"unknown angle function kind {self.kind!r}; expected one of {ANGLE_KINDS}")
        for name in ("a", "b", "c"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"angle function parameter {name} must be finite")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sin":
            return self.a * np.sin(self.b * t) + self.c
        if self.kind == "linear":
            return self.a * t + self.c
        if self.kind == "one_minus_cos":
            return self.a * (1.0 - np.cos(self.b * t)) + self.c
        return np.full_like(t, self.c)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class EulerCommand:
    phi: AngleFunction = field(default_factory=AngleFunction)
    theta: AngleFunction = field(default_factory=AngleFunction)
    psi: AngleFunction = field(default_factory=AngleFunction)

    def to_dict(self) -> dict:
        return {"phi": self.phi.to_dict(), "theta": self.theta.to_dict(), "psi": self.psi.to_dict()}


def reference_command() -> EulerCommand:
    """phi = sin(0.5 t), theta = 0.1 (t - 1), psi = 1 - cos(t)."""
    return EulerCommand(
        phi=AngleFunction("sin", a=1.0, b=0.5),
        theta=AngleFunction("linear", a=0.1, c=-0.1),
        psi=AngleFunction("one_minus_cos", a=1.0, b=1.0),
    )


@dataclass(frozen=True)
class DesiredState:
    t: float
    R_d: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray
    r_d1: np.ndarray
    r_d2: np.ndarray

    @property
    def r_d3(self) -> np.ndarray:
        return np.cross(self.r_d1, self.r_d2)


def _euler_matrices(cmd: EulerCommand, t: np.ndarray) -> np.ndarray:
    phi, theta, psi = cmd.phi(t), cmd.theta(t), cmd.psi(t)
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    # closed form of Rz(psi) @ Ry(theta) @ Rx(phi)
    R = np.empty(t.shape + (3, 3))
    R[..., 0, 0] = cp * ct
    R[..., 0, 1] = cp * st * sf - sp * cf
    R[..., 0, 2] = cp * st * cf + sp * sf
    R[..., 1, 0] = sp * ct
    R[..., 1, 1] = sp * st * sf + cp * cf
    R[..., 1, 2] = sp * st * cf - cp * sf
    R[..., 2, 0] = -st
    R[..., 2, 1] = ct * sf
    R[..., 2, 2] = ct * cf
    return R


def eval_Rd(cmd: EulerCommand, t):
    """Desired attitude at time(s) ``t``; shape ``t.shape + (3, 3)``."""
    return _euler_matrices(cmd, np.asarray(t, dtype=float))


def _omega_from_offsets(cmd: EulerCommand, t: np.ndarray, h: float):
    """omega_d at ``t`` and the skew residual of ``dR_d R_d^T``."""
    dR = sum(w * _euler_matrices(cmd, t + k * h) for k, w in _STENCIL) / (12.0 * h)
    A = dR @ np.swapaxes(_euler_matrices(cmd, t), -1, -2)
    residual = np.linalg.norm(A + np.swapaxes(A, -1, -2), axis=(-2, -1))
    S = 0.5 * (A - np.swapaxes(A, -1, -2))
    omega = np.stack([S[..., 2, 1], S[..., 0, 2], S[..., 1, 0]], axis=-1)
    return omega, residual


def eval_omega_d(cmd: EulerCommand, t, h: float = FD_STEP):
    """``(omega_d, omega_d_dot)`` at time(s) ``t`` by central differences.

    Raises :class:`NonSkewResidual` if ``dR_d R_d^T`` is not skew to within
    1e-6 anywhere, which signals a non-smooth command.
    """
    t = np.asarray(t, dtype=float)
    omegas = {}
    worst = 0.0
    for k in (-2, -1, 0, 1, 2):
        omegas[k], res = _omega_from_offsets(cmd, t + k * h, h)
        worst = max(worst, float(np.max(res)))
    if worst > SKEW_RESIDUAL_MAX:
        raise NonSkewResidual(f"skew residual {worst:.3e} exceeds {SKEW_RESIDUAL_MAX:g}")
    omega_dot = sum(w * omegas[k] for k, w in _STENCIL) / (12.0 * h)
    return omegas[0], omega_dot


def check_directions(b1, b2, tol: float = 1e-9):
    b1, b2 = _vec(b1), _vec(b2)
    if abs(np.linalg.norm(b1) - 1) > tol or abs(np.linalg.norm(b2) - 1) > tol:
        raise ValidationError("body directions b1, b2 must be unit vectors")
    if abs(b1 @ b2) > tol:
        raise ValidationError(f"body directions must be orthogonal, b1.b2 = {b1 @ b2:.3e}")
    return b1, b2


def orthogonalize_directions(b1, b2, tol: float = 1e-9):
    """Return ``(b1, b2, substituted)``.

    Non-orthogonal pairs are repaired by taking the normalized ``b1 x b2`` as
    the second direction.
    """
    b1 = _vec(b1) / np.linalg.norm(b1)
    b2 = _vec(b2) / np.linalg.norm(b2)
    if abs(b1 @ b2) <= tol:
        return b1, b2, False
    n = np.cross(b1, b2)
    norm = np.linalg.norm(n)
    if norm < tol:
        raise ValidationError("body directions b1 and b2 are parallel")
    return b1, n / norm, True


def eval_desired(cmd: EulerCommand, b1, b2, t: float) -> DesiredState:
    b1, b2 = check_directions(b1, b2)
    R_d = eval_Rd(cmd, float(t))
    omega_d, omega_d_dot = eval_omega_d(cmd, float(t))
    return DesiredState(float(t), R_d, omega_d, omega_d_dot, R_d @ b1, R_d @ b2)


@dataclass(frozen=True)
class DesiredSamples:
    """Desired trajectory tabulated on a time grid (arrays indexed by sample)."""

    t: np.ndarray
    R_d: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray
    r_d1: np.ndarray
    r_d2: np.ndarray

    def __len__(self):
        return len(self.t)

    def at(self, i: int) -> DesiredState:
        return DesiredState(float(self.t[i]), self.R_d[i], self.omega_d[i], self.omega_d_dot[i],
                            self.r_d1[i], self.r_d2[i])

    def packed(self) -> np.ndarray:
        """``(n, 4, 3)`` rows ``[r_d1, r_d2, omega_d, omega_d_dot]`` for the kernels."""
        return np.ascontiguousarray(np.stack([self.r_d1, self.r_d2, self.omega_d, self.omega_d_dot], axis=1))


@dataclass(frozen=True)
class DesiredTrajectory:
    cmd: EulerCommand
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        check_directions(self.b1, self.b2)

    def at(self, t: float) -> DesiredState:
        return eval_desired(self.cmd, self.b1, self.b2, t)

    def sample(self, times, chunk: int = 20000) -> DesiredSamples:
        times = np.asarray(times, dtype=float)
        parts = []
        for start in range(0, len(times), chunk):
            tc = times[start:start + chunk]
            R_d = eval_Rd(self.cmd, tc)
            w, wdot = eval_omega_d(self.cmd, tc)
            parts.append((R_d, w, wdot))
        R_d, w, wdot = (np.concatenate(p) for p in zip(*parts))
        return DesiredSamples(times, R_d, w, wdot, R_d @ self.b1, R_d @ self.b2)


def omega_bound(cmd: EulerCommand, T: float, dt: float) -> float:
    """sup of ||omega_d|| over the grid ``0, dt, ..., T``."""
    n = int(round(T / dt))
    times = np.arange(n + 1) * dt
    sup = 0.0
    for start in range(0, len(times), 20000):
        tc = times[start:start + 20000]
        sup = max(sup, float(np.max(np.linalg.norm(_omega_from_offsets(cmd, tc, FD_STEP)[0], axis=-1))))
    return sup
