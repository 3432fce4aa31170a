"""Attitude tracking control laws, gain conditions and hybrid switching logic.

All four controllers share one code path::

    u = -e - k_Omega e_Omega - k_I e_I + (R^T w_d)^ J R^T w_d + J R^T dw_d

where ``e`` is the hybrid error vector of the active mode (always mode I for
the smooth kinds) and the integral term is present only for the integral
kinds. The disturbance lives in :class:`PlantParams` and is never read here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errfun import Mode, ShapeParams, _e_total, _psi_modes, bound_constants, e_total, psi_modes
from .errors import CTooLarge, ValidationError
from .so3 import _cross, _vec, exp_so3
from .trajectory import DesiredState


class ControllerKind(str, enum.Enum):
    SMOOTH = "smooth"
    HYBRID = "hybrid"
    SMOOTH_INTEGRAL = "smooth-integral"
    HYBRID_INTEGRAL = "hybrid-integral"

    @property
    def hybrid(self) -> bool:
        return self in (ControllerKind.HYBRID, ControllerKind.HYBRID_INTEGRAL)

    @property
    def integral(self) -> bool:
        return self in (ControllerKind.SMOOTH_INTEGRAL, ControllerKind.HYBRID_INTEGRAL)


class JumpVariant(str, enum.Enum):
    PLAIN = "plain"
    INTEGRAL = "integral"


@dataclass(frozen=True)
class ControllerSpec:
    kind: ControllerKind
    shape: ShapeParams
    k_Omega: float
    k_I: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ControllerKind(self.kind))
        if not self.k_Omega > 0:
            raise ValidationError(f"k_Omega must be positive (got {self.k_Omega})")
        if not self.k_I >= 0:
            raise ValidationError(f"k_I must be non-negative (got {self.k_I})")
        if self.kind.integral:
            if not self.k_I > 0:
                raise ValidationError(f"{self.kind.value} controller needs k_I > 0")
            if not self.c > 0:
                raise ValidationError(f"{self.kind.value} controller needs c > 0")
        elif not self.c >= 0:
            raise ValidationError(f"c must be non-negative (got {self.c})")

    @property
    def jump_variant(self) -> JumpVariant:
        return JumpVariant.INTEGRAL if self.kind.integral else JumpVariant.PLAIN


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.I
    e_I: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "e_I", _vec(self.e_I))


@dataclass(frozen=True)
class PlantParams:
    J: np.ndarray
    Delta: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        J = np.ascontiguousarray(self.J, dtype=float)
        if J.shape != (3, 3) or not np.all(np.isfinite(J)):
            raise ValidationError("J must be a finite 3x3 matrix")
        if np.max(np.abs(J - J.T)) > 1e-12:
            raise ValidationError("J must be symmetric")
        if np.linalg.eigvalsh(J)[0] <= 0:
            raise ValidationError("J must be positive definite")
        object.__setattr__(self, "J", J)
        Delta = _vec(self.Delta)
        if not np.all(np.isfinite(Delta)):
            raise ValidationError("Delta must be finite")
        object.__setattr__(self, "Delta", Delta)

    @property
    def lambda_m(self) -> float:
        return float(np.linalg.eigvalsh(self.J)[0])

    @property
    def lambda_M(self) -> float:
        return float(np.linalg.eigvalsh(self.J)[-1])

    @property
    def J_inv(self) -> np.ndarray:
        return np.linalg.inv(self.J)


# -- gain conditions ------------------------------------------------------------

def coupling_bound(plant: PlantParams, omega_sup: float) -> float:
    """``B = ||2J - tr(J) I||_2 sup ||omega_d||``."""
    A = 2 * plant.J - np.trace(plant.J) * np.eye(3)
    return float(np.linalg.norm(A, 2) * omega_sup)


def c_bounds(spec: ControllerSpec, plant: PlantParams, B: float) -> tuple[float, float]:
    """The two candidate upper bounds on ``c``; the admissible bound is their minimum."""
    h = bound_constants(spec.shape.k1, spec.shape.k2)
    lm, lM = plant.lambda_m, plant.lambda_M
    k = spec.shape.k
    first = math.sqrt(2 * lm * h.h1 / (lM**2 * (h.h2 + h.h3)))
    second = 4 * spec.k_Omega / (4 * k * (1 + lM) + (B + spec.k_Omega) ** 2)
    return first, second


def validate_c(spec: ControllerSpec, plant: PlantParams, B: float) -> float:
    """Return the upper bound on ``c``; raise :class:`CTooLarge` unless ``spec.c`` is below it."""
    if B < 0:
        raise ValueError("B must be non-negative")
    first, second = c_bounds(spec, plant, B)
    bound = min(first, second)
    if not spec.c < bound:
        raise CTooLarge(f"c={spec.c} must be < min({first:.6g}, {second:.6g}) = {bound:.6g}")
    return bound


# -- compiled control law -----------------------------------------------------

@njit(cache=True)
def _control(mode, integral, R, W, eI, rd1, rd2, wd, wdd, b1, b2, k1, k2, beta, kW, kI, J):
    """Return ``(u, e, e_Omega)``."""
    e = _e_total(mode, R, rd1, rd2, b1, b2, k1, k2, beta)
    Rt = R.T
    a = Rt @ wd
    eW = W - a
    u = -e - kW * eW + _cross(a, J @ a) + J @ (Rt @ wdd)
    if integral:
        u = u - kI * eI
    return u, e, eW


@njit(cache=True)
def _jump_gap(psis, mode):
    return psis[mode - 1] - np.min(psis)


@njit(cache=True)
def _in_jump_set(R, W, mode, integral, rd1, rd2, wd, b1, b2, k1, k2, alpha, beta, delta, c):
    psis = _psi_modes(R, rd1, rd2, b1, b2, k1, k2, alpha, beta)
    if _jump_gap(psis, mode) < delta:
        return False
    if integral:
        eW = W - R.T @ wd
        return math.sqrt(eW @ eW) <= delta / (4.0 * c * (k1 + k2))
    return True


def _law(R, Omega, d: DesiredState, mode: Mode, e_I, integral: bool,
         spec: ControllerSpec, plant: PlantParams) -> np.ndarray:
    s = spec.shape
    u, _, _ = _control(int(mode), integral, np.ascontiguousarray(R, dtype=float), _vec(Omega),
                       _vec(e_I), d.r_d1, d.r_d2, d.omega_d, d.omega_d_dot, s.b1, s.b2,
                       float(s.k1), float(s.k2), float(s.beta), float(spec.k_Omega),
                       float(spec.k_I), plant.J)
    return u


def u_smooth(R, Omega, d: DesiredState, spec: ControllerSpec, plant: PlantParams) -> np.ndarray:
    return _law(R, Omega, d, Mode.I, np.zeros(3), False, spec, plant)


def u_hybrid(R, Omega, d: DesiredState, mode: Mode, spec: ControllerSpec, plant: PlantParams) -> np.ndarray:
    return _law(R, Omega, d, mode, np.zeros(3), False, spec, plant)


def u_smooth_integral(R, Omega, d: DesiredState, cstate: ControllerState, spec: ControllerSpec,
                      plant: PlantParams) -> np.ndarray:
    return _law(R, Omega, d, Mode.I, cstate.e_I, True, spec, plant)


def u_hybrid_integral(R, Omega, d: DesiredState, cstate: ControllerState, spec: ControllerSpec,
                      plant: PlantParams) -> np.ndarray:
    return _law(R, Omega, d, cstate.mode, cstate.e_I, True, spec, plant)


def control_input(R, Omega, d: DesiredState, cstate: ControllerState, spec: ControllerSpec,
                  plant: PlantParams) -> np.ndarray:
    """Control moment of ``spec.kind``; smooth kinds ignore ``cstate.mode``."""
    mode = cstate.mode if spec.kind.hybrid else Mode.I
    return _law(R, Omega, d, mode, cstate.e_I, spec.kind.integral, spec, plant)


def integral_rate(R, Omega, d: DesiredState, mode: Mode, spec: ControllerSpec) -> np.ndarray:
    """``c e + e_Omega``, the rate of the integral accumulator."""
    if not spec.kind.hybrid:
        mode = Mode.I
    R = np.asarray(R, dtype=float)
    return spec.c * e_total(mode, R, d, spec.shape) + (_vec(Omega) - R.T @ d.omega_d)


def jump_map(R, d: DesiredState, p: ShapeParams) -> Mode:
    """Mode with the smallest error function value, ties broken I < II < III."""
    return Mode(int(np.argmin(psi_modes(R, d, p))) + 1)


def in_jump_set(R, Omega, d: DesiredState, mode: Mode, spec: ControllerSpec,
                variant: JumpVariant = JumpVariant.PLAIN) -> bool:
    s = spec.shape
    integral = JumpVariant(variant) is JumpVariant.INTEGRAL
    return bool(_in_jump_set(np.ascontiguousarray(R, dtype=float), _vec(Omega), int(mode), integral,
                             d.r_d1, d.r_d2, d.omega_d, s.b1, s.b2, float(s.k1), float(s.k2),
                             float(s.alpha), float(s.beta), float(s.delta), float(spec.c)))


def equilibria(d: DesiredState, p: ShapeParams | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
    """The desired attitude and its three half-turns about r_d1, r_d2 and r_d1 x r_d2."""
    out = [(d.R_d.copy(), d.omega_d.copy())]
    for axis in (d.r_d1, d.r_d2, d.r_d3):
        out.append((exp_so3(np.pi * axis) @ d.R_d, d.omega_d.copy()))
    return out


def closed_loop_error_rate(R, Omega, d: DesiredState, cstate: ControllerState, spec: ControllerSpec,
                           plant: PlantParams) -> np.ndarray:
    """``J de_Omega/dt`` in the rearranged closed-loop form.

    ``{J e_Omega + (2J - tr(J) I) R^T w_d}^ e_Omega - e - k_Omega e_Omega - k_I e_I + Delta``
    """
    R = np.asarray(R, dtype=float)
    J = plant.J
    mode = cstate.mode if spec.kind.hybrid else Mode.I
    e = e_total(mode, R, d, spec.shape)
    eW = _vec(Omega) - R.T @ d.omega_d
    coupling = J @ eW + (2 * J - np.trace(J) * np.eye(3)) @ (R.T @ d.omega_d)
    out = np.cross(coupling, eW) - e - spec.k_Omega * eW + plant.Delta
    if spec.kind.integral:
        out = out - spec.k_I * cstate.e_I
    return out
