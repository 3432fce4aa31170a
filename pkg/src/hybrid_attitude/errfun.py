"""Configuration error functions and error vectors on SO(3).

Two body directions ``b1, b2`` are compared with their desired inertial
directions ``r_d1 = R_d b1`` and ``r_d2 = R_d b2``. The nominal functions
``1 - R b_i . r_di`` vanish at the desired attitude; the expelling functions
``alpha + beta R b_i . (r_d1 x r_d2)`` push ``R b_i`` away from the
antipodal critical point. Three discrete modes combine them:

    mode I:   k1 Psi_N1 + k2 Psi_N2
    mode II:  k1 Psi_N1 + k2 Psi_E2
    mode III: k1 Psi_E1 + k2 Psi_N2
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from numba import njit

from .errors import CapTooLarge, ValidationError
from .so3 import _cross, _vec, frame_from_directions
from .trajectory import DesiredState, check_directions


class Mode(enum.IntEnum):
    I = 1
    II = 2
    III = 3


MODES = (Mode.I, Mode.II, Mode.III)


class DeltaBoundaryWarning(UserWarning):
    """The hysteresis gap equals its upper bound instead of lying strictly below it."""


def _exact(x) -> Fraction:
    return Fraction(str(float(x)))


def delta_bound(k1, k2, alpha, beta) -> Fraction:
    """Exact upper bound ``min(k1, k2) * min(2 - alpha, alpha - |beta| - 1)`` on the gap."""
    k1, k2, alpha, beta = map(_exact, (k1, k2, alpha, beta))
    return min(k1, k2) * min(2 - alpha, alpha - abs(beta) - 1)


@dataclass(frozen=True)
class ShapeParams:
    k1: float
    k2: float
    alpha: float
    beta: float
    delta: float
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b1", _vec(self.b1))
        object.__setattr__(self, "b2", _vec(self.b2))
        check_directions(self.b1, self.b2)
        k1, k2, alpha, beta, delta = map(float, (self.k1, self.k2, self.alpha, self.beta, self.delta))
        if not (k1 > 0 and k2 > 0):
            raise ValidationError(f"k1, k2 must be positive (got {k1}, {k2})")
        if k1 == k2:
            raise ValidationError("k1 and k2 must differ")
        if not 1 < alpha < 2:
            raise ValidationError(f"alpha must satisfy 1 < alpha < 2 (got {alpha})")
        if not abs(beta) < alpha - 1 or not _exact(abs(beta)) < _exact(alpha) - 1:
            raise ValidationError(f"beta must satisfy |beta| < alpha - 1 (got beta={beta}, alpha={alpha})")
        if not delta > 0:
            raise ValidationError(f"delta must be positive (got {delta})")
        bound = delta_bound(k1, k2, alpha, beta)
        if _exact(delta) > bound:
            raise ValidationError(f"delta={delta} exceeds min(k1,k2)*min(2-alpha, alpha-|beta|-1) = {float(bound)}")
        if _exact(delta) == bound:
            warnings.warn(
                f"delta={delta} equals its bound {float(bound)}; the strict inequality is violated "
                "and some undesired critical points sit on the jump-set boundary",
                DeltaBoundaryWarning, stacklevel=3)

    @classmethod
    def unchecked(cls, **kwargs) -> ShapeParams:
        """Build without invariant checks (mutation fixtures only)."""
        obj = object.__new__(cls)
        for name, value in kwargs.items():
            if name in ("b1", "b2"):
                value = _vec(value)
            object.__setattr__(obj, name, value)
        return obj

    @property
    def k(self) -> float:
        return self.k1 + self.k2

    def with_delta(self, delta: float) -> ShapeParams:
        return ShapeParams(self.k1, self.k2, self.alpha, self.beta, delta, self.b1, self.b2)


@dataclass(frozen=True)
class BoundConstants:
    h1: float
    h2: float
    h3: float
    h4: float
    h5: float


def bound_constants(k1: float, k2: float) -> BoundConstants:
    return BoundConstants(
        h1=2 * min(k1, k2),
        h2=4 * max((k1 - k2) ** 2, k2**2, k1**2),
        h3=4 * max((k1 + k2) ** 2, k2**2, k1**2),
        h4=2 * (k1 + k2),
        h5=4 * min((k1 + k2) ** 2, k2**2, k1**2),
    )


# -- compiled kernels ---------------------------------------------------------

@njit(cache=True)
def _psi_modes(R, rd1, rd2, b1, b2, k1, k2, alpha, beta):
    rd3 = _cross(rd1, rd2)
    r1 = R @ b1
    r2 = R @ b2
    n1 = 1.0 - r1 @ rd1
    n2 = 1.0 - r2 @ rd2
    x1 = alpha + beta * (r1 @ rd3)
    x2 = alpha + beta * (r2 @ rd3)
    out = np.empty(3)
    out[0] = k1 * n1 + k2 * n2
    out[1] = k1 * n1 + k2 * x2
    out[2] = k1 * x1 + k2 * n2
    return out


@njit(cache=True)
def _error_vectors(mode, R, rd1, rd2, b1, b2, beta):
    """Per-direction hybrid error vectors ``(e_H1, e_H2)``; mode I gives ``(e_r1, e_r2)``."""
    Rt = R.T
    rd3t = Rt @ _cross(rd1, rd2)
    if mode == 3:
        e1 = -beta * _cross(rd3t, b1)
    else:
        e1 = _cross(Rt @ rd1, b1)
    if mode == 2:
        e2 = -beta * _cross(rd3t, b2)
    else:
        e2 = _cross(Rt @ rd2, b2)
    return e1, e2


@njit(cache=True)
def _e_total(mode, R, rd1, rd2, b1, b2, k1, k2, beta):
    e1, e2 = _error_vectors(mode, R, rd1, rd2, b1, b2, beta)
    return k1 * e1 + k2 * e2


# -- public API ---------------------------------------------------------------

def _rd(i: int, d: DesiredState) -> np.ndarray:
    if i == 1:
        return d.r_d1
    if i == 2:
        return d.r_d2
    raise ValueError(f"direction index must be 1 or 2, got {i}")


def _b(i: int, p: ShapeParams) -> np.ndarray:
    return p.b1 if i == 1 else p.b2


def psi_nominal(i: int, R, d: DesiredState, p: ShapeParams) -> float:
    """``1 - (R b_i) . r_di``, in [0, 2]."""
    R = np.asarray(R, dtype=float)
    return float(1.0 - (R @ _b(i, p)) @ _rd(i, d))


def psi_expelling(i: int, R, d: DesiredState, p: ShapeParams) -> float:
    """``alpha + beta (R b_i) . (r_d1 x r_d2)``."""
    R = np.asarray(R, dtype=float)
    _rd(i, d)
    return float(p.alpha + p.beta * ((R @ _b(i, p)) @ d.r_d3))


def psi_modes(R, d: DesiredState, p: ShapeParams) -> np.ndarray:
    """Values of the three mode functions, indexed ``[I, II, III]``."""
    return _psi_modes(np.ascontiguousarray(R, dtype=float), d.r_d1, d.r_d2, p.b1, p.b2,
                      float(p.k1), float(p.k2), float(p.alpha), float(p.beta))


def psi_mode(m: Mode, R, d: DesiredState, p: ShapeParams) -> float:
    return float(psi_modes(R, d, p)[int(m) - 1])


def rho(R, d: DesiredState, p: ShapeParams) -> float:
    """Smallest mode error function value."""
    return float(np.min(psi_modes(R, d, p)))


def argmin_mode(R, d: DesiredState, p: ShapeParams) -> Mode:
    """Mode with the smallest error function; ties go to the lower mode."""
    return MODES[int(np.argmin(psi_modes(R, d, p)))]


def e_r_i(i: int, R, d: DesiredState, p: ShapeParams) -> np.ndarray:
    """``R^T r_di x b_i``."""
    R = np.asarray(R, dtype=float)
    return np.cross(R.T @ _rd(i, d), _b(i, p))


def e_H_i(i: int, m: Mode, R, d: DesiredState, p: ShapeParams) -> np.ndarray:
    if i not in (1, 2):
        raise ValueError(f"direction index must be 1 or 2, got {i}")
    e1, e2 = _error_vectors(int(m), np.ascontiguousarray(R, dtype=float), d.r_d1, d.r_d2,
                            p.b1, p.b2, float(p.beta))
    return e1 if i == 1 else e2


def e_total(m: Mode, R, d: DesiredState, p: ShapeParams) -> np.ndarray:
    """``k1 e_H1 + k2 e_H2`` for mode ``m`` (mode I is the smooth ``e_r``)."""
    return _e_total(int(m), np.ascontiguousarray(R, dtype=float), d.r_d1, d.r_d2, p.b1, p.b2,
                    float(p.k1), float(p.k2), float(p.beta))


def e_Omega(R, Omega, d: DesiredState) -> np.ndarray:
    """Angular velocity error ``Omega - R^T omega_d`` (body frame)."""
    R = np.asarray(R, dtype=float)
    return _vec(Omega) - R.T @ d.omega_d


# -- quadratic bounds and the trace-form construction -------------------------

def direction_frame(p: ShapeParams) -> np.ndarray:
    """``U = [b1, b2, b1 x b2]``."""
    return np.column_stack([p.b1, p.b2, np.cross(p.b1, p.b2)])


def psi_trace_form(R, d: DesiredState, p: ShapeParams) -> float:
    """Mode-I error function written as ``tr[G (I - U^T R_d^T R U)]``."""
    U = direction_frame(p)
    G = np.diag([p.k1, p.k2, 0.0])
    P = U.T @ d.R_d.T @ np.asarray(R, dtype=float) @ U
    return float(np.trace(G @ (np.eye(3) - P)))


def trace_form_error_vector(R, d: DesiredState, p: ShapeParams) -> np.ndarray:
    """``e_P = 1/2 (F P - P^T F)^vee`` with ``F = 2G`` and ``P = U^T R_d^T R U``."""
    U = direction_frame(p)
    F = 2 * np.diag([p.k1, p.k2, 0.0])
    P = U.T @ d.R_d.T @ np.asarray(R, dtype=float) @ U
    S = 0.5 * (F @ P - P.T @ F)
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


@dataclass(frozen=True)
class BoundReport:
    psi: float
    er_norm: float
    lower: float
    upper: float | None
    lower_ok: bool
    upper_ok: bool
    eP_norm: float
    eP_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.eP_ok

    @property
    def lower_margin(self) -> float:
        return self.psi - self.lower

    @property
    def upper_margin(self) -> float | None:
        return None if self.upper is None else self.upper - self.psi


def psi_bounds_check(R, d: DesiredState, p: ShapeParams, psi_cap: float | None = None,
                     eP_tol: float = 1e-12) -> BoundReport:
    """Check the quadratic sandwich of the mode-I error function in ``||e_r||``.

    The lower bound is checked unconditionally; the upper bound only when
    ``Psi <= psi_cap`` (default ``0.9 h1``), otherwise ``upper`` is None.
    """
    h = bound_constants(p.k1, p.k2)
    if psi_cap is None:
        psi_cap = 0.9 * h.h1
    if psi_cap >= h.h1:
        raise CapTooLarge(f"psi_cap={psi_cap} must be below h1={h.h1}")
    psi = psi_mode(Mode.I, R, d, p)
    er = e_total(Mode.I, R, d, p)
    er2 = float(er @ er)
    lower = h.h1 / (h.h2 + h.h3) * er2
    # relative slack for round-off when both sides are tiny
    slack = 1e-12 * max(1.0, psi)
    upper = None
    upper_ok = True
    if psi <= psi_cap:
        upper = h.h1 * h.h4 / (h.h5 * (h.h1 - psi_cap)) * er2
        upper_ok = psi <= upper + slack
    eP = trace_form_error_vector(R, d, p)
    eP_norm = float(np.linalg.norm(eP))
    return BoundReport(psi, float(np.sqrt(er2)), lower, upper, lower <= psi + slack, upper_ok,
                       eP_norm, abs(eP_norm - np.sqrt(er2)) <= eP_tol * max(1.0, eP_norm))


# -- critical points ----------------------------------------------------------

# Each mode function has four critical direction pairs. A pair is written as
# ((sign, index), (sign, index)) with index 1, 2, 3 meaning r_d1, r_d2, r_d1 x r_d2.
_CRITICAL_AXES = {Mode.I: (1, 2), Mode.II: (1, 3), Mode.III: (3, 2)}


@dataclass(frozen=True)
class CriticalPoint:
    mode: Mode
    r1: tuple[int, int]
    r2: tuple[int, int]

    @property
    def desired(self) -> bool:
        return self.mode == Mode.I and self.r1 == (1, 1) and self.r2 == (1, 2)

    @property
    def label(self) -> str:
        def name(s):
            return ("+" if s[0] > 0 else "-") + ("r_d1", "r_d2", "r_d3")[s[1] - 1]
        return f"{self.mode.name}:({name(self.r1)},{name(self.r2)})"

    def rotation(self, d: DesiredState, p: ShapeParams) -> np.ndarray:
        basis = (d.r_d1, d.r_d2, d.r_d3)
        r1 = self.r1[0] * basis[self.r1[1] - 1]
        r2 = self.r2[0] * basis[self.r2[1] - 1]
        return frame_from_directions(r1, r2, p.b1, p.b2)


def critical_points() -> list[CriticalPoint]:
    """All twelve critical direction pairs, desired point first."""
    pts = []
    for mode in MODES:
        a1, a2 = _CRITICAL_AXES[mode]
        for s1, s2 in product((1, -1), repeat=2):
            pts.append(CriticalPoint(mode, (s1, a1), (s2, a2)))
    return pts


def exact_mode_values(cp: CriticalPoint, p: ShapeParams) -> tuple[Fraction, Fraction, Fraction]:
    """Mode function values at a critical pair, in exact rational arithmetic."""
    k1, k2, alpha, beta = map(_exact, (p.k1, p.k2, p.alpha, p.beta))

    def dot(s, j):
        return s[0] if s[1] == j else 0

    n1 = 1 - dot(cp.r1, 1)
    n2 = 1 - dot(cp.r2, 2)
    x1 = alpha + beta * dot(cp.r1, 3)
    x2 = alpha + beta * dot(cp.r2, 3)
    return k1 * n1 + k2 * n2, k1 * n1 + k2 * x2, k1 * x1 + k2 * n2


@dataclass(frozen=True)
class CriticalMargin:
    point: CriticalPoint
    values: tuple[Fraction, Fraction, Fraction]
    gap: Fraction
    margin: Fraction

    @property
    def in_jump_set(self) -> bool:
        return self.margin >= 0


def critical_point_margins(p: ShapeParams) -> list[CriticalMargin]:
    """``Psi_m - rho - delta`` at each undesired critical point of mode ``m``, exactly."""
    delta = _exact(p.delta)
    out = []
    for cp in critical_points():
        if cp.desired:
            continue
        vals = exact_mode_values(cp, p)
        gap = vals[int(cp.mode) - 1] - min(vals)
        out.append(CriticalMargin(cp, vals, gap, gap - delta))
    return out
