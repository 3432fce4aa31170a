"""Closed-loop simulation with hybrid flow/jump execution.

The continuous state ``(R, Omega, e_I)`` is advanced with the classical
fourth-order Runge-Kutta scheme and ``R`` is projected back onto SO(3) after
every full step. Jumps are checked only at step boundaries (including
``t = 0``); a jump changes the mode and nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .control import (ControllerSpec, ControllerState, JumpVariant, PlantParams, _control,
                      coupling_bound)
from .errfun import Mode, _psi_modes, bound_constants, e_total, psi_mode, psi_modes
from .errors import NonFiniteState, NotPositiveDefinite, ValidationError, ZenoSuspected
from .so3 import _cross, _hat, _project, _vec, as_rotation
from .trajectory import DesiredSamples, DesiredState, DesiredTrajectory, EulerCommand, omega_bound

MAX_CONSECUTIVE_JUMPS = 3
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class HybridState:
    t: float
    R: np.ndarray
    Omega: np.ndarray
    cstate: ControllerState = field(default_factory=ControllerState)

    def __post_init__(self):
        object.__setattr__(self, "R", as_rotation(self.R))
        object.__setattr__(self, "Omega", _vec(self.Omega))
        if not np.all(np.isfinite(self.Omega)):
            raise NonFiniteState("Omega has non-finite entries")

    @property
    def mode(self) -> Mode:
        return self.cstate.mode

    @property
    def e_I(self) -> np.ndarray:
        return self.cstate.e_I


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    T: float = 20.0
    record_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValidationError("dt and T must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValidationError("record_every must be an integer >= 1")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValidationError(f"T={self.T} is not a whole number of steps of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_every + 1


@dataclass(frozen=True)
class JumpEvent:
    t: float
    mode_before: Mode
    mode_after: Mode
    Psi_before: float
    Psi_after: float
    V_before: float
    V_after: float
    e_Omega_norm: float

    @property
    def psi_decrease(self) -> float:
        return self.Psi_before - self.Psi_after

    @property
    def V_decrease(self) -> float:
        return self.V_before - self.V_after


@dataclass
class Trace:
    """Time-indexed record of a run; every attribute is an array over samples."""

    kind: str
    t: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    mode: np.ndarray
    u: np.ndarray
    e: np.ndarray
    e_Omega: np.ndarray
    e_I: np.ndarray
    psi: np.ndarray
    rho: np.ndarray
    rotdist: np.ndarray
    U: np.ndarray
    V: np.ndarray
    desired: DesiredSamples
    boundary_hits: int = 0

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> HybridState:
        return HybridState(float(self.t[i]), self.R[i], self.Omega[i],
                           ControllerState(Mode(int(self.mode[i])), self.e_I[i]))

    def orthonormality_drift(self) -> float:
        RtR = np.swapaxes(self.R, 1, 2) @ self.R
        return float(np.max(np.linalg.norm(RtR - np.eye(3), axis=(1, 2))))


# -- compiled kernels -----------------------------------------------------------

@njit(cache=True)
def _dynamics(R, W, u, J, J_inv, Delta):
    Rdot = R @ _hat(W)
    Wdot = J_inv @ (u + Delta - _cross(W, J @ W))
    return Rdot, Wdot


@njit(cache=True)
def _flow(R, W, eI, mode, integral, des, b1, b2, g, J, J_inv, Delta, u_open):
    # g = [k1, k2, alpha, beta, delta, k_Omega, k_I, c]; mode 0 applies the constant u_open
    if mode == 0:
        Rdot, Wdot = _dynamics(R, W, u_open, J, J_inv, Delta)
        return Rdot, Wdot, np.zeros(3)
    u, e, eW = _control(mode, integral, R, W, eI, des[0], des[1], des[2], des[3], b1, b2,
                        g[0], g[1], g[3], g[5], g[6], J)
    Rdot, Wdot = _dynamics(R, W, u, J, J_inv, Delta)
    if integral:
        Idot = g[7] * e + eW
    else:
        Idot = np.zeros(3)
    return Rdot, Wdot, Idot


@njit(cache=True)
def _rk4_step(R, W, eI, mode, integral, d0, dm, d1, dt, b1, b2, g, J, J_inv, Delta, u_open):
    aR, aW, aI = _flow(R, W, eI, mode, integral, d0, b1, b2, g, J, J_inv, Delta, u_open)
    h = 0.5 * dt
    bR, bW, bI = _flow(R + h * aR, W + h * aW, eI + h * aI, mode, integral, dm, b1, b2, g, J, J_inv,
                       Delta, u_open)
    cR, cW, cI = _flow(R + h * bR, W + h * bW, eI + h * bI, mode, integral, dm, b1, b2, g, J, J_inv,
                       Delta, u_open)
    dR, dW, dI = _flow(R + dt * cR, W + dt * cW, eI + dt * cI, mode, integral, d1, b1, b2, g, J, J_inv,
                       Delta, u_open)
    s = dt / 6.0
    R_new = R + s * (aR + 2.0 * bR + 2.0 * cR + dR)
    W_new = W + s * (aW + 2.0 * bW + 2.0 * cW + dW)
    I_new = eI + s * (aI + 2.0 * bI + 2.0 * cI + dI)
    if np.all(np.isfinite(R_new)):
        R_new = _project(R_new)
    return R_new, W_new, I_new


@njit(cache=True)
def _grow(buf, n):
    if n < buf.shape[0]:
        return buf
    out = np.empty((2 * buf.shape[0], buf.shape[1]))
    out[: buf.shape[0]] = buf
    return out


@njit(cache=True)
def _integrate(R0, W0, I0, mode0, n_steps, record_every, des, dt, hybrid, integral,
               b1, b2, g, J, J_inv, Delta):
    """Run the hybrid loop on the half-step grid ``des`` of shape ``(2 n + 1, 4, 3)``.

    Returns records, jump rows ``[k, mode_before, mode_after, R(9), W(3), e_I(3)]``,
    the number of near-boundary jump checks, and ``(status, k)`` where status
    is 0 for success, 1 for a non-finite state and 2 for too many consecutive jumps.
    """
    n_rec = n_steps // record_every + 1
    rec_R = np.empty((n_rec, 3, 3))
    rec_W = np.empty((n_rec, 3))
    rec_I = np.empty((n_rec, 3))
    rec_mode = np.empty(n_rec, dtype=np.int64)
    jumps = np.empty((16, 18))
    n_jumps = 0
    boundary = 0
    status = 0
    fail_k = -1
    R = R0.copy()
    W = W0.copy()
    eI = I0.copy()
    u_open = np.zeros(3)
    mode = mode0
    delta = g[4]
    w_cap = delta / (4.0 * g[7] * (g[0] + g[1])) if g[7] > 0 else np.inf
    for k in range(n_steps + 1):
        if hybrid:
            d = des[2 * k]
            consecutive = 0
            while True:
                psis = _psi_modes(R, d[0], d[1], b1, b2, g[0], g[1], g[2], g[3])
                gap = psis[mode - 1] - np.min(psis)
                if abs(gap - delta) <= 1e-9:
                    boundary += 1
                if gap < delta:
                    break
                if integral:
                    eW = W - R.T @ d[2]
                    if math.sqrt(eW @ eW) > w_cap:
                        break
                consecutive += 1
                if consecutive > 3:
                    status = 2
                    break
                new_mode = np.argmin(psis) + 1
                jumps = _grow(jumps, n_jumps)
                jumps[n_jumps, 0] = k
                jumps[n_jumps, 1] = mode
                jumps[n_jumps, 2] = new_mode
                jumps[n_jumps, 3:12] = R.ravel()
                jumps[n_jumps, 12:15] = W
                jumps[n_jumps, 15:18] = eI
                n_jumps += 1
                mode = new_mode
            if status != 0:
                fail_k = k
                break
        if k % record_every == 0:
            i = k // record_every
            rec_R[i] = R
            rec_W[i] = W
            rec_I[i] = eI
            rec_mode[i] = mode
        if k == n_steps:
            break
        R, W, eI = _rk4_step(R, W, eI, mode, integral, des[2 * k], des[2 * k + 1], des[2 * k + 2],
                             dt, b1, b2, g, J, J_inv, Delta, u_open)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(W)) and np.all(np.isfinite(eI))):
            status = 1
            fail_k = k + 1
            break
    return rec_R, rec_W, rec_I, rec_mode, jumps[:n_jumps], boundary, status, fail_k


@njit(cache=True)
def _integrate_open(R0, W0, u, n_steps, dt, J, J_inv, Delta):
    R_out = np.empty((n_steps + 1, 3, 3))
    W_out = np.empty((n_steps + 1, 3))
    R_out[0] = R0
    W_out[0] = W0
    des = np.zeros((4, 3))
    g = np.zeros(8)
    eI = np.zeros(3)
    for k in range(n_steps):
        R, W, _ = _rk4_step(R_out[k], W_out[k], eI, 0, False, des, des, des, dt, des[0], des[1],
                            g, J, J_inv, Delta, u)
        R_out[k + 1] = R
        W_out[k + 1] = W
    return R_out, W_out


@njit(cache=True)
def _trace_quantities(R, W, eI, modes, des, Rd, hybrid, integral, b1, b2, g, J, Delta):
    n = R.shape[0]
    u = np.empty((n, 3))
    e = np.empty((n, 3))
    eW = np.empty((n, 3))
    psi = np.empty(n)
    rho = np.empty(n)
    rot = np.empty(n)
    U = np.empty(n)
    V = np.empty(n)
    for i in range(n):
        d = des[i]
        ui, ei, wi = _control(modes[i], integral, R[i], W[i], eI[i], d[0], d[1], d[2], d[3],
                              b1, b2, g[0], g[1], g[3], g[5], g[6], J)
        psis = _psi_modes(R[i], d[0], d[1], b1, b2, g[0], g[1], g[2], g[3])
        u[i] = ui
        e[i] = ei
        eW[i] = wi
        psi[i] = psis[modes[i] - 1]
        rho[i] = np.min(psis)
        diff = R[i] - Rd[i]
        rot[i] = math.sqrt(np.sum(diff * diff))
        U[i] = 0.5 * (wi @ (J @ wi)) + psi[i]
        V[i] = U[i] + _cross_term(hybrid, g[7], wi, ei, J)
        if integral:
            z = eI[i] - Delta / g[6]
            V[i] += 0.5 * g[6] * (z @ z)
    return u, e, eW, psi, rho, rot, U, V


@njit(cache=True)
def _cross_term(hybrid, c, eW, e, J):
    if hybrid:
        return c * (eW @ e)
    return c * ((J @ eW) @ e)


_SAMPLE_CACHE: dict = {}
_SAMPLE_CACHE_SIZE = 4


def _grid_samples(traj: DesiredTrajectory, dt: float, n: int) -> DesiredSamples:
    """Desired trajectory on the half-step grid, memoized for repeated runs."""
    key = (traj.cmd, traj.b1.tobytes(), traj.b2.tobytes(), float(dt), int(n))
    hit = _SAMPLE_CACHE.get(key)
    if hit is None:
        hit = traj.sample(np.arange(2 * n + 1) * (0.5 * dt))
        if len(_SAMPLE_CACHE) >= _SAMPLE_CACHE_SIZE:
            _SAMPLE_CACHE.pop(next(iter(_SAMPLE_CACHE)))
        _SAMPLE_CACHE[key] = hit
    return hit


def _pack(spec: ControllerSpec, plant: PlantParams):
    s = spec.shape
    g = np.array([s.k1, s.k2, s.alpha, s.beta, s.delta, spec.k_Omega, spec.k_I, spec.c], dtype=float)
    return s.b1, s.b2, g, plant.J, np.ascontiguousarray(plant.J_inv), plant.Delta


def _trajectory(cmd_or_traj, spec: ControllerSpec) -> DesiredTrajectory:
    if isinstance(cmd_or_traj, DesiredTrajectory):
        return cmd_or_traj
    if isinstance(cmd_or_traj, EulerCommand):
        return DesiredTrajectory(cmd_or_traj, spec.shape.b1, spec.shape.b2)
    raise TypeError("expected an EulerCommand or DesiredTrajectory")


# -- public operations --------------------------------------------------------

def dynamics_rhs(R, Omega, u, plant: PlantParams):
    """``(dR/dt, dOmega/dt)`` of ``J dOmega/dt + Omega x J Omega = u + Delta``, ``dR/dt = R Omega^``."""
    return _dynamics(np.ascontiguousarray(R, dtype=float), _vec(Omega), _vec(u), plant.J,
                     np.ascontiguousarray(plant.J_inv), plant.Delta)


def run_open_loop(R0, Omega0, plant: PlantParams, dt: float, n_steps: int, u=None):
    """Integrate the rigid body under a constant moment ``u`` (default zero).

    Uses the same stage scheme and projection as :func:`run`; returns the
    attitude and angular velocity at every step.
    """
    u = np.zeros(3) if u is None else _vec(u)
    return _integrate_open(as_rotation(R0), _vec(Omega0), u, int(n_steps), float(dt), plant.J,
                           np.ascontiguousarray(plant.J_inv), plant.Delta)


def step(state: HybridState, trajectory, spec: ControllerSpec, plant: PlantParams, dt: float) -> HybridState:
    """One RK4 flow step; the mode is left unchanged."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    traj = _trajectory(trajectory, spec)
    des = traj.sample([state.t, state.t + 0.5 * dt, state.t + dt]).packed()
    b1, b2, g, J, J_inv, Delta = _pack(spec, plant)
    mode = int(state.mode) if spec.kind.hybrid else 1
    R, W, eI = _rk4_step(state.R, state.Omega, state.e_I, mode, spec.kind.integral,
                         des[0], des[1], des[2], float(dt), b1, b2, g, J, J_inv, Delta, np.zeros(3))
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(W)) and np.all(np.isfinite(eI))):
        raise NonFiniteState(f"non-finite state after step at t={state.t + dt:g}")
    return HybridState(state.t + dt, R, W, ControllerState(state.mode, eI))


def run(init: HybridState, trajectory, spec: ControllerSpec, plant: PlantParams,
        cfg: SimConfig) -> tuple[Trace, list[JumpEvent]]:
    """Simulate from ``init`` over ``[0, cfg.T]``.

    ``init.t`` is ignored; time starts at zero. Returns the trace (one sample
    every ``cfg.record_every`` steps) and the list of jumps.
    """
    traj = _trajectory(trajectory, spec)
    n = cfg.n_steps
    samples = _grid_samples(traj, cfg.dt, n)
    grid = samples.t
    des = samples.packed()
    b1, b2, g, J, J_inv, Delta = _pack(spec, plant)
    hybrid, integral = spec.kind.hybrid, spec.kind.integral
    mode0 = int(init.mode) if hybrid else 1
    rec_R, rec_W, rec_I, rec_mode, jump_rows, boundary, status, fail_k = _integrate(
        init.R, init.Omega, init.e_I, mode0, n, int(cfg.record_every), des, float(cfg.dt),
        hybrid, integral, b1, b2, g, J, J_inv, Delta)
    if status == 1:
        raise NonFiniteState(f"non-finite state at t={fail_k * cfg.dt:g}")
    if status == 2:
        raise ZenoSuspected(f"more than {MAX_CONSECUTIVE_JUMPS} consecutive jumps at t={fail_k * cfg.dt:g}")

    idx = np.arange(cfg.n_records) * cfg.record_every * 2
    rec_des = DesiredSamples(grid[idx], samples.R_d[idx], samples.omega_d[idx], samples.omega_d_dot[idx],
                             samples.r_d1[idx], samples.r_d2[idx])
    u, e, eW, psi, rho_, rot, U, V = _trace_quantities(
        rec_R, rec_W, rec_I, rec_mode, np.ascontiguousarray(des[idx]), rec_des.R_d, hybrid, integral,
        b1, b2, g, J, Delta)
    trace = Trace(spec.kind.value, rec_des.t, rec_R, rec_W, rec_mode, u, e, eW, rec_I, psi, rho_, rot,
                  U, V, rec_des, int(boundary))

    events = []
    for row in jump_rows:
        k = int(row[0])
        d = samples.at(2 * k)
        R = _project(row[3:12].reshape(3, 3).copy())
        before = HybridState(k * cfg.dt, R, row[12:15], ControllerState(Mode(int(row[1])), row[15:18]))
        after = HybridState(k * cfg.dt, R, row[12:15], ControllerState(Mode(int(row[2])), row[15:18]))
        events.append(JumpEvent(
            t=k * cfg.dt, mode_before=before.mode, mode_after=after.mode,
            Psi_before=psi_mode(before.mode, R, d, spec.shape),
            Psi_after=psi_mode(after.mode, R, d, spec.shape),
            V_before=lyapunov_Vm(before, d, spec, plant, spec.jump_variant),
            V_after=lyapunov_Vm(after, d, spec, plant, spec.jump_variant),
            e_Omega_norm=float(np.linalg.norm(row[12:15] - R.T @ d.omega_d))))
    return trace, events


# -- Lyapunov instrumentation -------------------------------------------------

def _errors(state: HybridState, d: DesiredState, spec: ControllerSpec):
    mode = state.mode if spec.kind.hybrid else Mode.I
    e = e_total(mode, state.R, d, spec.shape)
    eW = state.Omega - state.R.T @ d.omega_d
    return mode, e, eW


def lyapunov_U(state: HybridState, d: DesiredState, spec: ControllerSpec, plant: PlantParams) -> float:
    """``1/2 e_Omega . J e_Omega + Psi`` of the active mode."""
    mode, _, eW = _errors(state, d, spec)
    return float(0.5 * eW @ plant.J @ eW + psi_mode(mode, state.R, d, spec.shape))


def _integral_term(state: HybridState, spec: ControllerSpec, plant: PlantParams) -> float:
    z = state.e_I - plant.Delta / spec.k_I
    return float(0.5 * spec.k_I * z @ z)


def lyapunov_V(state: HybridState, d: DesiredState, spec: ControllerSpec, plant: PlantParams) -> float:
    """Smooth-controller Lyapunov function with the ``c J e_Omega . e_r`` cross term.

    The integral kinds add ``k_I/2 ||e_I - Delta/k_I||^2``, which reads the
    plant disturbance and is meant for diagnostics only.
    """
    _, e, eW = _errors(state, d, spec)
    V = 0.5 * eW @ plant.J @ eW + psi_mode(Mode.I, state.R, d, spec.shape) + spec.c * (plant.J @ eW) @ e
    if spec.kind.integral:
        V += _integral_term(state, spec, plant)
    return float(V)


def lyapunov_Vm(state: HybridState, d: DesiredState, spec: ControllerSpec, plant: PlantParams,
                variant: JumpVariant = JumpVariant.PLAIN) -> float:
    """Hybrid Lyapunov function ``1/2 e_Omega . J e_Omega + Psi_m + c e_Omega . e_H``.

    The integral variant adds ``k_I/2 ||e_I - Delta/k_I||^2`` (diagnostics only).
    """
    mode, e, eW = _errors(state, d, spec)
    V = 0.5 * eW @ plant.J @ eW + psi_mode(mode, state.R, d, spec.shape) + spec.c * eW @ e
    if JumpVariant(variant) is JumpVariant.INTEGRAL:
        V += _integral_term(state, spec, plant)
    return float(V)


def lyapunov_value(state: HybridState, d: DesiredState, spec: ControllerSpec, plant: PlantParams) -> float:
    """The Lyapunov function recorded in traces for ``spec.kind``."""
    if spec.kind.hybrid:
        return lyapunov_Vm(state, d, spec, plant, spec.jump_variant)
    return lyapunov_V(state, d, spec, plant)


def matrices_M(spec: ControllerSpec, plant: PlantParams, psi_cap: float, B: float,
               c: float | None = None, check: bool = True):
    """The 2x2 matrices bounding the smooth Lyapunov function in ``z = [||e_r||, ||e_Omega||]``.

    ``z^T M1 z <= V <= z^T M2 z`` (upper bound when ``Psi <= psi_cap``) and
    ``dV/dt <= -z^T M3 z``.
    """
    c = spec.c if c is None else c
    h = bound_constants(spec.shape.k1, spec.shape.k2)
    if not psi_cap < h.h1:
        raise ValidationError(f"psi_cap={psi_cap} must be below h1={h.h1}")
    lm, lM = plant.lambda_m, plant.lambda_M
    k, kW = spec.shape.k, spec.k_Omega
    M1 = 0.5 * np.array([[2 * h.h1 / (h.h2 + h.h3), -c * lM], [-c * lM, lm]])
    M2 = 0.5 * np.array([[2 * h.h1 * h.h4 / (h.h5 * (h.h1 - psi_cap)), c * lM], [c * lM, lM]])
    M3 = np.array([[c, -c * (B + kW) / 2], [-c * (B + kW) / 2, kW - c * k * (1 + lM)]])
    if check:
        for name, M in (("M1", M1), ("M2", M2), ("M3", M3)):
            if not (M[0, 0] > 0 and np.linalg.det(M) > 0):
                raise NotPositiveDefinite(f"{name} is not positive definite: {M.tolist()}")
    return M1, M2, M3


def in_estimate_region(state: HybridState, d: DesiredState, spec: ControllerSpec, plant: PlantParams,
                       psi: float) -> bool:
    """Initial-condition estimate of the exponential-stability region of the smooth controller."""
    h1 = bound_constants(spec.shape.k1, spec.shape.k2).h1
    Psi0 = psi_mode(Mode.I, state.R, d, spec.shape)
    eW = state.Omega - state.R.T @ d.omega_d
    return Psi0 <= psi < h1 and eW @ eW <= 2.0 / plant.lambda_M * (psi - Psi0)


def feedforward_bound(cmd: EulerCommand, plant: PlantParams, T: float, dt: float) -> float:
    """``B`` for a run: ``||2J - tr(J) I||_2`` times sup of ``||omega_d||`` on the run grid."""
    return coupling_bound(plant, omega_bound(cmd, T, dt))


def mode_values(state: HybridState, d: DesiredState, spec: ControllerSpec) -> np.ndarray:
    return psi_modes(state.R, d, spec.shape)
