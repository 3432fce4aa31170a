"""Numerical property checks over the library and over simulated traces.

Every check returns a :class:`CheckResult` carrying the measured quantity
and the threshold it was compared with, so reports show margins rather
than bare booleans. Checks that need simulations build them from the
bundled scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .config import RunConfig, load_case
from .control import ControllerKind, JumpVariant, PlantParams
from .errfun import (Mode, ShapeParams, bound_constants, critical_point_margins,
                     critical_points, e_r_i, e_total, psi_bounds_check, psi_mode, psi_trace_form)
from .sim import HybridState, JumpEvent, SimConfig, Trace, matrices_M, run, run_open_loop
from .so3 import exp_so3, hat, log_so3, project_to_so3, random_rotations, vee
from .trajectory import DesiredTrajectory, reference_command


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        s = f"{status} {self.name}: measured={self.measured:.9g} threshold={self.threshold:.9g}"
        return f"{s} ({self.detail})" if self.detail else s

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": float(self.measured),
                "threshold": float(self.threshold), "detail": self.detail, "extra": self.extra}


def _result(name, measured, threshold, ok=None, detail="", **extra) -> CheckResult:
    measured = float(measured)
    passed = bool(measured <= threshold) if ok is None else bool(ok)
    return CheckResult(name, passed and math.isfinite(measured), measured, float(threshold), detail, extra)


def central_difference(y: np.ndarray, h: float) -> tuple[np.ndarray, slice]:
    """Five-point central derivative of samples ``y`` along axis 0; valid on ``[2, n-2)``."""
    d = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return d, slice(2, len(y) - 2)


# The five-point stencil amplifies per-sample round-off by 1.5 / h. Attitudes
# carry about 10 eps after projection, so at h = 1e-3 derivatives are resolved
# to roughly 5e-12 absolute. A 1e-6 relative comparison is meaningful only
# above 5e-6, about 1e-5 of the largest values seen along the bundled traces,
# and relative errors are floored there.
RESOLUTION_FLOOR = 1e-5


def relative_error(approx: np.ndarray, exact: np.ndarray, floor: float = RESOLUTION_FLOOR) -> float:
    """Largest ``|approx - exact|`` scaled by ``max(|exact|, floor * max|exact|)``.

    The floor keeps converged tails and sign changes of ``exact`` from
    turning round-off into an unbounded ratio.
    """
    scale = np.maximum(np.abs(exact), floor * np.max(np.abs(exact)))
    return float(np.max(np.abs(approx - exact) / scale))


# -- scenario cache -------------------------------------------------------------

_RUNS: dict = {}


def scenario(case: str, kind, **sim) -> tuple[RunConfig, Trace, list[JumpEvent]]:
    """Bundled scenario under ``kind``; results are memoized per process."""
    key = (case, ControllerKind(kind).value, tuple(sorted(sim.items())))
    if key not in _RUNS:
        cfg = load_case(case, kind, **sim)
        trace, jumps = run(cfg.init, cfg.trajectory, cfg.spec, cfg.plant, cfg.sim)
        _RUNS[key] = (cfg, trace, jumps)
    return _RUNS[key]


def bundled_runs():
    """Every bundled case under every controller kind."""
    for case in ("case1", "case2", "case3"):
        for kind in ControllerKind:
            yield (case, kind.value), scenario(case, kind)


# -- algebraic layer ------------------------------------------------------------

def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _mv(A, x):
    return np.einsum("...ij,...j->...i", A, x)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


def check_hat_identities(n: int = 10_000, seed: int = 0, tol: float = 1e-13) -> CheckResult:
    rng = np.random.default_rng(seed)
    x, y, z = rng.standard_normal((3, n, 3))
    A = rng.standard_normal((n, 3, 3))
    R = random_rotations(n, seed + 1)
    At = np.swapaxes(A, 1, 2)
    Rt = np.swapaxes(R, 1, 2)
    hx, hy, hz = hat(x), hat(y), hat(z)
    xy = np.cross(x, y)
    trA = np.trace(A, axis1=1, axis2=2)[:, None, None]
    worst = np.array([
        _maxabs(_dot(x, _mv(hy, z)) - _dot(y, _mv(hz, x))),
        _maxabs(_mv(hx @ hy, z) - (_dot(x, z)[:, None] * y - _dot(x, y)[:, None] * z)),
        max(_maxabs(hat(xy) - (hx @ hy - hy @ hx)),
            _maxabs(hat(xy) - (y[:, :, None] * x[:, None, :] - x[:, :, None] * y[:, None, :]))),
        _maxabs(np.trace(A @ hx, axis1=1, axis2=2) + _dot(x, vee(A - At, tol=np.inf))),
        _maxabs(hx @ A + At @ hx - hat(_mv(trA * np.eye(3) - A, x))),
        _maxabs(R @ hx @ Rt - hat(_mv(R, x))),
        _maxabs(_mv(R, xy) - np.cross(_mv(R, x), _mv(R, y))),
    ])
    return _result("hat_identities", worst.max(), tol,
                   detail=f"{n} samples, per identity {np.array2string(worst, precision=2)}")


def check_exp_log_projection(n: int = 10_000, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    # rotation vectors inside the ball of radius pi - 1e-3, where log is single valued
    dirs = rng.standard_normal((n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    v = dirs * ((np.pi - 1e-3) * rng.random(n) ** (1 / 3))[:, None]
    R = exp_so3(v)
    P = project_to_so3(R)
    worst = (
        _maxabs(R @ exp_so3(-v) - np.eye(3)),
        _maxabs(log_so3(R) - v),
        _maxabs(P - R),
        _maxabs(project_to_so3(P) - P),
    )
    return _result("exp_log_projection", max(worst), tol,
                   detail="exp(v)exp(-v)=I {:.1e}, log(exp v)=v {:.1e}, project(R)=R {:.1e}, "
                          "idempotent {:.1e}".format(*worst))


# -- error function properties --------------------------------------------------

def _er_components(trace: Trace, p: ShapeParams):
    """``e_r1, e_r2`` along a trace, vectorized."""
    Rt = np.swapaxes(trace.R, 1, 2)
    e1 = np.cross(np.einsum("nij,nj->ni", Rt, trace.desired.r_d1), p.b1)
    e2 = np.cross(np.einsum("nij,nj->ni", Rt, trace.desired.r_d2), p.b2)
    return e1, e2


def default_error_vector(R, d, p: ShapeParams) -> np.ndarray:
    return e_total(Mode.I, R, d, p)


def check_psi_rate(trace: Trace, cfg: RunConfig, error_vector: Callable = default_error_vector,
                   tol: float = 1e-4) -> CheckResult:
    """``dPsi/dt`` by central differences against ``e_r . e_Omega`` along a smooth trace.

    ``error_vector(R, d, p)`` is pluggable so that a deliberately broken
    implementation can be shown to fail this check.
    """
    p = cfg.spec.shape
    h = cfg.sim.dt * cfg.sim.record_every
    psi = np.array([psi_mode(Mode.I, trace.R[i], trace.desired.at(i), p) for i in range(len(trace))])
    er = np.array([error_vector(trace.R[i], trace.desired.at(i), p) for i in range(len(trace))])
    dpsi, sl = central_difference(psi, h)
    rate = np.einsum("ni,ni->n", er[sl], trace.e_Omega[sl])
    err = relative_error(dpsi, rate)
    return _result("psi_rate", err, tol, detail=f"{cfg.name}/{cfg.spec.kind.value}, {len(dpsi)} samples")


def check_er_rate(trace: Trace, cfg: RunConfig, slack: float = 1e-6) -> CheckResult:
    """``||d e_ri/dt|| <= ||e_Omega||`` and ``||d e_r/dt|| <= k ||e_Omega||`` pointwise."""
    p = cfg.spec.shape
    h = cfg.sim.dt * cfg.sim.record_every
    e1, e2 = _er_components(trace, p)
    eW = np.linalg.norm(trace.e_Omega, axis=1)
    worst = raw = -np.inf
    for e, scale in ((e1, 1.0), (e2, 1.0), (p.k1 * e1 + p.k2 * e2, p.k)):
        de, sl = central_difference(e, h)
        bound = scale * eW[sl]
        ratio = np.linalg.norm(de, axis=1) / np.maximum(bound, RESOLUTION_FLOOR * bound.max())
        worst = max(worst, float(np.max(ratio)))
        raw = max(raw, float(np.max(np.linalg.norm(de, axis=1)[bound > 0] / bound[bound > 0])))
    return _result("er_rate", worst, 1 + slack,
                   detail=f"max ||de/dt|| / (scale ||e_Omega||), unfloored max {raw:.8f}")


def check_psi_bounds(n: int = 10_000, seed: int = 0, p: ShapeParams | None = None) -> CheckResult:
    """Quadratic sandwich and the trace-form error vector on ``n`` attitudes with ``Psi <= 0.9 h1``."""
    p = p or _reference_shape()
    d = DesiredTrajectory(reference_command(), p.b1, p.b2).at(1.0)
    h1 = bound_constants(p.k1, p.k2).h1
    accepted = violations = 0
    worst_eP = worst_form = 0.0
    min_lower = min_upper = np.inf
    batch = 0
    while accepted < n:
        for R in random_rotations(4 * n, seed + batch):
            rep = psi_bounds_check(R, d, p)
            worst_eP = max(worst_eP, abs(rep.eP_norm - rep.er_norm))
            worst_form = max(worst_form, abs(psi_trace_form(R, d, p) - rep.psi))
            if not rep.eP_ok:
                violations += 1
            if rep.psi > 0.9 * h1:
                continue
            accepted += 1
            min_lower = min(min_lower, rep.lower_margin)
            min_upper = min(min_upper, rep.upper_margin)
            if not (rep.lower_ok and rep.upper_ok):
                violations += 1
            if accepted == n:
                break
        batch += 1
    return _result("psi_bounds", violations, 0,
                   ok=violations == 0 and worst_eP <= 1e-12 and worst_form <= 1e-12,
                   detail=f"{n} attitudes, min lower margin {min_lower:.3g}, min upper margin {min_upper:.3g}, "
                          f"max | ||e_P|| - ||e_r|| | {worst_eP:.2e}, max trace-form diff {worst_form:.2e}")


def check_critical_gradients(p: ShapeParams | None = None, n: int = 1000, seed: int = 0) -> CheckResult:
    """Gradients vanish at the twelve critical points and nowhere else that was sampled."""
    p = p or _reference_shape()
    d = DesiredTrajectory(reference_command(), p.b1, p.b2).at(1.0)
    at_points = max(float(np.linalg.norm(e_total(cp.mode, cp.rotation(d, p), d, p))) for cp in critical_points())
    crit = {m: [cp.rotation(d, p) for cp in critical_points() if cp.mode == m] for m in Mode}
    off = np.inf
    kept = 0
    for R in random_rotations(4 * n, seed):
        for m in Mode:
            if min(np.linalg.norm(log_so3(C.T @ R)) for C in crit[m]) < 0.1:
                break
        else:
            kept += 1
            off = min(off, min(float(np.linalg.norm(e_total(m, R, d, p))) for m in Mode))
            if kept == n:
                break
    return _result("critical_point_gradients", at_points, 1e-10, ok=at_points <= 1e-10 and off > 1e-3,
                   detail=f"max ||e|| at critical points {at_points:.2e}, min ||e|| at {kept} other attitudes {off:.3g}")


def check_critical_points_in_jump_set(p: ShapeParams | None = None) -> CheckResult:
    """All eleven undesired critical points lie in the jump set (exact arithmetic)."""
    p = p or _reference_shape()
    margins = critical_point_margins(p)
    worst = min(m.margin for m in margins)
    detail = ", ".join(f"{m.point.label}: {m.margin}" for m in margins)
    return CheckResult("critical_points_in_jump_set", all(m.in_jump_set for m in margins) and len(margins) == 11,
                       float(worst), 0.0, f"min exact margin {worst}; {detail}",
                       {"margins": {m.point.label: str(m.margin) for m in margins}})


# -- scenario values ------------------------------------------------------------

def check_case1_psi0() -> CheckResult:
    cfg, trace, _ = scenario("case1", "smooth")
    return _result("case1_psi0", abs(trace.psi[0] - 0.05), 1e-3, detail=f"Psi(0) = {trace.psi[0]:.6f}")


def check_case1_hybrid_matches_smooth(tol: float = 1e-9) -> CheckResult:
    _, ts, _ = scenario("case1", "smooth")
    _, th, jumps = scenario("case1", "hybrid")
    diff = max(np.max(np.abs(ts.R - th.R)), np.max(np.abs(ts.Omega - th.Omega)), np.max(np.abs(ts.u - th.u)))
    return _result("case1_no_jumps_identical", diff, tol, ok=diff <= tol and not jumps,
                   detail=f"{len(jumps)} jumps, max |smooth - hybrid| over R, Omega, u")


def check_case2_smooth_plateau(tol: float = 0.02) -> CheckResult:
    _, trace, _ = scenario("case2", "smooth")
    early = trace.t < 10.0
    dev = np.max(np.abs(trace.rotdist[early] - trace.rotdist[0])) / trace.rotdist[0]
    below = np.abs(trace.rotdist - trace.rotdist[0]) > tol * trace.rotdist[0]
    t_leave = float(trace.t[np.argmax(below)]) if below.any() else math.inf
    return _result("case2_smooth_plateau", dev, tol,
                   detail=f"max relative change of ||R - R_d|| for t < 10 s; leaves the 2% band at t = {t_leave:.3f} s")


def check_case2_hybrid_fast(tol: float = 0.1) -> CheckResult:
    _, trace, jumps = scenario("case2", "hybrid")
    i = int(np.argmin(np.abs(trace.t - 10.0)))
    return _result("case2_hybrid_converges", trace.rotdist[i], tol,
                   detail=f"||R - R_d|| at t = {trace.t[i]:g} s, {len(jumps)} jumps")


def check_case3_hybrid_error(threshold: float = 0.05) -> CheckResult:
    _, trace, _ = scenario("case3", "hybrid")
    final = float(np.linalg.norm(trace.e[-1]))
    return CheckResult("case3_hybrid_steady_error", final > threshold, final, threshold,
                       "final ||e_H|| must exceed the threshold")


def check_case3_integral(tol: float = 1e-2) -> CheckResult:
    cfg, trace, _ = scenario("case3", "hybrid-integral")
    eH = float(np.linalg.norm(trace.e[-1]))
    acc = float(np.linalg.norm(cfg.spec.k_I * trace.e_I[-1] - cfg.plant.Delta))
    return _result("case3_integral_converges", max(eH, acc), tol,
                   detail=f"final ||e_H|| = {eH:.4g}, ||k_I e_I - Delta|| = {acc:.4g} at t = {trace.t[-1]:g} s")


# -- hybrid structure -----------------------------------------------------------

def check_jump_decrease(tol: float = 1e-9) -> CheckResult:
    worst, count, runs = math.inf, 0, []
    for (case, kind), (cfg, _, jumps) in bundled_runs():
        for ev in jumps:
            count += 1
            worst = min(worst, ev.psi_decrease - cfg.spec.shape.delta)
        if jumps:
            runs.append(f"{case}/{kind}:{len(jumps)}")
    worst = worst if count else 0.0
    return CheckResult("jump_psi_decrease", count > 0 and worst >= -tol, worst, -tol,
                       f"min (Psi_before - Psi_after - delta) over {count} jumps in {', '.join(runs)}")


def check_integral_jump_decrease(tol: float = 1e-6) -> CheckResult:
    worst, count = math.inf, 0
    for (case, kind), (cfg, _, jumps) in bundled_runs():
        if cfg.spec.jump_variant is not JumpVariant.INTEGRAL:
            continue
        for ev in jumps:
            count += 1
            worst = min(worst, ev.V_decrease - cfg.spec.shape.delta / 2)
    worst = worst if count else 0.0
    return CheckResult("integral_jump_V_decrease", count > 0 and worst >= -tol, worst, -tol,
                       f"min (V_before - V_after - delta/2) over {count} integral-variant jumps")


def check_plain_jump_V_decrease() -> CheckResult:
    """Plain-variant jumps: V drops by at least ``delta - 2 c k ||e_Omega||``."""
    worst, count = math.inf, 0
    for (case, kind), (cfg, _, jumps) in bundled_runs():
        if cfg.spec.jump_variant is not JumpVariant.PLAIN:
            continue
        s = cfg.spec
        for ev in jumps:
            count += 1
            bound = s.shape.delta - 2 * s.c * s.shape.k * ev.e_Omega_norm
            worst = min(worst, ev.V_decrease - max(bound, 0.0))
    worst = worst if count else 0.0
    return CheckResult("plain_jump_V_decrease", count > 0 and worst >= -1e-9, worst, -1e-9,
                       f"min (V decrease - max(delta - 2ck||e_Omega||, 0)) over {count} plain-variant jumps")


# -- Lyapunov analytics ---------------------------------------------------------

def check_U_monotone(tol: float = 1e-9) -> CheckResult:
    _, trace, _ = scenario("case1", "smooth")
    rise = float(np.max(np.diff(trace.U)))
    return _result("U_nonincreasing", rise, tol, detail="max per-step increase of U, case1 smooth")


def check_U_rate(tol: float = 1e-3) -> CheckResult:
    cfg, trace, _ = scenario("case1", "smooth")
    dU, sl = central_difference(trace.U, cfg.sim.dt * cfg.sim.record_every)
    rate = -cfg.spec.k_Omega * np.einsum("ni,ni->n", trace.e_Omega[sl], trace.e_Omega[sl])
    return _result("U_rate", relative_error(dU, rate), tol, detail="dU/dt against -k_Omega ||e_Omega||^2, case1 smooth")


def _psi_cap(cfg: RunConfig) -> float:
    return 0.9 * bound_constants(cfg.spec.shape.k1, cfg.spec.shape.k2).h1


def _B(cfg: RunConfig) -> float:
    return float(cfg.metadata["B"])


def check_M_positive_definite() -> CheckResult:
    cfg = load_case("case1", "smooth")
    M = matrices_M(cfg.spec, cfg.plant, _psi_cap(cfg), _B(cfg), check=False)
    minors = [min(m[0, 0], np.linalg.det(m)) for m in M]
    return _result("M_positive_definite", min(minors), 0.0, ok=min(minors) > 0,
                   detail=f"c = {cfg.spec.c}, B = {_B(cfg):.4g}, smallest leading minors "
                          + ", ".join(f"M{i + 1}: {v:.4g}" for i, v in enumerate(minors)))


def _sandwich(cfg: RunConfig, trace: Trace):
    M1, M2, M3 = matrices_M(cfg.spec, cfg.plant, _psi_cap(cfg), _B(cfg))
    z = np.stack([np.linalg.norm(trace.e, axis=1), np.linalg.norm(trace.e_Omega, axis=1)], axis=1)
    quad = [np.einsum("ni,ij,nj->n", z, M, z) for M in (M1, M2, M3)]
    dV, sl = central_difference(trace.V, cfg.sim.dt * cfg.sim.record_every)
    inside = trace.psi <= _psi_cap(cfg)
    lower = np.min((trace.V - quad[0])[inside], initial=np.inf)
    upper = np.min((quad[1] - trace.V)[inside], initial=np.inf)
    rate = np.min((-quad[2][sl] + 1e-3 - dV)[inside[sl]], initial=np.inf)
    return lower, upper, rate, int(inside.sum())


def check_M_sandwich() -> CheckResult:
    worst, parts = math.inf, []
    for case in ("case1", "case2"):
        cfg, trace, _ = scenario(case, "smooth")
        lower, upper, rate, n = _sandwich(cfg, trace)
        worst = min(worst, lower, upper, rate)
        parts.append(f"{case}: {n} samples, margins {lower:.3g}/{upper:.3g}/{rate:.3g}")
    return CheckResult("M_sandwich", worst >= 0, worst, 0.0,
                       "min margin of z'M1z <= V, V <= z'M2z, dV/dt <= -z'M3z + 1e-3; " + "; ".join(parts))


def in_region_initial_states(cfg: RunConfig, n: int, seed: int) -> list[HybridState]:
    """Random initial states inside the exponential-stability estimate."""
    rng = np.random.default_rng(seed)
    d0 = cfg.trajectory.at(0.0)
    p = cfg.spec.shape
    psi_cap = _psi_cap(cfg)
    out = []
    while len(out) < n:
        R = exp_so3(rng.uniform(0.2, 2.0) * _unit(rng)) @ d0.R_d
        Psi0 = psi_mode(Mode.I, R, d0, p)
        if Psi0 > 0.5 * psi_cap:
            continue
        room = math.sqrt(2 / cfg.plant.lambda_M * (psi_cap - Psi0))
        eW = rng.uniform(0, 0.9) * room * _unit(rng)
        out.append(HybridState(0.0, R, R.T @ d0.omega_d + eW))
    return out


def _unit(rng) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def decay_slope(trace: Trace, floor: float = 1e-10) -> float:
    q = np.einsum("ni,ni->n", trace.e, trace.e) + np.einsum("ni,ni->n", trace.e_Omega, trace.e_Omega)
    keep = q > floor
    if keep.sum() < 2:
        return -math.inf
    return float(np.polyfit(trace.t[keep], np.log(q[keep]), 1)[0])


def check_decay(n_random: int = 4, seed: int = 0) -> CheckResult:
    cfg, trace, _ = scenario("case1", "smooth")
    slopes = [decay_slope(trace)]
    for state in in_region_initial_states(cfg, n_random, seed):
        tr, _ = run(state, cfg.trajectory, cfg.spec, cfg.plant, SimConfig(1e-3, 20.0, 10))
        slopes.append(decay_slope(tr))
    worst = max(slopes)
    return _result("decay_slope", worst, 0.0, ok=worst < 0,
                   detail="fitted slopes of log(||e_r||^2 + ||e_Omega||^2): " + ", ".join(f"{s:.3g}" for s in slopes))


# -- physics sanity -------------------------------------------------------------

def check_energy_drift(seed: int = 0, tol: float = 1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    plant = PlantParams(np.diag([3.0, 2.0, 1.0]))
    R0 = random_rotations(1, seed)[0]
    W0 = rng.standard_normal(3)
    _, W = run_open_loop(R0, W0, plant, 1e-3, 10_000)
    E = 0.5 * np.einsum("ni,ij,nj->n", W, plant.J, W)
    drift = float(np.max(np.abs(E - E[0])) / E[0])
    return _result("energy_drift", drift, tol, detail="torque-free rotation, dt = 1e-3, 10 s")


def _terminal(cfg: RunConfig, dt: float, T: float) -> np.ndarray:
    trace, jumps = run(cfg.init, cfg.trajectory, cfg.spec, cfg.plant, SimConfig(dt, T, int(round(T / dt))))
    return np.concatenate([trace.R[-1].ravel(), trace.Omega[-1], trace.e_I[-1]])


def check_convergence_order(dt: float = 0.02, T: float = 4.0, threshold: float = 3.7) -> CheckResult:
    """Self-convergence of the closed loop with integral state and a disturbance."""
    cfg = load_case("case3", "smooth-integral")
    cfg = replace(cfg, init=HybridState(0.0, np.eye(3), np.zeros(3)))
    ref = _terminal(cfg, dt / 8, T)
    e1 = np.linalg.norm(_terminal(cfg, dt, T) - ref)
    e2 = np.linalg.norm(_terminal(cfg, dt / 2, T) - ref)
    order = math.log2(e1 / e2)
    return CheckResult("convergence_order", order >= threshold, order, threshold,
                       f"errors {e1:.3e} (dt={dt}), {e2:.3e} (dt={dt / 2}) against dt={dt / 8}")


def check_orthonormality(tol: float = 1e-9) -> CheckResult:
    worst = max(trace.orthonormality_drift() for _, (_, trace, _) in bundled_runs())
    return _result("orthonormality", worst, tol, detail="max ||R'R - I||_F over all bundled runs")


# -- instability of the undesired equilibria ------------------------------------

def geodesic_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Rotation angle of ``A_i^T B_i`` for stacks of rotations."""
    M = np.swapaxes(A, 1, 2) @ B
    c = 0.5 * (np.trace(M, axis1=1, axis2=2) - 1)
    w = 0.5 * np.stack([M[:, 2, 1] - M[:, 1, 2], M[:, 0, 2] - M[:, 2, 0], M[:, 1, 0] - M[:, 0, 1]], axis=1)
    return np.arctan2(np.linalg.norm(w, axis=1), c)


def instability_probe(seeds: int = 10, T: float = 30.0, radius: float = 0.5, offset: float = 1e-3):
    """Exit times from a ball around each undesired equilibrium under the smooth controller.

    Returns ``{axis_label: [exit time or inf per seed]}``.
    """
    cfg = load_case("case1", "smooth")
    d = cfg.trajectory.at(0.0)
    sim = SimConfig(1e-3, T, 10)
    out = {}
    for label, axis_fn in (("r_d1", lambda s: s.r_d1), ("r_d2", lambda s: s.r_d2), ("r_d3", lambda s: s.r_d3)):
        times = []
        for seed in range(seeds):
            rng = np.random.default_rng(seed)
            R_eq = exp_so3(np.pi * axis_fn(d)) @ d.R_d
            R0 = exp_so3(offset * _unit(rng)) @ R_eq
            trace, _ = run(HybridState(0.0, R0, R0.T @ d.omega_d), cfg.trajectory, cfg.spec, cfg.plant, sim)
            des = trace.desired
            axes = {"r_d1": des.r_d1, "r_d2": des.r_d2, "r_d3": np.cross(des.r_d1, des.r_d2)}[label]
            eq = np.array([exp_so3(np.pi * a) for a in axes]) @ des.R_d
            dist = geodesic_distances(eq, trace.R)
            outside = dist > radius
            times.append(float(trace.t[np.argmax(outside)]) if outside.any() else math.inf)
        out[label] = times
    return out


def check_instability(seeds: int = 10) -> CheckResult:
    exits = instability_probe(seeds)
    worst = max(max(v) for v in exits.values())
    detail = "; ".join(f"exp(pi {k}^) R_d: exit times {min(v):.2f}-{max(v):.2f} s" for k, v in exits.items())
    return CheckResult("instability_probe", math.isfinite(worst), worst, 30.0, detail,
                       {"exit_times": {k: v for k, v in exits.items()}})


# -- helpers ----------------------------------------------------------------------

def _reference_shape() -> ShapeParams:
    return load_case("case1").spec.shape


def mutated_error_vector(R, d, p: ShapeParams) -> np.ndarray:
    """``e_r`` with the sign of the second term flipped (mutation fixture)."""
    return p.k1 * e_r_i(1, R, d, p) - p.k2 * e_r_i(2, R, d, p)


def check_mutation_er_sign() -> CheckResult:
    """The Psi-rate check must reject an error vector with a sign error."""
    cfg, trace, _ = scenario("case1", "smooth")
    res = check_psi_rate(trace, cfg, mutated_error_vector)
    return CheckResult("mutation_er_sign_detected", not res.passed, res.measured, res.threshold,
                       "psi_rate on a sign-flipped e_r must fail")


def check_mutation_delta() -> CheckResult:
    """Raising delta above its bound must remove critical points from the jump set."""
    p = _reference_shape()
    bad = ShapeParams.unchecked(k1=p.k1, k2=p.k2, alpha=p.alpha, beta=p.beta, delta=1.2, b1=p.b1, b2=p.b2)
    res = check_critical_points_in_jump_set(bad)
    return CheckResult("mutation_delta_detected", not res.passed, res.measured, res.threshold,
                       "critical_points_in_jump_set with delta = 1.2 must fail")

