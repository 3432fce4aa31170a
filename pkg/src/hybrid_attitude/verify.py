"""Named property checks grouped by the criterion they exercise."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Callable

from . import diagnostics as D
from .diagnostics import CheckResult

log = logging.getLogger(__name__)


def _on_case1(check):
    def run():
        cfg, trace, _ = D.scenario("case1", "smooth")
        return check(trace, cfg)
    return run


# (group, check) in report order
CHECKS: dict[str, tuple[str, Callable[[], CheckResult]]] = {
    "hat_identities": ("algebra", D.check_hat_identities),
    "exp_log_projection": ("algebra", D.check_exp_log_projection),
    "psi_rate": ("error-functions", _on_case1(D.check_psi_rate)),
    "er_rate": ("error-functions", _on_case1(D.check_er_rate)),
    "psi_bounds": ("error-functions", D.check_psi_bounds),
    "critical_point_gradients": ("error-functions", D.check_critical_gradients),
    "case1_psi0": ("scenarios", D.check_case1_psi0),
    "case1_no_jumps_identical": ("scenarios", D.check_case1_hybrid_matches_smooth),
    "case2_smooth_plateau": ("scenarios", D.check_case2_smooth_plateau),
    "case2_hybrid_converges": ("scenarios", D.check_case2_hybrid_fast),
    "case3_hybrid_steady_error": ("scenarios", D.check_case3_hybrid_error),
    "case3_integral_converges": ("scenarios", D.check_case3_integral),
    "critical_points_in_jump_set": ("hybrid", D.check_critical_points_in_jump_set),
    "jump_psi_decrease": ("hybrid", D.check_jump_decrease),
    "plain_jump_V_decrease": ("hybrid", D.check_plain_jump_V_decrease),
    "integral_jump_V_decrease": ("hybrid", D.check_integral_jump_decrease),
    "U_nonincreasing": ("lyapunov", D.check_U_monotone),
    "U_rate": ("lyapunov", D.check_U_rate),
    "M_positive_definite": ("lyapunov", D.check_M_positive_definite),
    "M_sandwich": ("lyapunov", D.check_M_sandwich),
    "decay_slope": ("lyapunov", D.check_decay),
    "energy_drift": ("physics", D.check_energy_drift),
    "convergence_order": ("physics", D.check_convergence_order),
    "orthonormality": ("physics", D.check_orthonormality),
    "instability_probe": ("instability", D.check_instability),
    "mutation_er_sign_detected": ("mutation", D.check_mutation_er_sign),
    "mutation_delta_detected": ("mutation", D.check_mutation_delta),
}


def select(filter_: str | None = None) -> list[str]:
    """Check names whose name or group contains ``filter_``."""
    if not filter_:
        return list(CHECKS)
    return [n for n, (g, _) in CHECKS.items() if filter_ in n or filter_ in g]


def run_checks(names: list[str], echo: Callable[[str], None] | None = None) -> list[dict]:
    report = []
    for name in names:
        group, fn = CHECKS[name]
        start = time.perf_counter()
        try:
            res = fn()
        except Exception as exc:  # a crashing check is a failed check
            log.exception("check %s raised", name)
            res = CheckResult(name, False, float("nan"), float("nan"), f"raised {type(exc).__name__}: {exc}")
        entry = res.to_dict() | {"group": group, "seconds": round(time.perf_counter() - start, 3)}
        report.append(entry)
        if echo:
            echo(res.line())
    return report


def write_report(report: list[dict], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "verify.json"
    doc = {"passed": all(r["passed"] for r in report), "checks": report}
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
