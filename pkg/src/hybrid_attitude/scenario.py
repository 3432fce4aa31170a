"""Scenario runner: simulate a configuration and write its artifacts.

Output directory layout::

    trace.csv     one row per recorded sample (see TRACE_COLUMNS)
    jumps.csv     one row per mode switch
    summary.json  RunSummary plus the resolved configuration
    errors.svg, control.svg, mode.svg
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .sim import JumpEvent, Trace, run
from .svg import line_chart

log = logging.getLogger(__name__)

TRACE_COLUMNS = (["t"] + [f"R{i}{j}" for i in range(3) for j in range(3)] + [f"Om{i}" for i in range(3)]
                 + ["mode"] + [f"u{i}" for i in range(3)] + [f"er{i}" for i in range(3)]
                 + [f"eW{i}" for i in range(3)] + [f"eI{i}" for i in range(3)]
                 + ["psi", "rho", "rotdist", "U", "Vm"])
JUMP_COLUMNS = ("t", "mode_before", "mode_after", "Psi_before", "Psi_after", "V_before", "V_after", "eW_norm")
FLOAT_FORMAT = "%.17g"


@dataclass
class RunSummary:
    name: str
    kind: str
    rows: int
    final_t: float
    final_rotdist: float
    final_e_norm: float
    final_eW_norm: float
    final_eI_norm: float
    jump_count: int
    jump_times: list[float]
    U_min: float
    U_max: float
    V_min: float
    V_max: float
    boundary_hits: int
    wall_clock_s: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def trace_table(trace: Trace) -> np.ndarray:
    n = len(trace)
    return np.column_stack([
        trace.t, trace.R.reshape(n, 9), trace.Omega, trace.mode.astype(float), trace.u, trace.e,
        trace.e_Omega, trace.e_I, trace.psi, trace.rho, trace.rotdist, trace.U, trace.V,
    ])


def summarize(name: str, kind: str, table: np.ndarray, jumps: list[JumpEvent], boundary_hits: int = 0,
              wall_clock: float = 0.0, metadata: dict | None = None) -> RunSummary:
    """Summary computed from the trace table, so it can be recomputed from ``trace.csv``."""
    col = {c: i for i, c in enumerate(TRACE_COLUMNS)}

    def final_norm(prefix):
        return float(np.linalg.norm(table[-1, [col[f"{prefix}{i}"] for i in range(3)]]))

    return RunSummary(
        name=name, kind=kind, rows=int(table.shape[0]), final_t=float(table[-1, col["t"]]),
        final_rotdist=float(table[-1, col["rotdist"]]), final_e_norm=final_norm("er"),
        final_eW_norm=final_norm("eW"), final_eI_norm=final_norm("eI"),
        jump_count=len(jumps), jump_times=[float(j.t) for j in jumps],
        U_min=float(table[:, col["U"]].min()), U_max=float(table[:, col["U"]].max()),
        V_min=float(table[:, col["Vm"]].min()), V_max=float(table[:, col["Vm"]].max()),
        boundary_hits=int(boundary_hits), wall_clock_s=float(wall_clock), metadata=metadata or {})


def write_trace_csv(path, table: np.ndarray) -> None:
    np.savetxt(path, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(TRACE_COLUMNS), comments="")


def read_trace_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_jumps_csv(path, jumps: list[JumpEvent]) -> None:
    lines = [",".join(JUMP_COLUMNS)]
    for j in jumps:
        vals = (j.t, int(j.mode_before), int(j.mode_after), j.Psi_before, j.Psi_after, j.V_before, j.V_after,
                j.e_Omega_norm)
        lines.append(",".join(str(v) if isinstance(v, int) else FLOAT_FORMAT % v for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def charts_from_csv(csv_path, out_dir, title: str = "") -> list[Path]:
    """Error norms, control input and mode charts built from a trace CSV."""
    table = read_trace_csv(csv_path)
    col = {c: i for i, c in enumerate(TRACE_COLUMNS)}
    t = table[:, col["t"]]

    def norm(prefix):
        return np.linalg.norm(table[:, [col[f"{prefix}{i}"] for i in range(3)]], axis=1)

    out_dir = Path(out_dir)
    prefix = f"{title}: " if title else ""
    return [
        line_chart(out_dir / "errors.svg", t,
                   {"||e_H||": norm("er"), "||e_Omega||": norm("eW"), "||R - R_d||": table[:, col["rotdist"]]},
                   f"{prefix}tracking errors", "t [s]", "norm (log scale)", logy=True),
        line_chart(out_dir / "control.svg", t, {f"u{i}": table[:, col[f"u{i}"]] for i in range(3)},
                   f"{prefix}control moment", "t [s]", "u [N m]"),
        line_chart(out_dir / "mode.svg", t, {"mode": table[:, col["mode"]]},
                   f"{prefix}hybrid mode", "t [s]", "mode", step=True),
    ]


def run_scenario(cfg: RunConfig, out_dir) -> RunSummary:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s with %s controller, dt=%g, T=%g", cfg.name, cfg.spec.kind.value, cfg.sim.dt, cfg.sim.T)
    start = time.perf_counter()
    trace, jumps = run(cfg.init, cfg.trajectory, cfg.spec, cfg.plant, cfg.sim)
    wall = time.perf_counter() - start
    table = trace_table(trace)
    write_trace_csv(out / "trace.csv", table)
    write_jumps_csv(out / "jumps.csv", jumps)
    meta = {k: v for k, v in cfg.metadata.items() if k != "source"}
    meta["initial"] = cfg.initial_label
    summary = summarize(cfg.name, cfg.spec.kind.value, table, jumps, trace.boundary_hits, wall, meta)
    payload = {"summary": summary.to_dict(), "config": cfg.to_dict()}
    (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    charts_from_csv(out / "trace.csv", out, f"{cfg.name} ({cfg.spec.kind.value})")
    log.info("%s: %d rows, %d jumps, final ||R - R_d|| = %.3e, %.2f s", cfg.name, summary.rows,
             summary.jump_count, summary.final_rotdist, wall)
    return summary
