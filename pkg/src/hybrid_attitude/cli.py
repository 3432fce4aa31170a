"""Command line entry point.

    hybrid-attitude run CONFIG [CONFIG ...] [--out DIR] [--controller KIND] [--jobs N]
    hybrid-attitude verify [--filter NAME] [--out DIR] [--json]
    hybrid-attitude cases [--out DIR]

Exit status: 0 success, 1 invalid configuration, 2 runtime error,
3 verification failure. ``HYBRID_ATTITUDE_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import bundled_cases, case_text, parse_config
from .control import ControllerKind
from .errors import AttitudeError, NotARotation, ParseError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
LOG_ENV = "HYBRID_ATTITUDE_LOG"

log = logging.getLogger("hybrid_attitude")


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _run_one(cfg, out_dir: str) -> dict:
    from .scenario import run_scenario

    return run_scenario(cfg, out_dir).to_dict()


def _cmd_run(args) -> int:
    base = Path(args.out)
    if len(args.configs) == 1:
        jobs = [(args.configs[0], str(base))]
    else:
        stems = [Path(c).stem for c in args.configs]
        if len(set(stems)) != len(stems):
            print("error: config file names must be distinct when running several", file=sys.stderr)
            return EXIT_INVALID
        jobs = [(c, str(base / s)) for c, s in zip(args.configs, stems)]
    # validate every config before spending time on any run
    configs = [parse_config(path) for path, _ in jobs]
    if args.controller:
        configs = [cfg.with_kind(args.controller) for cfg in configs]
    outs = [o for _, o in jobs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_run_one, configs, outs))
    else:
        summaries = [_run_one(cfg, o) for cfg, o in zip(configs, outs)]
    for (path, out), s in zip(jobs, summaries):
        print(f"{s['name']} [{s['kind']}]: {s['rows']} rows, {s['jump_count']} jumps, "
              f"final ||R - R_d|| = {s['final_rotdist']:.3e}, ||e|| = {s['final_e_norm']:.3e} -> {out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_checks, select, write_report

    names = select(args.filter)
    if not names:
        print(f"error: no check matches {args.filter!r}", file=sys.stderr)
        return EXIT_INVALID
    echo = None if args.json else print
    report = run_checks(names, echo)
    if args.out:
        write_report(report, args.out)
    if args.json:
        print(json.dumps({"passed": all(r["passed"] for r in report), "checks": report}, indent=2))
    failed = [r["name"] for r in report if not r["passed"]]
    if not args.json:
        print(f"{len(report) - len(failed)}/{len(report)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_cases(args) -> int:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name in bundled_cases():
            (out / f"{name}.json").write_text(case_text(name))
            print(out / f"{name}.json")
    else:
        print(json.dumps({name: json.loads(case_text(name)) for name in bundled_cases()}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-attitude",
                                     description="Smooth and hybrid attitude tracking on SO(3).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one or more JSON configurations")
    p.add_argument("configs", nargs="+", metavar="CONFIG")
    p.add_argument("--out", default="out", help="output directory (one subdirectory per config when several)")
    p.add_argument("--controller", choices=[k.value for k in ControllerKind], help="override the controller kind")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs when several configs are given")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run the property and scenario checks")
    p.add_argument("--filter", help="only checks whose name or group contains this text")
    p.add_argument("--out", help="also write verify.json to this directory")
    p.add_argument("--json", action="store_true", help="print the machine-readable report instead of lines")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("cases", help="emit the bundled scenario configurations")
    p.add_argument("--out", help="write case1.json, case2.json, case3.json here instead of printing")
    p.set_defaults(func=_cmd_cases)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        return args.func(args)
    except (ParseError, ValidationError, NotARotation) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AttitudeError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
