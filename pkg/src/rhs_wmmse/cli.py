"""Command line entry point: ``rhs-wmmse {run,sweep,validate,pattern}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baselines import run_scheme
from .config import load_config
from .exceptions import ConfigError, RHSError
from .experiments import (
    AXES,
    convergence_csv,
    export_pattern,
    pattern_csv,
    run_convergence,
    run_sweep,
    sweep_csv,
    timing_csv,
)
from .validate import FAULTS, run_validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rhs-wmmse",
                                description="Coupling-aware RHS beamforming experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, default=None, help="JSON config file")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the seed list")
        sp.add_argument("--schemes", default=None, help="comma separated scheme tags")
        sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("run", help="convergence traces per scheme")
    common(sp)
    sp.add_argument("--timing", action="store_true", help="fill the wall_ms column")

    sp = sub.add_parser("sweep", help="final metrics along one axis")
    common(sp)
    sp.add_argument("--axis", choices=sorted(AXES), required=True)
    sp.add_argument("--values", default=None, help="comma separated axis values")

    sp = sub.add_parser("validate", help="run the self-check suite")
    common(sp)
    sp.add_argument("--fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)

    sp = sub.add_parser("pattern", help="far-field cut of a designed state")
    common(sp)
    sp.add_argument("--subband", type=int, default=None)
    sp.add_argument("--step", type=float, default=1.0, help="angle step in degrees")
    return p


def _schemes(arg):
    return None if arg is None else [s.strip() for s in arg.split(",") if s.strip()]


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg = cfg.replace(workers=args.workers)
        if args.schemes is not None:
            cfg = cfg.replace(schemes=tuple(_schemes(args.schemes)))
        seeds = None if args.seed is None else [args.seed]

        if args.command == "run":
            records = run_convergence(cfg, seeds=seeds)
            path = _write(args.out, "run.csv", convergence_csv(records, args.timing))
            failed = [r for r in records if r.status != "ok"]
            for r in records:
                final = f"{r.metrics.sum_se_bpshz:.6g} bit/s/Hz" if r.metrics else r.status
                print(f"{r.scheme:14s} seed={r.seed} {final}")
            print(f"wrote {path}")
            return EXIT_NUMERIC if failed else EXIT_OK

        if args.command == "sweep":
            values = None if args.values is None else [float(v) for v in args.values.split(",")]
            res = run_sweep(cfg, args.axis, values, seeds=seeds)
            path = _write(args.out, f"sweep_{args.axis}.csv", sweep_csv(res))
            _write(args.out, f"sweep_{args.axis}_timing.csv", timing_csv(res))
            print(f"wrote {path}")
            return EXIT_OK

        if args.command == "validate":
            report = run_validate(cfg, fault=args.fault, seed=args.seed or 0)
            print(report.text())
            return EXIT_OK if report.passed else EXIT_VALIDATION

        if args.command == "pattern":
            from .config import build_system
            seed = args.seed or 0
            system = build_system(cfg, seed)
            scheme = (_schemes(args.schemes) or ["CA-Joint"])[0]
            _, _, m, pre = run_scheme(scheme, system)
            rows = export_pattern(cfg, m, pre.V, args.subband, args.step, system=system)
            path = _write(args.out, "pattern.csv", pattern_csv(rows))
            print(f"wrote {path}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RHSError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
