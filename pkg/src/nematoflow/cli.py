"""Command-line entry points: simulate, check, analyze-symbol, report.

Exit codes: 0 success, 1 validation error (config/input), 2 runtime abort,
3 check or sweep failure.  The NEMATOFLOW_THREADS environment variable caps
the numerical worker count (exported to the BLAS/OpenMP pools by the package
initializer); results are bit-identical at any setting because all
reductions run in a fixed order.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from pathlib import Path

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ABORT = 2
EXIT_CHECK_FAILED = 3

LOCK_NAME = ".nematoflow.lock"


class LockError(RuntimeError):
    pass


@contextmanager
def directory_lock(directory: Path):
    """Exclusive lock against concurrent invocations on one output directory."""
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(f"output directory {directory} is locked by another "
                        f"invocation (stale? remove {lock_path})") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock_path)
        except FileNotFoundError:
            pass


def _distance_surrogate(records):
    """CSV-derived stand-in for the equilibrium distance (same decay modes)."""
    return [r.u_l2 + r.grad_theta_l2 + r.grad_d_l2 for r in records]


def audit_records(records) -> dict:
    """Defect/rate audit computed purely from a diagnostics series.

    Both `simulate` (for its summary) and `report` call this on records
    parsed back from the CSV, so their numbers agree bit for bit.
    """
    from .diagnostics import NoFitError, energy_identity_defect, fit_decay_rate

    summary = energy_identity_defect(records) if len(records) > 1 else None
    out = {
        "max_energy_defect": summary.max_energy_defect if summary else 0.0,
        "mass_defect": summary.mass_defect if summary else 0.0,
        "min_entropy_increment": summary.min_entropy_increment if summary else 0.0,
        "entropy_violation_rows": [k for k, _ in summary.entropy_violations]
        if summary else [],
        "max_available_energy_increment":
            summary.max_available_energy_increment if summary else 0.0,
    }
    try:
        rate, residual = fit_decay_rate([r.t for r in records],
                                        _distance_surrogate(records))
        out["fitted_decay_rate"] = rate
        out["fit_residual"] = residual
    except NoFitError as exc:
        out["fitted_decay_rate"] = None
        out["fit_residual"] = None
        out["fit_note"] = str(exc)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    from .config import ConfigError, parse_config
    from .linsolve import LinearSolveError
    from .solver import CflError, SolverAbort, SolverError, run
    from . import storage

    try:
        cfg = parse_config(args.config)
        material = cfg.build_material()
        grid = cfg.build_grid()
        scenario = cfg.build_scenario()
        step_cfg = cfg.build_step_config()
        outdir = cfg.output_directory()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        with directory_lock(outdir):
            try:
                result = run(material, grid, scenario, step_cfg)
            except (SolverAbort, CflError, LinearSolveError) as exc:
                abort = {"reason": str(exc), "t": getattr(exc, "t", None)}
                storage.write_summary(outdir / "abort.json", abort)
                state = getattr(exc, "state", None)
                if state is not None:
                    storage.write_snapshot(outdir / "abort_snapshot.dat", state)
                print(f"abort: {exc}", file=sys.stderr)
                return EXIT_ABORT
            except SolverError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_VALIDATION

            csv_path = outdir / "diagnostics.csv"
            storage.write_diagnostics_csv(csv_path, result.records)
            for k, snap in enumerate(result.snapshots):
                storage.write_snapshot(outdir / f"snapshot_{k:06d}.dat", snap)

            audited = audit_records(storage.read_diagnostics_csv(csv_path))
            final_distance = result.records[-1].equilibrium_distance
            summary = dict(audited)
            summary["final_equilibrium_distance"] = final_distance
            summary["already_at_equilibrium"] = bool(
                result.records[0].equilibrium_distance <= 1e-12)
            summary["t_end"] = result.final_state.t
            storage.write_summary(outdir / "summary.json", summary)

            if summary["already_at_equilibrium"]:
                print("already at equilibrium (initial distance <= 1e-12)")
            print(f"final equilibrium distance: {final_distance:.17g}")
            rate = summary["fitted_decay_rate"]
            print("fitted decay rate: "
                  + (f"{rate:.17g}" if rate is not None else "no-fit"))
            print(f"max energy defect: {summary['max_energy_defect']:.17g}")
            print(f"min entropy increment: {summary['min_entropy_increment']:.17g}")
            print(f"wrote {csv_path}")
            return EXIT_OK
    except LockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _cmd_check(args) -> int:
    from .config import ConfigError, parse_config
    from .consistency import check_consistency
    from .material import MaterialError
    from . import storage

    try:
        cfg = parse_config(args.config)
        fe = cfg.build_free_energy()
        params = cfg.build_parameter_set()
        spec = cfg.sampling_spec()
    except (ConfigError, MaterialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = check_consistency(fe, params, spec)
    except MaterialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(report.to_text(strict=args.strict), end="")
    out_csv = Path(cfg.get("check", "output_csv"))
    storage.write_consistency_csv(out_csv, report, strict=args.strict)
    print(f"wrote {out_csv}")
    if not report.consistent(strict=args.strict):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_analyze_symbol(args) -> int:
    from .config import ConfigError, parse_config
    from .material import MaterialError
    from .symbolcheck import SymbolCheckError, equilibrium_spectrum, symbol_sweep
    from . import storage
    import numpy as np

    try:
        cfg = parse_config(args.config)
        material = cfg.build_material()
        n_samples = args.samples if args.samples else cfg.get("symbol", "samples")
        n_dim = args.dim if args.dim else cfg.get("symbol", "dim")
        if n_dim not in (2, 3):
            raise ConfigError("[symbol].dim must be 2 or 3")
        seed = cfg.get("symbol", "seed")
    except (ConfigError, MaterialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        rows = symbol_sweep(n_samples, n_dim, seed, material=material)
    except SymbolCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    out_csv = Path(cfg.get("symbol", "output_csv"))
    storage.write_sweep_csv(out_csv, rows, n_dim)
    failures = [r for r in rows if not r.passed]
    print(f"symbol sweep: {len(rows)} samples, {len(failures)} failures "
          f"-> {out_csv}")
    for r in failures[:5]:
        print(f"  sample {r.sample_id}: {r.reason}")

    if cfg.has_section("grid") and cfg.has_section("scenario"):
        try:
            grid = cfg.build_grid()
            scenario = cfg.build_scenario()
            angle = scenario.d_angle
            table = equilibrium_spectrum(
                material, scenario.theta_star,
                np.array([np.cos(angle), np.sin(angle)]), grid)
            print("predicted slowest decay rates at the constant state:")
            print(table.to_text(), end="")
        except SymbolCheckError as exc:
            print(f"spectrum unavailable: {exc}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def _cmd_report(args) -> int:
    from .plots import render_report_figures
    from .storage import StorageError, read_diagnostics_csv, fmt
    import csv as _csv

    rundir = Path(args.rundir)
    csv_path = rundir / "diagnostics.csv"
    try:
        records = read_diagnostics_csv(csv_path)
    except StorageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if len(records) < 2:
        print(f"error: {csv_path} holds fewer than two records", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        with directory_lock(rundir):
            audited = audit_records(records)
            print(f"records: {len(records)} (t in [{records[0].t:g}, {records[-1].t:g}])")
            print(f"max energy defect: {audited['max_energy_defect']:.17g}")
            print(f"mass defect: {audited['mass_defect']:.17g}")
            print(f"min entropy increment: {audited['min_entropy_increment']:.17g}")
            rows = audited["entropy_violation_rows"]
            if rows:
                print(f"entropy decreases at record rows: {rows}")
            else:
                print("entropy non-decreasing across all records")
            rate = audited["fitted_decay_rate"]
            print("fitted decay rate: "
                  + (f"{rate:.17g}" if rate is not None else "no-fit"))
            if audited["max_energy_defect"] == 0.0 and not rows:
                print("all defects zero")

            report_csv = rundir / "report.csv"
            energy0 = records[0].energy
            scale = abs(energy0) if energy0 != 0.0 else 1.0
            with open(report_csv, "w", newline="") as fh:
                writer = _csv.writer(fh)
                writer.writerow(["t", "energy_defect", "entropy_increment", "flagged"])
                prev = records[0]
                for k, rec in enumerate(records[1:], start=1):
                    inc = rec.entropy - prev.entropy
                    writer.writerow([fmt(rec.t),
                                     fmt(abs(rec.energy - energy0) / scale),
                                     fmt(inc), k in rows])
                    prev = rec
            figures = render_report_figures(records, rundir / "report_figures")
            print(f"wrote {report_csv}")
            for path in figures:
                print(f"wrote {path}")
            return EXIT_OK
    except LockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nematoflow",
        description="Simulation and certification toolkit for non-isothermal "
                    "nematic liquid-crystal flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a configured scenario")
    p.add_argument("config", help="path to the run configuration file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check", help="certify the material consistency conditions")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true",
                   help="gate on the strict stability set")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("analyze-symbol",
                       help="sweep the parabolicity and boundary-condition checks")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--dim", type=int, default=None, choices=(2, 3))
    p.set_defaults(func=_cmd_analyze_symbol)

    p = sub.add_parser("report", help="audit a run directory from its CSV alone")
    p.add_argument("rundir")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
