"""On-disk formats: diagnostics CSV, field snapshots, summaries, sweep CSVs.

All floating-point values are written with 17 significant digits, which
round-trips IEEE doubles exactly, so re-reading a file reproduces the run's
numbers bit for bit.

Snapshot container (plain text, one file per snapshot):

    nematoflow-snapshot 1
    t <time>
    Nx <int>
    Ny <int>
    Lx <float>
    Ly <float>
    fields u v theta d0 d1 pi
    field u <rows> <cols>
    <cols values per line, row-major>
    field v <rows> <cols>
    ...

Field shapes follow the staggered layout: u is (Nx+1, Ny), v is (Nx, Ny+1),
cell fields are (Nx, Ny).  The version tag on the first line is bumped on
any layout change.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .grid import Grid

SNAPSHOT_MAGIC = "nematoflow-snapshot"
SNAPSHOT_VERSION = 1


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


class StorageError(ValueError):
    """Malformed on-disk artifact."""


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------

def write_diagnostics_csv(path, records: Sequence[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([fmt(v) for v in rec.csv_values()])


def read_diagnostics_csv(path) -> List[DiagnosticsRecord]:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"diagnostics CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise StorageError(f"unexpected diagnostics header in {path}: {header}")
        return [DiagnosticsRecord.from_csv_values(row) for row in reader]


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(path, state) -> None:
    g = state.grid
    fields = [("u", state.u), ("v", state.v), ("theta", state.theta),
              ("d0", state.d[:, :, 0]), ("d1", state.d[:, :, 1]), ("pi", state.pi)]
    with open(path, "w") as fh:
        fh.write(f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\n")
        fh.write(f"t {fmt(state.t)}\n")
        fh.write(f"Nx {g.Nx}\nNy {g.Ny}\n")
        fh.write(f"Lx {fmt(g.Lx)}\nLy {fmt(g.Ly)}\n")
        fh.write("fields " + " ".join(name for name, _ in fields) + "\n")
        for name, arr in fields:
            fh.write(f"field {name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_snapshot(path):
    from .solver import StateField

    path = Path(path)
    if not path.is_file():
        raise StorageError(f"snapshot not found: {path}")
    with open(path) as fh:
        lines = iter(fh.read().splitlines())
    head = next(lines, "")
    parts = head.split()
    if len(parts) != 2 or parts[0] != SNAPSHOT_MAGIC or int(parts[1]) != SNAPSHOT_VERSION:
        raise StorageError(f"{path}: not a version-{SNAPSHOT_VERSION} snapshot ({head!r})")

    def scalar(key, cast):
        line = next(lines, "")
        k, v = line.split()
        if k != key:
            raise StorageError(f"{path}: expected {key!r}, got {k!r}")
        return cast(v)

    try:
        t = scalar("t", float)
        nx = scalar("Nx", int)
        ny = scalar("Ny", int)
        lx = scalar("Lx", float)
        ly = scalar("Ly", float)
        field_line = next(lines, "").split()
        if field_line[:1] != ["fields"]:
            raise StorageError(f"{path}: missing field list")
        arrays = {}
        for _ in field_line[1:]:
            tag, name, rows, cols = next(lines).split()
            if tag != "field":
                raise StorageError(f"{path}: malformed field header")
            rows, cols = int(rows), int(cols)
            data = np.array([[float(v) for v in next(lines).split()]
                             for _ in range(rows)])
            if data.shape != (rows, cols):
                raise StorageError(f"{path}: field {name} shape mismatch")
            arrays[name] = data
    except (ValueError, StopIteration) as exc:
        raise StorageError(f"{path}: truncated or malformed snapshot ({exc})") from None
    g = Grid(Lx=lx, Ly=ly, Nx=nx, Ny=ny)
    d = np.stack([arrays["d0"], arrays["d1"]], axis=-1)
    return StateField(grid=g, u=arrays["u"], v=arrays["v"], theta=arrays["theta"],
                      d=d, pi=arrays["pi"], t=t)


# ---------------------------------------------------------------------------
# summaries and sweep tables
# ---------------------------------------------------------------------------

def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"summary not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def write_consistency_csv(path, report, strict: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in report.csv_rows(strict):
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _fmt_root(z: complex) -> str:
    if z.imag == 0.0:
        return fmt(z.real)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def write_sweep_csv(path, rows, n_dim: int) -> None:
    header = (["sample_id", "theta0", "tau0"]
              + [f"xi_{k}" for k in range(n_dim)]
              + ["root1", "root2", "min_re_eig_B", "verdict"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            writer.writerow([r.sample_id, fmt(r.theta0), fmt(r.tau0)]
                            + [fmt(x) for x in r.xi]
                            + [_fmt_root(r.root1), _fmt_root(r.root2),
                               fmt(r.min_re_eig_b), r.passed])
