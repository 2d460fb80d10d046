"""Plain-text formats: snapshots, radial fields, time lists and series.

Floats are written with 17 significant digits so that every value
round-trips exactly.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = [
    "FLOAT_FMT",
    "fmt",
    "write_ensemble_csv",
    "read_ensemble_csv",
    "write_field_csv",
    "read_field_csv",
    "write_times",
    "read_times",
    "write_series_csv",
    "read_series_csv",
]

FLOAT_FMT = "%.17g"
ENSEMBLE_COLUMNS = ("id", "x1", "x2", "x3", "v1", "v2", "v3", "weight")


def fmt(value):
    return FLOAT_FMT % value


def _write_table(path, header, columns, int_first=False):
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    fmts = [FLOAT_FMT] * data.shape[1]
    if int_first:
        fmts[0] = "%d"
    np.savetxt(path, data, fmt=fmts, delimiter=",", header=",".join(header), comments="")


def _read_table(path, header):
    with open(path, newline="") as fh:
        first = next(csv.reader(fh))
    if tuple(h.strip() for h in first) != tuple(header):
        raise ValueError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return data


def write_ensemble_csv(path, ensemble):
    n = len(ensemble.weights)
    _write_table(path, ENSEMBLE_COLUMNS,
                 [np.arange(n), *ensemble.positions.T, *ensemble.velocities.T, ensemble.weights],
                 int_first=True)


def read_ensemble_csv(path, t=0.0):
    from .simulation import ParticleEnsemble

    data = _read_table(path, ENSEMBLE_COLUMNS)
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    return ParticleEnsemble(data[:, 1:4], data[:, 4:7], data[:, 7], t)


def write_field_csv(path, radii, cum_mass):
    _write_table(path, ("r", "m"), [radii, cum_mass])


def read_field_csv(path):
    data = _read_table(path, ("r", "m"))
    return np.ascontiguousarray(data[:, 0]), np.ascontiguousarray(data[:, 1])


def write_times(path, times):
    Path(path).write_text("".join(fmt(t) + "\n" for t in np.asarray(times, dtype=float)))


def read_times(path):
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return np.array([float(ln) for ln in lines if ln], dtype=float)


def write_series_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def read_series_csv(path):
    """Return ``(columns, array)``."""
    with open(path, newline="") as fh:
        columns = tuple(next(csv.reader(fh)))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return columns, data.reshape(-1, len(columns))
