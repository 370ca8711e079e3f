"""On-disk formats: trajectory CSV and JSON diagnostic reports.

Trajectory CSV schema is frozen: header row, column 1 the time, columns
2..N+1 the shell amplitudes X_1..X_N, all values printed with 17
significant digits so a round-trip reproduces the doubles exactly.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .integrate import Trajectory

__all__ = [
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_report",
    "write_series_csv",
]


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    path = Path(path)
    n = traj.n_max
    header = "t," + ",".join(f"X{i}" for i in range(1, n + 1))
    data = np.column_stack([traj.ts, traj.ys])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
    return path


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def write_series_csv(path, columns: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=np.float64) for k in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def write_report(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
