"""Stable CSV / JSON serialisation.

Floats are written with 12 significant digits and JSON keys keep insertion
order, so identical runs produce byte-identical files.  Non-finite floats
are written as the strings "inf", "-inf" and "nan".
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import EndpointResiduals, Trajectory
from .errors import DomainError

FLOAT_FMT = "{:.12g}"
TRAJECTORY_COLUMNS = ("t", "theta", "u", "S_z", "S_x")
TWO_QUBIT_COLUMNS = ("t", "theta1", "theta2", "u1", "u2", "S_zz", "S_zx", "S_xz", "S_xx")


def fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


def clean(obj):
    """Round floats to 12 significant digits and make the structure JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(fmt(x))
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2) + "\n"


def write_json(path: Path | str, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_columns(path: Path | str, columns: dict) -> Path:
    """Write equal-length columns as a CSV with a header row."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    with path.open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*data):
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_columns(path: Path | str, required: tuple[str, ...] = ()) -> dict:
    """Read a numeric CSV with a header row into a dict of arrays."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [[float(v) for v in row] for row in reader if row]
    except (OSError, StopIteration, ValueError) as exc:
        raise DomainError(f"cannot read numeric CSV {str(path)!r}: {exc}") from exc
    missing = [c for c in required if c not in header]
    if missing:
        raise DomainError(f"{path} lacks columns {missing}")
    if any(len(r) != len(header) for r in rows):
        raise DomainError(f"{path} has ragged rows")
    if len(rows) < 2:
        raise DomainError(f"{path} needs at least two data rows")
    arr = np.array(rows, dtype=float)
    return {name: arr[:, i] for i, name in enumerate(header)}


def trajectory_columns(traj: Trajectory) -> dict:
    return {"t": traj.t, "theta": traj.theta, "u": traj.u, "S_z": traj.S_z, "S_x": traj.S_x}


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    return write_columns(path, trajectory_columns(traj))


def write_trajectory_json(path, traj: Trajectory) -> Path:
    return write_json(path, {name: arr for name, arr in trajectory_columns(traj).items()})


def read_trajectory_csv(path, theta_des: float, gamma: float = 0.0,
                        control_kind: str = "smooth") -> Trajectory:
    cols = read_columns(path, TRAJECTORY_COLUMNS)
    residuals = EndpointResiduals(float(cols["theta"][-1] - theta_des), 0.0, 0.0)
    return Trajectory(cols["t"], cols["theta"], cols["u"], cols["S_z"], cols["S_x"],
                      theta_des=theta_des, gamma=gamma, endpoint_residuals=residuals,
                      control_kind=control_kind)


def two_qubit_columns(traj) -> dict:
    return {name: getattr(traj, name) for name in TWO_QUBIT_COLUMNS}
