"""CSV/JSON persistence for run outputs.

All floats are written with 17 significant digits so re-running a config
reproduces every file bit for bit (runs are single-threaded and seeded).
"""

from __future__ import annotations

import json
import platform
import time
from pathlib import Path

import numpy as np

from .diagnostics import MacroRecord, Trajectory


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal-length sequences) as CSV."""
    names = list(columns)
    rows = len(next(iter(columns.values())))
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(fmt(columns[n][i]) for n in names) + "\n")


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, cls=_Encoder)
        fh.write("\n")


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """The trajectory table in its stable schema (see MacroRecord.csv_columns)."""
    cols = {name: [getattr(r, name) for r in traj.records]
            for name in MacroRecord.csv_columns()}
    write_csv(path, cols)


def diagnostics_to_csv(traj: Trajectory, path) -> None:
    """Secondary per-snapshot diagnostics (schema may grow between versions)."""
    names = ["t"] + MacroRecord.extra_columns()
    cols = {name: [getattr(r, name) for r in traj.records] for name in names}
    write_csv(path, cols)


def write_manifest(out_dir: Path, command: str, config: dict, wall_time: float,
                   artifacts: list) -> None:
    import numpy
    import scipy

    import polyfront

    write_json(out_dir / "manifest.json", {
        "command": command,
        "config": config,
        "versions": {
            "polyfront": polyfront.__version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall_time,
        "artifacts": [str(a) for a in artifacts],
        "written_at_unix": time.time(),
    })
