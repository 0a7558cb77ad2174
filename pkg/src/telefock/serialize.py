"""File formats shared between the CLI, tests, and the plotting component.

Density matrices travel as JSON {"dims": [...], "re": [[...]], "im": [[...]]},
homodyne records as CSV `theta,value`, P(L) curves as CSV `L,P_model,P_vacuum`
and Wigner grids as CSV `x,p,W`. All writers are deterministic byte-for-byte
for identical inputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .analysis import WignerGrid
from .fock import DensityOperator


def density_to_json(rho: DensityOperator) -> dict:
    mat = np.asarray(rho.matrix)
    return {
        "dims": list(rho.dims),
        "re": mat.real.tolist(),
        "im": mat.imag.tolist(),
    }


def density_from_json(obj: dict) -> DensityOperator:
    mat = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    return DensityOperator(mat, tuple(obj["dims"]))


def dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def load_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def write_records_csv(records, path: Path) -> None:
    lines = ["theta,value"]
    lines.extend(f"{rec.theta:.14e},{rec.value:.14e}" for rec in records)
    path.write_text("\n".join(lines) + "\n")


def read_records_csv(path: Path) -> np.ndarray:
    """Records as an (n, 2) array of (theta, value); errors carry line numbers."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "theta,value":
            raise ValueError(f"{path}:1: expected header 'theta,value', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'theta,value', got {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no records")
    return np.array(rows)


def write_curve_csv(rows, path: Path) -> None:
    lines = ["L,P_model,P_vacuum"]
    lines.extend(f"{L:.10e},{pm:.10e},{pv:.10e}" for L, pm, pv in rows)
    path.write_text("\n".join(lines) + "\n")


def write_wigner_csv(grid: WignerGrid, path: Path) -> None:
    lines = ["x,p,W"]
    for i, x in enumerate(grid.xs):
        for j, p in enumerate(grid.ps):
            lines.append(f"{x:.10e},{p:.10e},{grid.values[i, j]:.10e}")
    path.write_text("\n".join(lines) + "\n")
