"""CSV convergence tables, time series and legacy ASCII VTK export."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .mesh import Mesh
from .mms import NORM_KEYS, ErrorReport, observed_rates
from .spaces import SpaceSet

TABLE_HEADER = ("dof", "h", "iter", "eu_linf_h1", "rate", "eu_l2_l2", "rate",
                "ew_l2_l2", "rate", "ep_l2_l2", "rate")
TIMESERIES_HEADER = ("kappa", "step", "t", "mean_speed_channel", "mean_speed_matrix", "newton_iterations")
VTK_TRIANGLE = 5


def _rate(value) -> str:
    if value is None:
        return "--"
    if math.isinf(value):
        return "inf"
    return f"{value:.3f}"


def table_rows(reports: Sequence[ErrorReport]) -> list[list[str]]:
    """Formatted rows mirroring the DoF / h / iter / (error, rate) layout."""
    if not reports:
        raise ValueError("no convergence levels to tabulate")
    rates = observed_rates(reports) if len(reports) > 1 else [{k: None for k in NORM_KEYS}]
    rows = []
    for rep, rate in zip(reports, rates):
        row = [str(rep.dof), f"{rep.h:.4f}", f"{rep.iter:.2f}"]
        for key in NORM_KEYS:
            row += [f"{getattr(rep, key):.2e}", _rate(rate[key])]
        rows.append(row)
    return rows


def format_table(reports: Sequence[ErrorReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    writer.writerows(table_rows(reports))
    return buf.getvalue()


def write_table(reports: Sequence[ErrorReport], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_table(reports), encoding="utf-8")
    return path


def write_timeseries(rows: Sequence[dict], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMESERIES_HEADER)
        for r in rows:
            writer.writerow([repr(float(r["kappa"])), int(r["step"]), f"{r['t']:.10g}",
                             f"{r['mean_speed_channel']:.10e}", f"{r['mean_speed_matrix']:.10e}",
                             int(r["newton_iterations"])])
    return path


def read_timeseries(path: str | Path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({
            "kappa": float(r["kappa"]), "step": int(r["step"]), "t": float(r["t"]),
            "mean_speed_channel": float(r["mean_speed_channel"]),
            "mean_speed_matrix": float(r["mean_speed_matrix"]),
            "newton_iterations": int(r["newton_iterations"]),
        })
    return out


# ---------------------------------------------------------------------------
# VTK
# ---------------------------------------------------------------------------

def _num(v: float) -> str:
    # + 0.0 folds negative zero so identical fields always print identically
    return f"{float(v) + 0.0:.12g}"


def vertex_fields(state, spaces: SpaceSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Velocity (n_v, 2), vorticity and pressure sampled at mesh vertices.

    Vertex DOFs come first in every space and bubbles vanish at vertices, so
    the vertex values are the leading coefficients.
    """
    nv = spaces.mesh.n_vertices
    ns = spaces.velocity.n_dofs
    u = np.asarray(state.u)
    vel = np.column_stack([u[:nv], u[ns:ns + nv]])
    return vel, np.asarray(state.w)[:nv], np.asarray(state.p)[:nv]


def vtk_string(state, mesh: Mesh, spaces: SpaceSet, title: str = "kvbf") -> str:
    if spaces.mesh is not mesh:
        raise ValueError("spaces were built on a different mesh")
    vel, w, p = vertex_fields(state, spaces)
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {mesh.n_cells} {4 * mesh.n_cells}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.cells.tolist()]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(VTK_TRIANGLE)] * mesh.n_cells
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("VECTORS velocity double")
    lines += [f"{_num(a)} {_num(b)} 0" for a, b in vel]
    for name, values in (("vorticity", w), ("pressure", p)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_num(v) for v in values]
    return "\n".join(lines) + "\n"


def write_vtk(state, mesh: Mesh, spaces: SpaceSet, path: str | Path, title: str = "kvbf") -> Path:
    """Write a legacy ASCII VTK 3.0 unstructured grid with vertex fields."""
    path = Path(path)
    path.write_text(vtk_string(state, mesh, spaces, title), encoding="utf-8")
    return path
