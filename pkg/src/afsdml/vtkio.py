"""Legacy ASCII VTK structured-points export for voxel fields.

Point data is ordered x-fastest (VTK native), one SCALARS or VECTORS block
per field, fixed 9-significant-digit formatting so identical fields produce
byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .fileio import atomic_write_text


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def export_vtk(path, fields: dict, spacing: float, origin=(0.0, 0.0, 0.0)) -> None:
    """Write scalar (nx, ny, nz) and vector (nx, ny, nz, 3) fields.

    All fields must share grid dimensions; raises ValueError on mismatch.
    """
    if not fields:
        raise ValueError("no fields to export")
    dims = None
    for name, arr in fields.items():
        arr = np.asarray(arr)
        base = arr.shape[:3]
        if arr.ndim == 4 and arr.shape[3] != 3:
            raise ValueError(f"vector field {name} must have 3 components, got shape {arr.shape}")
        if arr.ndim not in (3, 4):
            raise ValueError(f"field {name} must be 3- or 4-dimensional, got shape {arr.shape}")
        if dims is None:
            dims = base
        elif base != dims:
            raise ValueError(f"field {name} dims {base} do not match {dims}")

    nx, ny, nz = dims
    lines = [
        "# vtk DataFile Version 3.0",
        "afsdml voxel fields",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} {_fmt(origin[2])}",
        f"SPACING {_fmt(spacing)} {_fmt(spacing)} {_fmt(spacing)}",
        f"POINT_DATA {nx * ny * nz}",
    ]
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 3:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            flat = arr.ravel(order="F")  # x varies fastest
            lines.extend(_fmt(v) for v in flat)
        else:
            lines.append(f"VECTORS {name} double")
            comps = [arr[..., c].ravel(order="F") for c in range(3)]
            lines.extend(
                f"{_fmt(comps[0][i])} {_fmt(comps[1][i])} {_fmt(comps[2][i])}"
                for i in range(comps[0].size)
            )
    atomic_write_text(path, "\n".join(lines) + "\n")
