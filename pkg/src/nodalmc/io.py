"""Plain data exports for external plotting: grid values, contour segments, replicate values."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ensembles import FieldSample
from .nodal import Segments

__all__ = ["write_field_sample", "read_field_sample", "write_segments_csv", "write_values_csv"]


def _header(sample: FieldSample, fmt: str) -> dict:
    return {
        "schema": 1,
        "format": fmt,
        "shape": list(sample.values.shape),
        "dtype": "<f8",
        "geometry": sample.geometry.to_dict(),
        "descriptor": sample.descriptor,
        "frequency": sample.frequency,
    }


def write_field_sample(sample: FieldSample, path, fmt: str = "csv") -> tuple[Path, Path]:
    """Write grid values to ``path`` (.csv rows or raw little-endian float64) plus ``path.json`` header.

    The header holds geometry, ensemble descriptor, seed and replicate index.
    """
    path = Path(path)
    if fmt not in ("csv", "bin"):
        raise ValueError("fmt must be 'csv' or 'bin'")
    header_path = path.with_name(path.name + ".json")
    if fmt == "csv":
        np.savetxt(path, np.atleast_2d(sample.values), delimiter=",", fmt="%.17g")
    else:
        sample.values.astype("<f8").tofile(path)
    header_path.write_text(json.dumps(_header(sample, fmt), indent=2, sort_keys=True))
    return path, header_path


def read_field_sample(path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    header = json.loads(path.with_name(path.name + ".json").read_text())
    shape = tuple(header["shape"])
    if header["format"] == "csv":
        values = np.loadtxt(path, delimiter=",", ndmin=2).reshape(shape)
    else:
        values = np.fromfile(path, dtype="<f8").reshape(shape)
    return header, values


def write_segments_csv(segs: Segments, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "y1", "x2", "y2", "length"])
        for row in segs.to_rows():
            w.writerow([repr(float(v)) for v in row])
    return path


def write_values_csv(values, path, header: str = "value") -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", header])
        for i, v in enumerate(np.asarray(values).ravel()):
            w.writerow([i, repr(float(v))])
    return path
