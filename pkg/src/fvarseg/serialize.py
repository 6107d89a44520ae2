"""Canonical JSON/CSV output and data-file ingestion.

All floating-point output is printed with 17 significant digits so that
results round-trip exactly and repeated runs are byte identical.  The
JSON writer preserves dict insertion order and never emits timestamps.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import math

import numpy as np

from fvarseg.errors import ConfigurationError, DataError

FLOAT_FMT = "%.17g"


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialised")
    return FLOAT_FMT % x


def canonical_json(obj, indent: int = 0) -> str:
    """Serialise nested dicts/lists/scalars with fixed float formatting."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {canonical_json(v, indent + 2)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}  {canonical_json(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_panel_csv(path, values: np.ndarray, orientation: str = "columns") -> None:
    """Write a p x n panel as CSV; default layout is one column per series."""
    mat = values.T if orientation == "columns" else values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in mat:
            writer.writerow([FLOAT_FMT % x for x in row])


def read_panel_csv(path, orientation: str = "columns") -> np.ndarray:
    """Read a panel CSV into the internal p x n layout.

    ``orientation="columns"`` means columns are series and rows are time
    points (the default export layout); "rows" flips it.  Ragged rows,
    non-numeric cells and non-finite values are data errors reported
    with 1-based row/column coordinates.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"ragged CSV: row {i} has {len(row)} cells, expected {width}"
                )
            parsed = []
            for j, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"non-numeric cell at row {i}, column {j}: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(f"non-finite value at row {i}, column {j}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"no data rows found in {path}")
    mat = np.asarray(rows)
    return mat.T if orientation == "columns" else mat


def load_default_calibration():
    """Packaged threshold models produced by the repository calibration run."""
    from fvarseg.tuning import CalibrationResult

    ref = importlib.resources.files("fvarseg").joinpath(
        "data/default_thresholds.json"
    )
    if not ref.is_file():
        raise ConfigurationError(
            "packaged default thresholds missing; run 'fvarseg calibrate' and pass "
            "the model file explicitly"
        )
    return CalibrationResult.from_dict(json.loads(ref.read_text()))
