"""JSON and CSV encodings of networks, parameter vectors and reports.

Floats are written with Python's shortest round-trip representation, so a
finite double read back from the JSON is bit-identical to the one written.
Non-finite floats, which plain JSON cannot hold, are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch
from .network import Architecture, Layer, ParamVector, StructuredNetwork

__all__ = [
    "network_to_dict",
    "network_from_dict",
    "params_to_dict",
    "params_from_dict",
    "to_jsonable",
    "dumps",
    "write_json",
    "read_json",
    "write_csv",
]


def network_to_dict(net: StructuredNetwork) -> dict:
    return {
        "layers": [
            {
                "weights": {
                    "rows": layer.out_dim,
                    "cols": layer.in_dim,
                    "data": [float(v) for v in layer.weights.ravel()],
                },
                "bias": [float(v) for v in layer.bias],
            }
            for layer in net.layers
        ]
    }


def network_from_dict(data: Mapping) -> StructuredNetwork:
    layers = []
    for entry in data["layers"]:
        w = entry["weights"]
        rows, cols = int(w["rows"]), int(w["cols"])
        values = np.asarray([float(v) for v in w["data"]], dtype=np.float64)
        if values.size != rows * cols:
            raise DimensionMismatch(f"weights declare {rows}x{cols} but hold {values.size} entries")
        layers.append(Layer(values.reshape(rows, cols), [float(v) for v in entry["bias"]]))
    return StructuredNetwork(tuple(layers))


def params_to_dict(params: ParamVector) -> dict:
    return {"arch": list(params.architecture.dims), "theta": [float(v) for v in params.values]}


def params_from_dict(data: Mapping) -> ParamVector:
    return ParamVector(
        np.asarray([float(v) for v in data["theta"]], dtype=np.float64),
        Architecture(tuple(int(v) for v in data["arch"])),
    )


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays, tuples and non-finite floats to plain JSON values."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path: str | Path | None) -> str:
    """Serialize ``obj``; write it to ``path`` unless ``path`` is None or ``"-"``."""
    text = dumps(obj)
    if path is not None and str(path) != "-":
        Path(path).write_text(text)
    return text


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def write_csv(rows: Iterable[Sequence], header: Sequence[str], path: str | Path | None = None) -> str:
    """Write rows with a header line; return the CSV text."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
