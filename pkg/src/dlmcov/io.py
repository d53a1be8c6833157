"""JSON model documents and CSV series / diagnostics."""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .beliefs import FourthOrderBeliefs, beliefs_from_dict
from .model import ModelSpec


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _round17(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    return obj


def dumps(doc) -> str:
    return json.dumps(_round17(doc), indent=2, sort_keys=False) + "\n"


def read_model(path) -> tuple[ModelSpec, FourthOrderBeliefs | None, dict]:
    """Parse a model document: ``r, p, F, G, mu0, Sigma, V, W`` and
    optionally ``fourth_order``."""
    doc = json.loads(Path(path).read_text())
    spec = ModelSpec.from_dict(doc)
    beliefs = None
    if "fourth_order" in doc:
        beliefs = beliefs_from_dict(doc["fourth_order"], spec.r, spec.p, W=spec.W, V=spec.V)
    return spec, beliefs, doc


def write_series(path, X) -> None:
    X = np.asarray(X, dtype=float)
    r = X.shape[1]
    buf = _io.StringIO()
    buf.write(",".join(["t"] + [f"x{i + 1}" for i in range(r)]) + "\n")
    for t, row in enumerate(X, start=1):
        buf.write(",".join([str(t)] + [fmt(v) for v in row]) + "\n")
    Path(path).write_text(buf.getvalue())


def read_series(path) -> np.ndarray:
    """Rows ordered by the ``t`` column; returns an ``(n, r)`` array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return np.zeros((0, 0))
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[0].strip() != "t":
        raise ValueError("series CSV must start with a 't' column")
    ncol = len(header) - 1
    data = np.array([[float(v) for v in row[1:]] for row in body], dtype=float).reshape(-1, ncol)
    t = np.array([int(float(row[0])) for row in body])
    return data[np.argsort(t, kind="stable")]


def diagnostics_csv(diags) -> str:
    if not diags:
        return "t,standardized_size,size_ratio\n"
    r = diags[0].error.size
    lines = [",".join(["t"] + [f"e{i + 1}" for i in range(r)] + ["standardized_size", "size_ratio"])]
    for d in diags:
        lines.append(",".join([str(d.t)] + [fmt(v) for v in d.error]
                              + [fmt(d.standardized_size), fmt(d.size_ratio)]))
    return "\n".join(lines) + "\n"
