"""JSON file formats for matrices, network specs and channels.

Matrix::

    {"dim_rows": n, "dim_cols": m, "entries": [[re, im], ...]}

row-major, with ``"kind": "density"`` added for density operators.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .qmath import DensityOperator, as_matrix


class FormatError(ValueError):
    """Malformed file content. The message names the offending field or index."""


def matrix_to_dict(m, kind: str | None = None) -> dict:
    arr = as_matrix(m)
    doc = {
        "dim_rows": int(arr.shape[0]),
        "dim_cols": int(arr.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in arr.reshape(-1)],
    }
    if kind is None and isinstance(m, DensityOperator):
        kind = "density"
    if kind is not None:
        doc["kind"] = kind
    return doc


def matrix_from_dict(doc) -> np.ndarray:
    if not isinstance(doc, dict):
        raise FormatError("matrix document must be a JSON object")
    try:
        rows, cols = doc["dim_rows"], doc["dim_cols"]
        entries = doc["entries"]
    except KeyError as exc:
        raise FormatError(f"matrix document missing field {exc.args[0]!r}") from None
    for name, val in (("dim_rows", rows), ("dim_cols", cols)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise FormatError(f"{name} must be a positive integer, got {val!r}")
    if not isinstance(entries, list):
        raise FormatError("entries must be a list")
    if len(entries) != rows * cols:
        raise FormatError(f"entries has {len(entries)} items, expected {rows * cols}")
    out = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(entries):
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise FormatError(f"entries[{i}] must be a [re, im] pair of numbers, got {pair!r}")
        out[i] = complex(pair[0], pair[1])
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise FormatError(f"entries[{bad}] is not finite")
    return out.reshape(rows, cols)


def _load_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_matrix(path) -> np.ndarray:
    return matrix_from_dict(_load_json(path))


def load_density(path) -> DensityOperator:
    return DensityOperator(load_matrix(path))


def save_matrix(path, m, kind: str | None = None) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(m, kind)) + "\n")


def network_to_dict(spec) -> dict:
    return {
        "target_dim": spec.target_dim,
        "unitary": matrix_to_dict(spec.unitary),
        "description": spec.description,
    }


def network_from_dict(doc):
    from .networks import NetworkSpec

    if not isinstance(doc, dict) or "unitary" not in doc:
        raise FormatError("network document needs a 'unitary' matrix")
    u = matrix_from_dict(doc["unitary"])
    spec = NetworkSpec(u, description=str(doc.get("description", "")))
    if "target_dim" in doc and doc["target_dim"] != spec.target_dim:
        raise FormatError(f"target_dim {doc['target_dim']!r} does not match unitary size {spec.target_dim}")
    return spec


def channel_to_dict(ch) -> dict:
    return {
        "dim": ch.dim,
        "kraus": [matrix_to_dict(k) for k in ch.kraus_ops],
        "label": ch.label,
    }


def channel_from_dict(doc):
    from .channels import KrausChannel

    if not isinstance(doc, dict):
        raise FormatError("channel document must be a JSON object")
    try:
        dim, kraus = doc["dim"], doc["kraus"]
    except KeyError as exc:
        raise FormatError(f"channel document missing field {exc.args[0]!r}") from None
    if not isinstance(kraus, list) or not kraus:
        raise FormatError("kraus must be a nonempty list of matrices")
    ops = []
    for i, k in enumerate(kraus):
        try:
            ops.append(matrix_from_dict(k))
        except FormatError as exc:
            raise FormatError(f"kraus[{i}]: {exc}") from None
    ch = KrausChannel(ops, label=str(doc.get("label", "")))
    if ch.dim != dim:
        raise FormatError(f"dim {dim!r} does not match Kraus operator size {ch.dim}")
    return ch


def load_channel(path):
    return channel_from_dict(_load_json(path))


def load_network(path):
    return network_from_dict(_load_json(path))
