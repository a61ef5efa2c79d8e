"""Readers and writers for the plain-text network, O-D and flow files.

Network file::

    nodes,<n>
    criteria,<r>
    <tail>,<head>,<c_1>,...,<c_r>     # one line per arc, in arc order

O-D file: ``origin,destination,demand`` per line. Measured-flows file:
``arc_index,flow`` per line. All indices are 0-based. Blank lines and lines
starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import MeasuredFlows, MultiCostNetwork, NetworkError, ODPair


def _rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, [tok.strip() for tok in line.split(",")]


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_network(path) -> MultiCostNetwork:
    header = {}
    arcs, costs = [], []
    for lineno, row in _rows(path):
        key = row[0].lower()
        if key in ("nodes", "criteria") and len(row) == 2:
            header[key] = int(row[1])
            continue
        r = header.get("criteria")
        if "nodes" not in header or r is None:
            raise NetworkError(f"{path}:{lineno}: arc line before nodes/criteria header")
        if len(row) != 2 + r:
            raise NetworkError(f"{path}:{lineno}: expected {2 + r} fields, got {len(row)}")
        arcs.append((int(row[0]), int(row[1])))
        costs.append([float(v) for v in row[2:]])
    if "nodes" not in header or "criteria" not in header:
        raise NetworkError(f"{path}: missing nodes/criteria header")
    costs = np.asarray(costs, dtype=np.float64).reshape(-1, header["criteria"])
    return MultiCostNetwork.from_arcs(header["nodes"], arcs, costs)


def format_network(network: MultiCostNetwork) -> str:
    lines = [f"nodes,{network.node_count}", f"criteria,{network.criteria_count}"]
    for t, h, c in zip(network.tails.tolist(), network.heads.tolist(), network.costs):
        lines.append(",".join([str(t), str(h)] + [_fmt(v) for v in c]))
    return "\n".join(lines) + "\n"


def write_network(path, network: MultiCostNetwork) -> None:
    atomic_write_text(path, format_network(network))


def read_od(path) -> list[ODPair]:
    out = []
    for lineno, row in _rows(path):
        if len(row) != 3:
            raise NetworkError(f"{path}:{lineno}: expected origin,destination,demand")
        out.append(ODPair(int(row[0]), int(row[1]), int(row[2])))
    return out


def write_od(path, od_pairs: Iterable[ODPair]) -> None:
    text = "".join(f"{w.origin},{w.destination},{w.demand}\n" for w in od_pairs)
    atomic_write_text(path, text)


def read_flows(path) -> MeasuredFlows:
    entries = {}
    for lineno, row in _rows(path):
        if len(row) != 2:
            raise NetworkError(f"{path}:{lineno}: expected arc_index,flow")
        arc = int(row[0])
        if arc in entries:
            raise NetworkError(f"{path}:{lineno}: duplicate arc {arc}")
        entries[arc] = float(row[1])
    return MeasuredFlows.from_mapping(entries)


def write_flows(path, measured: MeasuredFlows) -> None:
    text = "".join(
        f"{a},{_fmt(v)}\n"
        for a, v in zip(measured.arc_indices.tolist(), measured.values.tolist())
    )
    atomic_write_text(path, text)


def read_weights(path) -> np.ndarray:
    """Weight set from a JSON list of lists or from comma-separated rows."""
    text = Path(path).read_text()
    if text.lstrip().startswith("[") or text.lstrip().startswith("{"):
        obj = json.loads(text)
        if isinstance(obj, dict):
            obj = obj["weights"]
        return np.asarray(obj, dtype=np.float64)
    rows = [[float(v) for v in row] for _, row in _rows(path)]
    return np.asarray(rows, dtype=np.float64)


def format_matrix_csv(matrix: np.ndarray, header: Sequence[str] | None = None) -> str:
    lines = [",".join(header)] if header is not None else []
    for row in np.asarray(matrix):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"
