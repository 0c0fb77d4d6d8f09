"""Tuning matrices, normalization and file formats.

Convention: a tuning matrix is M stimuli x N units, so each *column* is one
unit's tuning curve.  This holds everywhere in the package.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateUnitError, FormatError

RAW = "raw"
CENTERED_UNIT_NORM = "centered_unit_norm"

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class TuningMatrix:
    data: np.ndarray
    unit_labels: Optional[tuple] = None
    normalization: str = RAW

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ValueError(f"tuning matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"tuning matrix needs M >= 1 and N >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise FormatError("non-finite entry", row=int(bad[0]) + 1, column=int(bad[1]) + 1)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.unit_labels is not None:
            labels = tuple(str(s) for s in self.unit_labels)
            if len(labels) != data.shape[1]:
                raise ValueError(f"{len(labels)} labels for {data.shape[1]} units")
            if len(set(labels)) != len(labels):
                raise ValueError("unit labels must be unique")
            object.__setattr__(self, "unit_labels", labels)
        if self.normalization not in (RAW, CENTERED_UNIT_NORM):
            raise ValueError(f"unknown normalization tag {self.normalization!r}")

    @property
    def stimulus_count(self) -> int:
        return self.data.shape[0]

    @property
    def unit_count(self) -> int:
        return self.data.shape[1]

    @property
    def is_normalized(self) -> bool:
        return self.normalization == CENTERED_UNIT_NORM

    def columns(self, idx: Sequence[int]) -> "TuningMatrix":
        """Sub-population made of the given unit columns (normalization is kept)."""
        idx = np.asarray(idx, dtype=np.intp)
        labels = None
        if self.unit_labels is not None:
            labels = tuple(self.unit_labels[i] for i in idx)
        return TuningMatrix(self.data[:, idx], labels, self.normalization)


def center_and_normalize(m: TuningMatrix) -> TuningMatrix:
    """Mean-center every column and scale it to unit Euclidean norm.

    After this, ``x_i @ y_j`` is the Pearson correlation between units.
    """
    centered = m.data - m.data.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(centered, axis=0)
    bad = np.flatnonzero(norms <= _NORM_TOL)
    if bad.size:
        raise DegenerateUnitError(bad.tolist())
    out = centered / norms
    # a second pass removes the O(eps) mean left by the first division
    out -= out.mean(axis=0, keepdims=True)
    out /= np.linalg.norm(out, axis=0)
    return TuningMatrix(out, m.unit_labels, CENTERED_UNIT_NORM)


def _parse_float(cell: str, row: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise FormatError(f"non-numeric cell {cell!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite cell {cell!r}", row=row, column=column)
    return value


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _load_csv(path: Path) -> TuningMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    # drop trailing blank lines only
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise FormatError("empty file")

    labels = None
    start = 0
    if not all(_is_number(c) for c in rows[0]):
        labels = [c.strip() for c in rows[0]]
        start = 1
    body = rows[start:]
    if not body:
        raise FormatError("no data rows")

    width = len(labels) if labels is not None else len(body[0])
    values = np.empty((len(body), width))
    for r, row in enumerate(body):
        line = r + start + 1
        if len(row) != width:
            raise FormatError(f"expected {width} cells, got {len(row)}", row=line)
        for c, cell in enumerate(row):
            values[r, c] = _parse_float(cell.strip(), line, c + 1)
    return TuningMatrix(values, labels)


def _load_rawbin(path: Path) -> TuningMatrix:
    blob = path.read_bytes()
    if len(blob) < 16:
        raise FormatError("raw binary file shorter than its 16-byte header")
    rows, cols = struct.unpack("<QQ", blob[:16])
    expected = 16 + 8 * rows * cols
    if len(blob) != expected:
        raise FormatError(f"raw binary size {len(blob)} does not match header ({expected})")
    data = np.frombuffer(blob, dtype="<f8", offset=16).reshape(rows, cols)
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise FormatError("non-finite entry", row=int(bad[0]) + 1, column=int(bad[1]) + 1)
    return TuningMatrix(data)


def load_matrix(path, format: str = "csv") -> TuningMatrix:
    """Load a tuning matrix from ``csv`` or ``rawbin``.

    Missing/unreadable files raise ``OSError``; malformed content raises
    ``FormatError`` naming the offending (1-based) row and column.
    """
    path = Path(path)
    if format == "csv":
        return _load_csv(path)
    if format == "rawbin":
        return _load_rawbin(path)
    raise ValueError(f"unknown matrix format {format!r}")


def save_matrix(m: TuningMatrix, path, format: str = "csv") -> None:
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if m.unit_labels is not None:
                w.writerow(m.unit_labels)
            for row in m.data:
                w.writerow([format_float(v) for v in row])
    elif format == "rawbin":
        rows, cols = m.data.shape
        with open(path, "wb") as fh:
            fh.write(struct.pack("<QQ", rows, cols))
            fh.write(np.ascontiguousarray(m.data, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown matrix format {format!r}")


def format_float(x: float) -> str:
    """Fixed 17-significant-digit text; round-trips float64 exactly."""
    return format(float(x), ".17g")


def save_plan(plan, path) -> Path:
    """Write a plan as sparse CSV triplets plus a JSON metadata sidecar.

    Returns the sidecar path (``<path stem>.json``).
    """
    path = Path(path)
    entries = plan.entries
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_index", "target_index", "mass"])
        for i, j in zip(*np.nonzero(entries > 0)):
            w.writerow([int(i), int(j), repr(float(entries[i, j]))])
    meta = {
        "schema_version": 1,
        "shape": list(entries.shape),
        "s": plan.total_mass,
        "objective": plan.objective,
        "row_sums": plan.row_sums.tolist(),
        "col_sums": plan.col_sums.tolist(),
    }
    sidecar = path.with_suffix(".json")
    sidecar.write_text(dumps_json(meta))
    return sidecar


def load_plan(path):
    """Inverse of :func:`save_plan` (entries, metadata)."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    entries = np.zeros(tuple(meta["shape"]))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for i, j, mass in reader:
            entries[int(i), int(j)] = float(mass)
    return entries, meta


# ---------------------------------------------------------------------------
# deterministic JSON


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # pure-python encoder path so floats use the 17-digit formatter
        def floatstr(v):
            return format_float(v)

        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent,
            floatstr, self.key_separator, self.item_separator, self.sort_keys,
            self.skipkeys, _one_shot,
        )(o, 0)


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats printed with 17 significant digits."""
    return json.dumps(_jsonable(obj), cls=_Encoder, indent=2, sort_keys=True) + "\n"
