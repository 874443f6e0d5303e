"""CSV reading and writing."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, LdaoError, ValidationError


class IngestError(ValidationError):
    pass


class MissingTarget(IngestError):
    pass


class NonNumericCell(IngestError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column!r}")
        self.row = row
        self.column = column


class EmptyFile(IngestError):
    pass


class RaggedRow(IngestError):
    pass


class IoError(LdaoError, OSError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    """How to parse a file.

    ``target`` is a column name, or a zero-based index (required when
    ``has_header`` is False).
    """

    target: str | int = "y"
    delimiter: str = ","
    has_header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValidationError("delimiter must be a single character")
        if not self.has_header and not isinstance(self.target, int):
            raise ValidationError("headerless files need an index-based target")


def _resolve_target(header: list[str], target) -> int:
    if isinstance(target, int):
        if not -len(header) <= target < len(header):
            raise MissingTarget(f"target index {target} out of range ({len(header)} columns)")
        return target % len(header)
    hits = [i for i, name in enumerate(header) if name == target]
    if not hits:
        raise MissingTarget(f"no column named {target!r}")
    if len(hits) > 1:
        raise MissingTarget(f"column name {target!r} is ambiguous")
    return hits[0]


def _parse(token: str) -> float:
    v = float(token)
    if not math.isfinite(v):
        raise ValueError(token)
    return v


def read_table(path, delimiter: str = ",", has_header: bool = True):
    """Header and float matrix of a numeric CSV. Row numbers in errors count
    the header as row 1."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise EmptyFile(f"{path} is empty")
    if has_header:
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        offset = 2
    else:
        header = [f"col{j}" for j in range(len(rows[0]))]
        body = rows
        offset = 1
    if not body:
        raise EmptyFile(f"{path} has no data rows")
    width = len(header)
    data = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise RaggedRow(f"row {i + offset} has {len(row)} fields, expected {width}")
        for j, tok in enumerate(row):
            try:
                data[i, j] = _parse(tok.strip())
            except ValueError:
                raise NonNumericCell(i + offset, header[j], tok) from None
    return header, data


def read_csv(path, schema: CsvSchema | None = None) -> Dataset:
    """Load a numeric CSV; every non-target column becomes a feature, in file order."""
    schema = schema or CsvSchema()
    header, data = read_table(path, schema.delimiter, schema.has_header)
    t = _resolve_target(header, schema.target)
    feats = [j for j in range(len(header)) if j != t]
    if not feats:
        raise ValidationError("file has no feature columns besides the target")
    return Dataset(data[:, feats], data[:, t], tuple(header[j] for j in feats), header[t])


def write_csv(dataset: Dataset, path, mark_synthetic: bool = False, delimiter: str = ",") -> None:
    """Write features then target; optionally a trailing 0/1 ``synthetic`` column.

    Values are written with 17 significant digits so reading back gives
    the same doubles.
    """
    if dataset.n_features < 1:
        raise ValidationError("dataset has no feature columns")
    header = list(dataset.feature_names) + [dataset.target_name]
    if mark_synthetic:
        header.append("synthetic")
    Z = np.column_stack([dataset.features, dataset.target])
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(header)
            for i, row in enumerate(Z):
                cells = [format(float(v), ".17g") for v in row]
                if mark_synthetic:
                    cells.append("1" if dataset.synthetic_mask[i] else "0")
                w.writerow(cells)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def dataset_checksum(dataset: Dataset) -> str:
    """SHA-256 over the raw feature and target bytes."""
    h = hashlib.sha256()
    for a in (dataset.features, dataset.target):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()
