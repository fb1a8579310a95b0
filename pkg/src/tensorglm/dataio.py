"""CSV ingestion and the JSON run report."""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AllZeroHypothesis,
    EmptyFile,
    IndexOutOfRange,
    InputError,
    MissingColumn,
    NonNumericCell,
)
from .glm import Dataset
from .hypothesis import ContrastTensor
from .ndtensor import Tensor

__all__ = [
    "ModelSpec",
    "RunReport",
    "load_csv",
    "load_contrasts",
    "file_digest",
    "CONTRAST_HEADER",
]

CONTRAST_HEADER = ("hypothesis", "group", "param", "coeff")

_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")


@dataclass(frozen=True)
class ModelSpec:
    outcome: str
    regressors: tuple[str, ...]
    group: str

    def __post_init__(self) -> None:
        names = (self.outcome, self.group, *self.regressors)
        if not self.outcome or not self.group:
            raise InputError("outcome and group column names are required")
        if len(set(names)) != len(names):
            raise InputError(f"column names must be distinct, got {names}")

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.outcome, *self.regressors, self.group)


def _parse_decimal(text: str, row: int, column: str) -> float:
    cell = text.strip()
    if not _DECIMAL.match(cell):
        raise NonNumericCell(row, column, text)
    return float(cell)


def _read_rows(path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFile(f"{path} is empty")
        header = [name.strip() for name in reader.fieldnames]
        reader.fieldnames = header
        rows = [row for row in reader if any((v or "").strip() for v in row.values())]
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    return header, rows


def load_csv(path, spec: ModelSpec) -> Dataset:
    """Read a UTF-8 CSV into a :class:`Dataset`.

    Group labels map to ids 0..G-1 in order of first appearance.  Row
    numbers in errors count data rows from 1.
    """
    header, rows = _read_rows(path)
    for name in spec.columns:
        if name not in header:
            raise MissingColumn(f"column {name!r} not found in {path}; header is {header}")
    labels: dict[str, int] = {}
    outcome, regressors, group = [], [], []
    for i, row in enumerate(rows, start=1):
        outcome.append(_parse_decimal(row[spec.outcome] or "", i, spec.outcome))
        regressors.append([_parse_decimal(row[c] or "", i, c) for c in spec.regressors])
        label = (row[spec.group] or "").strip()
        group.append(labels.setdefault(label, len(labels)))
    x = np.array(regressors, dtype=np.float64).reshape(len(rows), len(spec.regressors))
    return Dataset(outcome, x, group, len(labels), tuple(labels))


def load_contrasts(path, p: int, G: int) -> ContrastTensor:
    """Read sparse contrast entries ``hypothesis,group,param,coeff`` into C[h, a, g].

    H is one more than the largest hypothesis index; cells not listed are
    zero.  A cell listed twice is an error.
    """
    header, rows = _read_rows(path)
    for name in CONTRAST_HEADER:
        if name not in header:
            raise MissingColumn(f"contrast file {path} lacks column {name!r}")
    entries: dict[tuple[int, int, int], float] = {}
    for i, row in enumerate(rows, start=1):
        idx = []
        for name, limit in (("hypothesis", None), ("param", p), ("group", G)):
            cell = (row[name] or "").strip()
            if not _INTEGER.match(cell):
                raise NonNumericCell(i, name, cell)
            value = int(cell)
            if value < 0 or (limit is not None and value >= limit):
                bound = "a non-negative integer" if limit is None else f"in [0, {limit})"
                raise IndexOutOfRange(f"row {i}: {name} {value} must be {bound}")
            idx.append(value)
        key = tuple(idx)
        if key in entries:
            raise InputError(f"row {i}: duplicate contrast entry {key}")
        entries[key] = _parse_decimal(row["coeff"] or "", i, "coeff")
    H = 1 + max(h for h, _, _ in entries)
    C = np.zeros((H, p, G))
    for (h, a, g), coeff in entries.items():
        C[h, a, g] = coeff
    for h in range(H):
        if not np.any(C[h]):
            raise AllZeroHypothesis(h)
    return ContrastTensor(Tensor(C))


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunReport:
    """Structured result of a ``fit`` or ``test`` run.

    ``beta[g][a]`` is the coefficient of parameter ``parameters[a]`` in group
    ``groups[g]``.
    """

    command: str
    backend: str
    model: dict
    groups: list[str]
    parameters: list[str]
    beta: list[list[float]]
    sigma2: float
    sigma2_per_group: list[float]
    df: int
    hypotheses: list[dict] | None = None
    F: float | None = None
    F_p: float | None = None
    cross_check: dict | None = None
    input_digests: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")
