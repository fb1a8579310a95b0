"""Storage and operation counts for the tensor vs. staggered formulations.

Both backends run the same instrumented kernels (einsum contraction,
Levi-Civita inverse, Gauss-Jordan elimination), each of which adds the exact
number of scalar multiplies, adds and divides it executes to an
:class:`~tensorglm.counting.OpCounter`.  Counts are split into a ``gram``
stage (forming X^T X and X^T Y) and a ``solve`` stage (inverting or
eliminating and back-substituting).
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .counting import OpCounter, stage
from .errors import TensorGLMError
from .glm import Dataset, build_design, fit
from .linalg import gram, invert_gram
from .staggered import build_staggered, fit_staggered, flat_to_beta

__all__ = [
    "OpCounter",
    "BenchConfig",
    "BenchRow",
    "BenchReport",
    "count_elements",
    "measure_elements",
    "synthetic_dataset",
    "run_benchmark",
    "BACKENDS",
    "EQUIVALENCE_RTOL",
]

BACKENDS = ("tensor", "staggered")
EQUIVALENCE_RTOL = 1e-9


def count_elements(backend: str, G: int, p: int, n_per_group) -> tuple[int, int]:
    """Closed-form (stored, nonzero) design elements.

    ``n_per_group`` is an int (equal groups) or a sequence of G counts.
    Nonzero counts assume no regressor value is exactly zero.
    """
    counts = [int(n_per_group)] * G if np.isscalar(n_per_group) else [int(n) for n in n_per_group]
    if G < 1 or p < 1 or len(counts) != G or min(counts) < 1:
        raise ValueError("G, p and every group count must be positive")
    total = sum(counts)
    if backend == "staggered":
        return total * p * G, total * p
    if backend == "tensor":
        return max(counts) * p * G, total * p
    raise ValueError(f"unknown backend {backend!r}")


def measure_elements(backend: str, data: Dataset) -> tuple[int, int]:
    """(stored, nonzero) counted on the structures the backend actually builds."""
    if backend == "tensor":
        X, _ = build_design(data)
        arr = X.values.array
    elif backend == "staggered":
        arr = build_staggered(data).design
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return int(arr.size), int(np.count_nonzero(arr))


def synthetic_dataset(
    G: int, r: int, n: int, seed: int, duplicate_column: bool = False
) -> Dataset:
    """Equal-size groups; regressors ~ U[-1, 1], per-group true beta ~ N(0, 1), unit noise.

    The generator is seeded from ``(seed, G, r, n)`` so each sweep point is
    reproducible on its own.  ``duplicate_column`` copies the previous design
    column into the last regressor (the intercept when r == 1), which makes
    every Gram slice singular.
    """
    rng = np.random.default_rng([seed, G, r, n])
    group = np.repeat(np.arange(G), n)
    x = rng.uniform(-1.0, 1.0, size=(G * n, r))
    if duplicate_column and r >= 1:
        x[:, r - 1] = x[:, r - 2] if r >= 2 else 1.0
    true_beta = rng.normal(size=(r + 1, G))
    design = np.hstack([np.ones((G * n, 1)), x])
    y = np.einsum("ia,ai->i", design, true_beta[:, group]) + rng.normal(size=G * n)
    return Dataset(y, x, group, G)


@dataclass(frozen=True)
class BenchConfig:
    groups: tuple[int, ...] = (1, 2, 4, 8)
    regressors: tuple[int, ...] = (1,)
    samples: tuple[int, ...] = (32,)
    seed: int = 0
    repetitions: int = 3
    singular_points: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self) -> None:
        if not (self.groups and self.regressors and self.samples):
            raise ValueError("sweep lists must be non-empty")
        if min(self.groups) < 1 or min(self.samples) < 1 or min(self.regressors) < 0:
            raise ValueError("group and sample counts must be positive, regressors >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def points(self):
        for G in self.groups:
            for r in self.regressors:
                for n in self.samples:
                    yield G, r, n


@dataclass
class BenchRow:
    groups: int
    regressors: int
    samples: int
    backend: str
    stored_elements: int | None = None
    nonzero_elements: int | None = None
    flops_gram: int | None = None
    flops_solve: int | None = None
    flops_total: int | None = None
    multiplies: int | None = None
    adds: int | None = None
    divides: int | None = None
    median_seconds: float | None = None
    beta_max_rel_dev: float | None = None
    status: str = "OK"

    @property
    def failed(self) -> bool:
        return self.status != "OK"


COUNT_COLUMNS = tuple(f.name for f in fields(BenchRow) if f.name != "median_seconds")


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list[BenchRow] = field(default_factory=list)

    def row(self, G: int, r: int, n: int, backend: str) -> BenchRow:
        for row in self.rows:
            if (row.groups, row.regressors, row.samples, row.backend) == (G, r, n, backend):
                return row
        raise KeyError((G, r, n, backend))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = [f.name for f in fields(BenchRow)]
        writer.writerow(names)
        for row in self.rows:
            writer.writerow([_cell(getattr(row, name)) for name in names])
        return buf.getvalue()

    def to_table(self) -> str:
        header = ["G", "r", "n", "backend", "stored", "nonzero", "flops_gram",
                  "flops_solve", "flops_total", "median_s", "beta_dev", "status"]
        body = [
            [row.groups, row.regressors, row.samples, row.backend, row.stored_elements,
             row.nonzero_elements, row.flops_gram, row.flops_solve, row.flops_total,
             None if row.median_seconds is None else f"{row.median_seconds:.3e}",
             None if row.beta_max_rel_dev is None else f"{row.beta_max_rel_dev:.2e}",
             row.status]
            for row in self.rows
        ]
        cells = [[str(c) for c in header]] + [["-" if c is None else str(c) for c in r] for r in body]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _tensor_path(data: Dataset, counter: OpCounter):
    X, Y = build_design(data)
    with stage(counter, "gram"):
        W = gram(X, counter)
    with stage(counter, "solve"):
        inverse = invert_gram(W, counter)
    return fit(X, Y, counter, inverse=inverse).values.array


def _staggered_path(data: Dataset, counter: OpCounter):
    sys = build_staggered(data)
    flat = fit_staggered(sys, counter)
    return flat_to_beta(flat, sys.p, sys.n_groups).values.array


_PATHS = {"tensor": _tensor_path, "staggered": _staggered_path}


def _run_backend(backend: str, data: Dataset, repetitions: int):
    counters, times, beta = [], [], None
    for _ in range(repetitions):
        counter = OpCounter()
        start = time.perf_counter()
        beta = _PATHS[backend](data, counter)
        times.append(time.perf_counter() - start)
        counters.append(counter)
    first = counters[0]
    for other in counters[1:]:
        if (other.multiplies, other.adds, other.divides, other.stages) != (
            first.multiplies, first.adds, first.divides, first.stages
        ):
            raise RuntimeError(f"{backend} operation counts differ between repetitions")
    return beta, first, statistics.median(times)


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    """Sweep every (groups, regressors, samples) point over both backends.

    A fit error marks that point's rows FAILED and the sweep continues; a
    beta disagreement above 1e-9 (relative to max |beta|) does the same.
    """
    report = BenchReport(cfg)
    for G, r, n in cfg.points():
        data = synthetic_dataset(G, r, n, cfg.seed, duplicate_column=(G, r, n) in cfg.singular_points)
        rows, betas = {}, {}
        for backend in BACKENDS:
            row = BenchRow(G, r, n, backend)
            row.stored_elements, row.nonzero_elements = measure_elements(backend, data)
            try:
                betas[backend], counter, row.median_seconds = _run_backend(
                    backend, data, cfg.repetitions
                )
            except TensorGLMError as exc:
                row.status = f"FAILED: {type(exc).__name__}"
            else:
                row.flops_gram = counter.stages.get("gram", 0)
                row.flops_solve = counter.stages.get("solve", 0)
                row.flops_total = counter.total
                row.multiplies = counter.multiplies
                row.adds = counter.adds
                row.divides = counter.divides
            rows[backend] = row
        if len(betas) == len(BACKENDS):
            ref = betas["staggered"]
            scale = float(np.max(np.abs(ref))) or 1.0
            dev = float(np.max(np.abs(betas["tensor"] - ref))) / scale
            for row in rows.values():
                row.beta_max_rel_dev = dev
                if not dev < EQUIVALENCE_RTOL:
                    row.status = "FAILED: beta mismatch"
        else:
            for row in rows.values():
                if not row.failed:
                    row.status = "FAILED: other backend failed"
        report.rows.extend(rows[b] for b in BACKENDS)
    return report
