"""Dense immutable tensors, Einstein-notation parsing and contraction.

A :class:`Tensor` is a read-only float64 array with a row-major layout.
Contractions are written as einsum strings (``"kal,al->kl"``).  A label that
is absent from the output is summed; a label that appears in the output is a
free (batch) label even when it repeats across operands, which is how the
group index of a grouped linear model rides along untouched::

    >>> X = tensor_create((2, 1, 1), (1.0, 1.0))
    >>> b = tensor_create((1, 1), (3.0,))
    >>> contract("kal,al->kl", [X, b]).data
    (3.0, 3.0)

Index placement (upper/lower) carries no meaning here; all axes are plain
Euclidean axes.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .counting import OpCounter, tally
from .errors import (
    DuplicateOutputLabel,
    ExtentMismatch,
    ExtentTooLarge,
    InvalidOutputLabel,
    OperandCountMismatch,
    ParseError,
    ShapeMismatch,
)

__all__ = [
    "Tensor",
    "EinsumSpec",
    "ContractionPlan",
    "tensor_create",
    "as_tensor",
    "parse_einsum",
    "plan_contraction",
    "contract",
    "levi_civita",
    "permutation_sign",
    "MAX_LEVI_CIVITA_RANK",
]

MAX_LEVI_CIVITA_RANK = 6


class Tensor:
    """Immutable dense array of 64-bit floats.

    Construct with :func:`tensor_create` (flat row-major data) or
    :func:`as_tensor` (anything numpy can turn into an array).  The
    underlying buffer is copied and marked read-only.
    """

    __slots__ = ("_array",)

    def __init__(self, array) -> None:
        arr = np.array(array, dtype=np.float64, copy=True, order="C")
        if any(extent < 1 for extent in arr.shape):
            raise ShapeMismatch(f"all extents must be >= 1, got {arr.shape}")
        arr.flags.writeable = False
        self._array = arr

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the values."""
        return self._array

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def data(self) -> tuple[float, ...]:
        """Flat row-major values."""
        return tuple(float(v) for v in self._array.ravel())

    def __getitem__(self, index):
        value = self._array[index]
        if isinstance(value, np.ndarray):
            return Tensor(value)
        return float(value)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._array
        return self._array.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._array, other._array)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, data={self._array.tolist()!r})"


def tensor_create(shape: Sequence[int], data: Iterable[float]) -> Tensor:
    """Build a tensor from its extents and flat row-major data."""
    shape = tuple(int(s) for s in shape)
    if any(s < 1 for s in shape):
        raise ShapeMismatch(f"all extents must be >= 1, got {shape}")
    flat = np.asarray(list(data), dtype=np.float64)
    expected = math.prod(shape)
    if flat.ndim != 1 or flat.size != expected:
        raise ShapeMismatch(
            f"shape {shape} needs {expected} values, got {flat.size}"
        )
    return Tensor(flat.reshape(shape))


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


# --- einsum specs -------------------------------------------------------

_SUBSCRIPT = re.compile(r"[A-Za-z]*\Z")


@dataclass(frozen=True)
class EinsumSpec:
    operands: tuple[str, ...]
    output: str

    @property
    def labels(self) -> tuple[str, ...]:
        """Distinct operand labels in order of first appearance."""
        return tuple(dict.fromkeys("".join(self.operands)))

    @property
    def summation_labels(self) -> tuple[str, ...]:
        return tuple(l for l in self.labels if l not in self.output)

    @property
    def free_labels(self) -> tuple[str, ...]:
        return tuple(self.output)

    def __str__(self) -> str:
        return ",".join(self.operands) + "->" + self.output


def parse_einsum(spec_text: str) -> EinsumSpec:
    """Parse ``"ab,bc->ac"`` into an :class:`EinsumSpec`.

    Grammar: ``subscripts ("," subscripts)* "->" subscripts`` where each
    subscript is zero or more ASCII letters.  Whitespace is ignored.
    """
    text = "".join(spec_text.split())
    if text.count("->") != 1:
        raise ParseError(f"expected exactly one '->' in {spec_text!r}")
    lhs, output = text.split("->")
    operands = tuple(lhs.split(","))
    for sub in operands + (output,):
        if not _SUBSCRIPT.match(sub):
            raise ParseError(f"bad subscript {sub!r} in {spec_text!r}")
    bound = set("".join(operands))
    for label in output:
        if label not in bound:
            raise InvalidOutputLabel(f"output label {label!r} appears in no operand")
    if len(set(output)) != len(output):
        raise DuplicateOutputLabel(f"output {output!r} repeats a label")
    return EinsumSpec(operands, output)


@dataclass(frozen=True)
class ContractionPlan:
    spec: EinsumSpec
    bindings: tuple[tuple[str, ...], ...]
    extents: dict[str, int]
    summation: tuple[str, ...]

    @property
    def output_shape(self) -> tuple[int, ...]:
        return tuple(self.extents[l] for l in self.spec.output)

    @property
    def summation_size(self) -> int:
        return math.prod(self.extents[l] for l in self.summation)


def plan_contraction(spec: EinsumSpec | str, shapes: Sequence[Sequence[int]]) -> ContractionPlan:
    if isinstance(spec, str):
        spec = parse_einsum(spec)
    if len(shapes) != len(spec.operands):
        raise OperandCountMismatch(
            f"{spec} takes {len(spec.operands)} operands, got {len(shapes)}"
        )
    extents: dict[str, int] = {}
    for position, (sub, shape) in enumerate(zip(spec.operands, shapes)):
        if len(sub) != len(shape):
            raise ShapeMismatch(
                f"operand {position} has rank {len(shape)} but subscript {sub!r}"
            )
        for label, extent in zip(sub, shape):
            known = extents.setdefault(label, int(extent))
            if known != extent:
                raise ExtentMismatch(
                    f"label {label!r} bound to extents {known} and {extent}"
                )
    return ContractionPlan(
        spec=spec,
        bindings=tuple(tuple(sub) for sub in spec.operands),
        extents=extents,
        summation=spec.summation_labels,
    )


def contract(
    spec: EinsumSpec | str,
    operands: Sequence[Tensor | np.ndarray],
    counter: OpCounter | None = None,
) -> Tensor:
    """Evaluate an Einstein-summation contraction.

    Summation assignments are visited in row-major order over the summation
    labels (first-appearance order).  Each term is the left-to-right product
    of the operand entries; the accumulator starts at the first term.  The
    loop over free labels is vectorised, which does not change the
    per-element arithmetic, so results are bit-reproducible against a
    scalar nested-loop evaluation.
    """
    arrays = [np.asarray(op, dtype=np.float64) for op in operands]
    plan = plan_contraction(spec, [a.shape for a in arrays])
    output = plan.spec.output
    out_shape = plan.output_shape
    out_rank = len(output)
    position = {label: i for i, label in enumerate(output)}
    slot = {label: i for i, label in enumerate(plan.summation)}

    # Per operand axis: a broadcastable index grid for free labels, or the
    # slot of the summation label whose current value indexes that axis.
    templates = []
    for binding in plan.bindings:
        template = []
        for label in binding:
            if label in position:
                grid_shape = [1] * out_rank
                grid_shape[position[label]] = plan.extents[label]
                template.append(np.arange(plan.extents[label], dtype=np.intp).reshape(grid_shape))
            else:
                template.append(slot[label])
        templates.append(template)

    acc = None
    for assignment in itertools.product(*(range(plan.extents[l]) for l in plan.summation)):
        term = None
        for array, template in zip(arrays, templates):
            index = tuple(assignment[t] if isinstance(t, int) else t for t in template)
            value = array[index] if index else array[()]
            term = value if term is None else term * value
        term = np.broadcast_to(term, out_shape)
        acc = np.array(term, dtype=np.float64) if acc is None else acc + term

    out_size = math.prod(out_shape)
    terms = plan.summation_size
    tally(
        counter,
        multiplies=(len(arrays) - 1) * out_size * terms,
        adds=out_size * (terms - 1),
    )
    return Tensor(acc)


# --- Levi-Civita ----------------------------------------------------------

def permutation_sign(perm: Sequence[int]) -> int:
    """+1 for an even permutation, -1 for odd, 0 if an index repeats."""
    if len(set(perm)) != len(perm):
        return 0
    inversions = sum(
        1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j]
    )
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def levi_civita(n: int) -> Tensor:
    """Totally antisymmetric symbol of rank ``n`` (extent ``n`` per axis)."""
    if n < 1:
        raise ShapeMismatch(f"Levi-Civita rank must be >= 1, got {n}")
    if n > MAX_LEVI_CIVITA_RANK:
        raise ExtentTooLarge(
            f"Levi-Civita rank {n} exceeds {MAX_LEVI_CIVITA_RANK} ({n}**{n} dense entries)"
        )
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = permutation_sign(perm)
    return Tensor(eps)
