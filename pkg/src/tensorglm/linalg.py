"""Gram tensors and Levi-Civita (adjugate) inverses, with an elimination fallback.

The determinant of a p x p matrix is the double epsilon contraction

    det W = (1/p!) eps^{a1..ap} eps_{b1..bp} W[b1,a1] ... W[bp,ap]

and the inverse is the cofactor contraction over the remaining p-1 slots
divided by (p-1)! det W.  Every term of the lower epsilon sum is equal once
its labels are permuted into canonical order, so both contractions are
evaluated with the lower symbol pinned to that order and its multiplicity
cancelled against the factorial.  What remains is a sum over the nonzero
entries of a single Levi-Civita symbol, accumulated with ``math.fsum`` so the
result is correctly rounded and independent of term order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .counting import OpCounter, tally
from .errors import ExtentTooLarge, ShapeMismatch, SingularGram, SingularMatrix
from .ndtensor import MAX_LEVI_CIVITA_RANK, Tensor, contract, levi_civita

__all__ = [
    "GramTensor",
    "InverseReport",
    "gram",
    "epsilon_determinant",
    "epsilon_inverse",
    "elimination_inverse",
    "elimination_determinant",
    "gauss_jordan",
    "invert_gram",
    "is_singular",
    "SINGULAR_RTOL",
]

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class GramTensor:
    """Per-group X^T X stack, shape (p, p, G)."""

    values: Tensor

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def groups(self) -> int:
        return self.values.shape[2]

    def slice(self, group: int) -> np.ndarray:
        return self.values.array[:, :, group]


@dataclass(frozen=True)
class InverseReport:
    inverse: Tensor
    determinants: tuple[float, ...]
    methods: tuple[str, ...]


def gram(X, counter: OpCounter | None = None) -> GramTensor:
    """W[a', a, g] = sum_k X[k, a', g] X[k, a, g].

    Padding rows of a design tensor are exactly zero, so summing over every
    k equals summing over the valid samples of each group.
    """
    values = getattr(X, "values", X)
    return GramTensor(contract("kal,kbl->abl", [values, values], counter))


def _square(W) -> np.ndarray:
    arr = np.asarray(W, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {arr.shape}")
    return arr


def is_singular(det: float, W: np.ndarray) -> bool:
    """|det| <= 1e-12 * max(1, ||W||_inf ** p)."""
    p = W.shape[0]
    norm_inf = float(np.max(np.sum(np.abs(W), axis=1)))
    return not abs(det) > SINGULAR_RTOL * max(1.0, norm_inf**p)


@lru_cache(maxsize=None)
def _epsilon_entries(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Index tuples and signs of the nonzero entries of the rank-p symbol."""
    eps = levi_civita(p).array
    perms = np.argwhere(eps != 0)
    signs = eps[tuple(perms.T)]
    perms.flags.writeable = False
    signs.flags.writeable = False
    return perms, signs


def _products(W: np.ndarray, rows, perms: np.ndarray, columns) -> np.ndarray:
    """prod_i W[rows[i], perm[columns[i]]] for every permutation row, left to right."""
    terms = None
    for row, col in zip(rows, columns):
        factor = W[row, perms[:, col]]
        terms = factor if terms is None else terms * factor
    return terms


def _check_rank(p: int) -> None:
    if p > MAX_LEVI_CIVITA_RANK:
        raise ExtentTooLarge(
            f"epsilon path supports p <= {MAX_LEVI_CIVITA_RANK}, got {p}"
        )


def _epsilon_det(W: np.ndarray, counter: OpCounter | None) -> float:
    p = W.shape[0]
    _check_rank(p)
    perms, signs = _epsilon_entries(p)
    terms = _products(W, range(p), perms, range(p))
    tally(counter, multiplies=len(perms) * (p - 1), adds=len(perms) - 1)
    return math.fsum(signs * terms)


def epsilon_determinant(W_slice, counter: OpCounter | None = None) -> float:
    """Determinant of a p x p matrix (p <= 6) as a Levi-Civita contraction."""
    return _epsilon_det(_square(W_slice), counter)


def _epsilon_inverse(W: np.ndarray, counter: OpCounter | None) -> tuple[np.ndarray, float]:
    p = W.shape[0]
    det = _epsilon_det(W, counter)
    if is_singular(det, W):
        raise SingularMatrix(f"determinant {det!r} is below the singularity threshold")
    perms, signs = _epsilon_entries(p)
    cof = np.empty((p, p))
    for zeta in range(p):
        mask = perms[:, 0] == zeta
        sub_perms, sub_signs = perms[mask], signs[mask]
        for mu in range(p):
            rest = [r for r in range(p) if r != mu]
            # eps_{mu, rest} with rest ascending is (-1)**mu
            parity = -1.0 if mu % 2 else 1.0
            if p == 1:
                cof[zeta, mu] = parity
                continue
            terms = _products(W, rest, sub_perms, range(1, p))
            cof[zeta, mu] = parity * math.fsum(sub_signs * terms)
    n_sub = math.factorial(p - 1)
    inv_det = 1.0 / det
    tally(
        counter,
        multiplies=p * p * n_sub * max(p - 2, 0) + p * p,
        adds=p * p * (n_sub - 1),
        divides=1,
    )
    return inv_det * cof, det


def epsilon_inverse(W_slice, counter: OpCounter | None = None) -> Tensor:
    """Adjugate-over-determinant inverse built from Levi-Civita contractions.

    ``result[z, m] = eps^{z a2..ap} eps_{m b2..bp} W[b2,a2]..W[bp,ap] / ((p-1)! det W)``.
    For p = 2 this is ``2 / (eps eps W W) * eps^{z a} eps_{m b} W[b, a]``.
    Raises :class:`SingularMatrix` when ``|det| <= 1e-12 max(1, ||W||_inf^p)``.
    """
    inverse, _ = _epsilon_inverse(_square(W_slice), counter)
    return Tensor(inverse)


def gauss_jordan(A, B, counter: OpCounter | None = None) -> np.ndarray:
    """Solve A X = B by Gauss-Jordan elimination with partial pivoting.

    A pivot whose magnitude is at most ``1e-12 * max|A|`` raises
    :class:`SingularMatrix`.
    """
    A = np.array(A, dtype=np.float64)
    B = np.array(B, dtype=np.float64)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n or B.shape[0] != n:
        raise ShapeMismatch(f"cannot solve system with A {A.shape} and B {B.shape}")
    m = B.shape[1]
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    aug = np.hstack([A, B])
    for j in range(n):
        pivot_row = j + int(np.argmax(np.abs(aug[j:, j])))
        pivot = aug[pivot_row, j]
        if not abs(pivot) > SINGULAR_RTOL * scale:
            raise SingularMatrix(f"pivot {pivot!r} in column {j} below threshold")
        if pivot_row != j:
            aug[[j, pivot_row]] = aug[[pivot_row, j]]
        width = (n - 1 - j) + m
        aug[j, j + 1:] = aug[j, j + 1:] / pivot
        aug[j, j] = 1.0
        others = [i for i in range(n) if i != j]
        factors = aug[others, j].copy()
        aug[others, j + 1:] -= factors[:, None] * aug[j, j + 1:]
        aug[others, j] = 0.0
        tally(counter, multiplies=(n - 1) * width, adds=(n - 1) * width, divides=width)
    solution = aug[:, n:]
    return solution[:, 0] if vector_rhs else solution


def elimination_inverse(W_slice, counter: OpCounter | None = None) -> Tensor:
    """Gauss-Jordan inverse with partial pivoting."""
    W = _square(W_slice)
    return Tensor(gauss_jordan(W, np.eye(W.shape[0]), counter))


def elimination_determinant(W_slice) -> float:
    """Determinant as the signed product of partial-pivot LU pivots."""
    U = _square(W_slice).copy()
    n = U.shape[0]
    det = 1.0
    for j in range(n):
        pivot_row = j + int(np.argmax(np.abs(U[j:, j])))
        if U[pivot_row, j] == 0.0:
            return 0.0
        if pivot_row != j:
            U[[j, pivot_row]] = U[[pivot_row, j]]
            det = -det
        det *= U[j, j]
        U[j + 1:, j:] -= np.outer(U[j + 1:, j] / U[j, j], U[j, j:])
    return det


def invert_gram(W: GramTensor, counter: OpCounter | None = None) -> InverseReport:
    """Invert every group slice; epsilon path for p <= 6, elimination above."""
    p, groups = W.p, W.groups
    inverse = np.empty((p, p, groups))
    dets: list[float] = []
    methods: list[str] = []
    for g in range(groups):
        W_g = np.ascontiguousarray(W.slice(g))
        try:
            if p <= MAX_LEVI_CIVITA_RANK:
                inverse[:, :, g], det = _epsilon_inverse(W_g, counter)
                methods.append("epsilon")
            else:
                det = elimination_determinant(W_g)
                if is_singular(det, W_g):
                    raise SingularMatrix(f"determinant {det!r} below threshold")
                inverse[:, :, g] = gauss_jordan(W_g, np.eye(p), counter)
                methods.append("elimination")
        except SingularMatrix as exc:
            raise SingularGram(g, str(exc)) from exc
        dets.append(det)
    return InverseReport(Tensor(inverse), tuple(dets), tuple(methods))
