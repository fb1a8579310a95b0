"""Conventional staggered-matrix formulation of the grouped linear model.

All groups share one flat design matrix of shape (n_obs, p * G).  Column
``a * G + g`` holds parameter ``a`` of group ``g`` (all intercepts first, then
all first slopes, ...), so for two groups and one regressor the coefficient
vector reads ``(b1, b2, m1, m2)``.  The matrix is stored dense, zeros
included; that materialised sparsity is what the tensor layout removes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import OpCounter, stage
from .errors import LengthMismatch, NoDegreesOfFreedom, SingularMatrix, SingularSystem
from .glm import BetaTensor, Dataset
from .linalg import gauss_jordan
from .ndtensor import Tensor, contract

__all__ = [
    "StaggeredSystem",
    "StaggeredFit",
    "build_staggered",
    "fit_staggered",
    "flat_to_beta",
    "beta_to_flat",
    "fit_staggered_model",
    "staggered_covariance",
]


@dataclass(frozen=True, eq=False)
class StaggeredSystem:
    design: np.ndarray
    outcome: np.ndarray
    p: int
    n_groups: int
    group: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]


def build_staggered(data: Dataset) -> StaggeredSystem:
    """Block-staggered design; observations are ordered group by group."""
    p = data.n_regressors + 1
    G = data.n_groups
    order = np.argsort(data.group, kind="stable")
    design = np.zeros((data.n_obs, p * G))
    for row, i in enumerate(order):
        g = data.group[i]
        design[row, g] = 1.0
        for a in range(1, p):
            design[row, a * G + g] = data.regressors[i, a - 1]
    outcome = data.outcome[order].copy()
    design.flags.writeable = False
    outcome.flags.writeable = False
    return StaggeredSystem(design, outcome, p, G, data.group[order].copy())


def fit_staggered(sys: StaggeredSystem, counter: OpCounter | None = None) -> np.ndarray:
    """OLS via Gauss-Jordan elimination on the full (pG x pG) normal equations."""
    with stage(counter, "gram"):
        xtx = contract("ka,kb->ab", [sys.design, sys.design], counter).array
        xty = contract("ka,k->a", [sys.design, sys.outcome], counter).array
    with stage(counter, "solve"):
        try:
            return gauss_jordan(xtx, xty, counter)
        except SingularMatrix as exc:
            raise SingularSystem(f"staggered normal equations are singular: {exc}") from exc


def flat_to_beta(flat, p: int, G: int) -> BetaTensor:
    """beta[a, g] = flat[a * G + g]."""
    flat = np.asarray(flat, dtype=np.float64).reshape(-1)
    if flat.size != p * G:
        raise LengthMismatch(f"expected {p * G} coefficients, got {flat.size}")
    return BetaTensor(Tensor(flat.reshape(p, G)))


def beta_to_flat(beta: BetaTensor) -> np.ndarray:
    return beta.values.array.reshape(-1).copy()


@dataclass(frozen=True)
class StaggeredFit:
    system: StaggeredSystem
    flat: np.ndarray
    beta: BetaTensor
    sigma2: float
    df: int
    xtx_inverse: np.ndarray
    rss: tuple[float, ...]


def staggered_covariance(sys: StaggeredSystem) -> np.ndarray:
    """(X^T X)^{-1} of the full staggered system, by elimination."""
    xtx = sys.design.T @ sys.design
    try:
        return gauss_jordan(xtx, np.eye(xtx.shape[0]))
    except SingularMatrix as exc:
        raise SingularSystem(f"staggered normal equations are singular: {exc}") from exc


def fit_staggered_model(data: Dataset, counter: OpCounter | None = None) -> StaggeredFit:
    sys = build_staggered(data)
    flat = fit_staggered(sys, counter)
    resid = sys.outcome - sys.design @ flat
    df = sys.n_obs - sys.p * sys.n_groups
    if df < 1:
        raise NoDegreesOfFreedom(f"residual degrees of freedom {df} < 1")
    sigma2 = float(resid @ resid) / df
    rss = tuple(
        float(resid[sys.group == g] @ resid[sys.group == g]) for g in range(sys.n_groups)
    )
    return StaggeredFit(
        system=sys,
        flat=flat,
        beta=flat_to_beta(flat, sys.p, sys.n_groups),
        sigma2=sigma2,
        df=df,
        xtx_inverse=staggered_covariance(sys),
        rss=rss,
    )
