"""Grouped linear model in tensor form.

The model is ``Y[k, g] = X[k, a, g] beta[a, g] + N[k, g]`` with k the sample
within a group, a the parameter (slot 0 is the intercept) and g the group.
Ragged groups are zero-padded along k to the largest group; padding rows are
exactly zero so every contraction over k ignores them without a mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import OpCounter, stage
from .errors import (
    EmptyGroup,
    GroupIdOutOfRange,
    InsufficientSamples,
    NoDegreesOfFreedom,
    NumericalError,
    ShapeMismatch,
)
from .linalg import GramTensor, InverseReport, gram, invert_gram
from .ndtensor import Tensor, contract

__all__ = [
    "Dataset",
    "DesignTensor",
    "OutcomeTensor",
    "BetaTensor",
    "ResidualTensor",
    "VarianceEstimate",
    "TensorFit",
    "build_design",
    "fit",
    "residuals",
    "estimate_variance",
    "fit_model",
]


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations with an outcome, ``r`` regressors and a dense group id.

    ``regressors`` has shape (n_obs, r); ``r`` may be zero.
    """

    outcome: np.ndarray
    regressors: np.ndarray
    group: np.ndarray
    n_groups: int
    group_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        outcome = _frozen(self.outcome, np.float64).reshape(-1)
        regressors = np.asarray(self.regressors, dtype=np.float64)
        if regressors.size == 0:
            regressors = np.zeros((outcome.size, 0))
        elif regressors.ndim == 1:
            regressors = regressors.reshape(-1, 1)
        regressors = _frozen(regressors, np.float64)
        group = _frozen(self.group, np.int64).reshape(-1)
        if not (outcome.size == group.size == regressors.shape[0]):
            raise ShapeMismatch(
                f"outcome ({outcome.size}), regressors ({regressors.shape[0]}) and "
                f"group ({group.size}) lengths differ"
            )
        if group.size and (group.min() < 0 or group.max() >= self.n_groups):
            raise GroupIdOutOfRange(
                f"group ids must lie in [0, {self.n_groups}), got range "
                f"[{group.min()}, {group.max()}]"
            )
        counts = np.bincount(group, minlength=self.n_groups)
        for g, n in enumerate(counts):
            if n == 0:
                raise EmptyGroup(g)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "regressors", regressors)
        object.__setattr__(self, "group", group)

    @classmethod
    def from_arrays(cls, outcome, regressors, group, n_groups: int | None = None) -> "Dataset":
        group = np.asarray(group, dtype=np.int64)
        if n_groups is None:
            n_groups = int(group.max()) + 1 if group.size else 0
        return cls(outcome, regressors, group, n_groups)

    @property
    def labels(self) -> tuple[str, ...]:
        if self.group_labels is not None:
            return self.group_labels
        return tuple(str(g) for g in range(self.n_groups))

    @property
    def n_regressors(self) -> int:
        return self.regressors.shape[1]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(n) for n in np.bincount(self.group, minlength=self.n_groups))

    @property
    def n_obs(self) -> int:
        return self.outcome.size


@dataclass(frozen=True)
class DesignTensor:
    """X[k, a, g], shape (k_max, p, G), with per-group valid counts."""

    values: Tensor
    counts: tuple[int, ...]

    @property
    def k_max(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def groups(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class OutcomeTensor:
    values: Tensor
    counts: tuple[int, ...]


@dataclass(frozen=True)
class BetaTensor:
    """beta[a, g], shape (p, G)."""

    values: Tensor

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def groups(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ResidualTensor:
    values: Tensor
    counts: tuple[int, ...]


@dataclass(frozen=True)
class VarianceEstimate:
    pooled: float
    per_group: tuple[float, ...]
    df: int
    rss: tuple[float, ...]


def build_design(data: Dataset) -> tuple[DesignTensor, OutcomeTensor]:
    """Scatter observations into the padded design and outcome tensors.

    Rows keep their input order within each group.
    """
    counts = data.counts
    k_max = max(counts)
    p = data.n_regressors + 1
    G = data.n_groups
    X = np.zeros((k_max, p, G))
    Y = np.zeros((k_max, G))
    fill = [0] * G
    for i, g in enumerate(data.group):
        k = fill[g]
        X[k, 0, g] = 1.0
        X[k, 1:, g] = data.regressors[i]
        Y[k, g] = data.outcome[i]
        fill[g] += 1
    return DesignTensor(Tensor(X), counts), OutcomeTensor(Tensor(Y), counts)


def fit(
    X: DesignTensor,
    Y: OutcomeTensor,
    counter: OpCounter | None = None,
    inverse: InverseReport | None = None,
) -> BetaTensor:
    """Per-group least squares: beta[:, g] = W_g^{-1} X_g^T Y_g.

    Raises :class:`InsufficientSamples` when a group has fewer samples than
    parameters and :class:`SingularGram` when its Gram slice is singular.
    """
    for g, n in enumerate(X.counts):
        if n < X.p:
            raise InsufficientSamples(g, n, X.p)
    if inverse is None:
        with stage(counter, "gram"):
            W = gram(X, counter)
        with stage(counter, "solve"):
            inverse = invert_gram(W, counter)
    with stage(counter, "gram"):
        xty = contract("kal,kl->al", [X.values, Y.values], counter)
    with stage(counter, "solve"):
        beta = contract("abl,bl->al", [inverse.inverse, xty], counter)
    if not np.all(np.isfinite(beta.array)):
        raise NumericalError("fitted coefficients are not finite")
    return BetaTensor(beta)


def residuals(X: DesignTensor, beta: BetaTensor, Y: OutcomeTensor) -> ResidualTensor:
    """N[k, g] = Y[k, g] - X[k, a, g] beta[a, g]; zero on padding rows."""
    if X.values.shape[1:] != beta.values.shape or Y.values.shape != (X.k_max, X.groups):
        raise ShapeMismatch(
            f"inconsistent shapes X {X.values.shape}, beta {beta.values.shape}, "
            f"Y {Y.values.shape}"
        )
    fitted = contract("kal,al->kl", [X.values, beta.values]).array
    N = Y.values.array - fitted
    for g, n in enumerate(X.counts):
        N[n:, g] = 0.0
    return ResidualTensor(Tensor(N), X.counts)


def estimate_variance(N: ResidualTensor, p: int) -> VarianceEstimate:
    """Pooled residual variance sum(RSS_g) / sum(n_g - p).

    Per-group variances RSS_g / (n_g - p) are NaN where n_g <= p.
    """
    rss = contract("kl,kl->l", [N.values, N.values]).data
    df = sum(n - p for n in N.counts)
    if df < 1:
        raise NoDegreesOfFreedom(f"residual degrees of freedom {df} < 1")
    per_group = tuple(
        r / (n - p) if n > p else float("nan") for r, n in zip(rss, N.counts)
    )
    return VarianceEstimate(pooled=sum(rss) / df, per_group=per_group, df=df, rss=rss)


@dataclass(frozen=True)
class TensorFit:
    X: DesignTensor
    Y: OutcomeTensor
    gram: GramTensor
    inverse: InverseReport
    beta: BetaTensor
    residuals: ResidualTensor
    variance: VarianceEstimate


def fit_model(data: Dataset, counter: OpCounter | None = None) -> TensorFit:
    """Design, fit, residuals and pooled variance in one pass."""
    X, Y = build_design(data)
    for g, n in enumerate(X.counts):
        if n < X.p:
            raise InsufficientSamples(g, n, X.p)
    with stage(counter, "gram"):
        W = gram(X, counter)
    with stage(counter, "solve"):
        inverse = invert_gram(W, counter)
    beta = fit(X, Y, counter, inverse=inverse)
    N = residuals(X, beta, Y)
    return TensorFit(X, Y, W, inverse, beta, N, estimate_variance(N, X.p))
