"""Contrasts, t and F statistics over the grouped coefficients.

A contrast tensor ``C[h, a, g]`` holds one null hypothesis per ``h``; its value
is ``g_h = C[h, a, g] beta[a, g]``.  The t statistic divides that value by

    sqrt(sigma^2 * sum_g C[h, :, g] W_g^{-1} C[h, :, g]^T)

i.e. the groups contribute independent quadratic forms, exactly the
block-diagonal covariance implied by the staggered formulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroHypothesis,
    NoDegreesOfFreedom,
    NonPositiveVariance,
    ShapeMismatch,
    SingularContrastSystem,
    SingularMatrix,
)
from .glm import BetaTensor, DesignTensor, TensorFit, VarianceEstimate
from .linalg import InverseReport, gauss_jordan, gram, invert_gram
from .ndtensor import Tensor, contract
from .special import f_pvalue, t_pvalue
from .staggered import StaggeredFit

__all__ = [
    "ContrastTensor",
    "HypothesisResult",
    "contrast_value",
    "t_statistics",
    "f_statistic",
    "evaluate_hypotheses",
    "conventional_t",
    "conventional_f",
    "t_pvalue",
]


@dataclass(frozen=True)
class ContrastTensor:
    """C[h, a, g], shape (H, p, G); every hypothesis needs a nonzero entry."""

    values: Tensor

    def __post_init__(self) -> None:
        if self.values.rank != 3:
            raise ShapeMismatch(f"contrast tensor must be rank 3, got {self.values.shape}")
        for h, row in enumerate(self.values.array):
            if not np.any(row):
                raise AllZeroHypothesis(h)

    @classmethod
    def from_array(cls, values) -> "ContrastTensor":
        return cls(Tensor(values))

    @property
    def n_hypotheses(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        """Rows over the staggered column layout a * G + g."""
        H, p, G = self.values.shape
        return self.values.array.reshape(H, p * G)


@dataclass(frozen=True)
class HypothesisResult:
    g: tuple[float, ...]
    t: tuple[float, ...]
    se: tuple[float, ...]
    p: tuple[float, ...]
    df: int
    F: float | None = None
    F_p: float | None = None


def _check_shapes(C: ContrastTensor, beta: BetaTensor) -> None:
    if C.values.shape[1:] != beta.values.shape:
        raise ShapeMismatch(
            f"contrast (p, G) = {C.values.shape[1:]} but beta has shape {beta.values.shape}"
        )


def contrast_value(C: ContrastTensor, beta: BetaTensor) -> tuple[float, ...]:
    """g[h] = C[h, a, g] beta[a, g]."""
    _check_shapes(C, beta)
    return contract("hal,al->h", [C.values, beta.values]).data


def _inverse(X: DesignTensor, inverse: InverseReport | None) -> InverseReport:
    return inverse if inverse is not None else invert_gram(gram(X))


def _t_from_parts(g, quad, sigma2: float, df: int) -> HypothesisResult:
    if df < 1:
        raise NoDegreesOfFreedom(f"residual degrees of freedom {df} < 1")
    t_values, se_values, p_values = [], [], []
    for h, (value, q) in enumerate(zip(g, quad)):
        if not q > 0:
            raise NonPositiveVariance(h, q)
        se = math.sqrt(sigma2 * q)
        if se > 0:
            t = value / se
        elif value == 0:
            t = float("nan")
        else:
            t = math.copysign(math.inf, value)
        t_values.append(t)
        se_values.append(se)
        p_values.append(t_pvalue(t, df))
    return HypothesisResult(tuple(g), tuple(t_values), tuple(se_values), tuple(p_values), df)


def t_statistics(
    C: ContrastTensor,
    beta: BetaTensor,
    X: DesignTensor,
    variance: VarianceEstimate,
    inverse: InverseReport | None = None,
) -> HypothesisResult:
    """Per-hypothesis t statistics, standard errors and two-sided p-values.

    Uses the pooled variance for every hypothesis.  The per-group inverse
    Gram matrices come from the Levi-Civita path (or ``inverse`` if given).
    """
    _check_shapes(C, beta)
    inv = _inverse(X, inverse)
    g = contrast_value(C, beta)
    quad = contract("hal,abl,hbl->h", [C.values, inv.inverse, C.values]).data
    return _t_from_parts(g, quad, variance.pooled, variance.df)


def _wald_f(g, M: np.ndarray, sigma2: float, df: int) -> float:
    if df < 1:
        raise NoDegreesOfFreedom(f"residual degrees of freedom {df} < 1")
    try:
        solved = gauss_jordan(M, np.asarray(g))
    except SingularMatrix as exc:
        raise SingularContrastSystem(f"contrast covariance is singular: {exc}") from exc
    H = len(g)
    return float(np.dot(g, solved)) / (H * sigma2)


def f_statistic(
    C: ContrastTensor,
    beta: BetaTensor,
    X: DesignTensor,
    variance: VarianceEstimate,
    inverse: InverseReport | None = None,
) -> float:
    """Joint Wald F = g^T M^{-1} g / (H sigma^2), M[h, j] = sum_g C_h W_g^{-1} C_j^T.

    Degrees of freedom are (H, variance.df).
    """
    _check_shapes(C, beta)
    inv = _inverse(X, inverse)
    g = contrast_value(C, beta)
    M = contract("hal,abl,jbl->hj", [C.values, inv.inverse, C.values]).array
    return _wald_f(g, M, variance.pooled, variance.df)


def evaluate_hypotheses(fit: TensorFit, C: ContrastTensor, with_f: bool = False) -> HypothesisResult:
    result = t_statistics(C, fit.beta, fit.X, fit.variance, fit.inverse)
    if not with_f:
        return result
    F = f_statistic(C, fit.beta, fit.X, fit.variance, fit.inverse)
    return _with_f(result, F, C.n_hypotheses)


def _with_f(result: HypothesisResult, F: float, H: int) -> HypothesisResult:
    return HypothesisResult(
        result.g, result.t, result.se, result.p, result.df, F, f_pvalue(F, H, result.df)
    )


# --- conventional (flat matrix) form -------------------------------------

def conventional_t(C: ContrastTensor, fit: StaggeredFit, with_f: bool = False) -> HypothesisResult:
    """t = C b / sqrt(sigma^2 C (X^T X)^{-1} C^T) on the staggered system."""
    _check_shapes(C, fit.beta)
    Cf = C.flat()
    g = Cf @ fit.flat
    cov = Cf @ fit.xtx_inverse @ Cf.T
    result = _t_from_parts(tuple(float(v) for v in g), np.diag(cov), fit.sigma2, fit.df)
    if not with_f:
        return result
    return _with_f(result, _wald_f(g, cov, fit.sigma2, fit.df), C.n_hypotheses)


def conventional_f(C: ContrastTensor, fit: StaggeredFit) -> float:
    Cf = C.flat()
    g = Cf @ fit.flat
    return _wald_f(g, Cf @ fit.xtx_inverse @ Cf.T, fit.sigma2, fit.df)
