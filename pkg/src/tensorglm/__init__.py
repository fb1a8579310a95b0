"""Grouped general linear models in tensor (Einstein-notation) form.

The tensor backend stores the design as X[k, a, g] and fits every group with
contractions and Levi-Civita inverses; the staggered backend builds the
conventional flat block matrix.  Both are exposed so they can be checked
against each other and benchmarked.
"""

from .errors import TensorGLMError
from .glm import (
    BetaTensor,
    Dataset,
    DesignTensor,
    OutcomeTensor,
    ResidualTensor,
    VarianceEstimate,
    build_design,
    estimate_variance,
    fit,
    fit_model,
    residuals,
)
from .hypothesis import (
    ContrastTensor,
    HypothesisResult,
    contrast_value,
    f_statistic,
    t_pvalue,
    t_statistics,
)
from .linalg import (
    GramTensor,
    InverseReport,
    elimination_inverse,
    epsilon_determinant,
    epsilon_inverse,
    gram,
    invert_gram,
)
from .ndtensor import EinsumSpec, Tensor, contract, levi_civita, parse_einsum, tensor_create
from .staggered import build_staggered, fit_staggered, flat_to_beta

__version__ = "0.1.0"
