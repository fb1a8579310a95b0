"""Exception hierarchy.

Every error is either an :class:`InputError` (bad data, bad arguments,
malformed files) or a :class:`NumericalError` (singular systems, missing
degrees of freedom).  The CLI maps the two families to exit codes 1 and 2;
:class:`CrossCheckError` maps to 3.
"""

from __future__ import annotations


class TensorGLMError(Exception):
    """Base class for all package errors."""


class InputError(TensorGLMError):
    pass


class NumericalError(TensorGLMError):
    pass


class CrossCheckError(TensorGLMError):
    """Two backends disagreed beyond tolerance."""


# --- tensors and einsum -------------------------------------------------

class ShapeMismatch(InputError):
    pass


class ParseError(InputError):
    pass


class InvalidOutputLabel(InputError):
    pass


class DuplicateOutputLabel(InputError):
    pass


class ExtentMismatch(InputError):
    pass


class OperandCountMismatch(InputError):
    pass


class ExtentTooLarge(InputError):
    pass


class LengthMismatch(InputError):
    pass


# --- linear algebra -----------------------------------------------------

class SingularMatrix(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class SingularGram(NumericalError):
    def __init__(self, group: int, detail: str = ""):
        self.group = group
        msg = f"Gram matrix of group {group} is singular"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SingularContrastSystem(NumericalError):
    pass


class NoDegreesOfFreedom(NumericalError):
    pass


class NonPositiveVariance(NumericalError):
    def __init__(self, hypothesis: int, value: float):
        self.hypothesis = hypothesis
        super().__init__(
            f"quadratic form for hypothesis {hypothesis} is not positive ({value!r})"
        )


# --- data ---------------------------------------------------------------

class EmptyGroup(InputError):
    def __init__(self, group: int):
        self.group = group
        super().__init__(f"group {group} has no observations")


class GroupIdOutOfRange(InputError):
    pass


class InsufficientSamples(NumericalError):
    def __init__(self, group: int, n: int, p: int):
        self.group = group
        super().__init__(f"group {group} has {n} samples but the model has {p} parameters")


class MissingColumn(InputError):
    pass


class NonNumericCell(InputError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r} as a number")


class EmptyFile(InputError):
    pass


class IndexOutOfRange(InputError):
    pass


class AllZeroHypothesis(InputError):
    def __init__(self, hypothesis: int):
        self.hypothesis = hypothesis
        super().__init__(f"hypothesis {hypothesis} has no nonzero contrast coefficient")
