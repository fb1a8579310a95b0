"""Independent reference implementations used to cross-check the fast paths.

Nothing here shares code with the planner in :mod:`tensorglm.ndtensor`; it
re-derives label extents and walks every index with scalar Python floats.
"""

from __future__ import annotations

import itertools

import numpy as np


def naive_contract(spec_text: str, operands) -> np.ndarray:
    """Scalar nested-loop einsum.

    Summation assignments are visited row-major over summation labels in
    order of first appearance; each term multiplies operand entries left to
    right and the accumulator starts at the first term.
    """
    text = spec_text.replace(" ", "")
    lhs, out = text.split("->")
    subs = lhs.split(",")
    arrays = [np.asarray(op, dtype=float) for op in operands]
    extent = {}
    for sub, arr in zip(subs, arrays):
        for label, n in zip(sub, arr.shape):
            if extent.setdefault(label, n) != n:
                raise ValueError(f"label {label} has two extents")
    seen = []
    for label in "".join(subs):
        if label not in seen:
            seen.append(label)
    summed = [l for l in seen if l not in out]

    result = np.zeros(tuple(extent[l] for l in out))
    for out_index in itertools.product(*(range(extent[l]) for l in out)):
        values = dict(zip(out, out_index))
        acc = None
        for sum_index in itertools.product(*(range(extent[l]) for l in summed)):
            values.update(zip(summed, sum_index))
            term = None
            for sub, arr in zip(subs, arrays):
                v = float(arr[tuple(values[l] for l in sub)])
                term = v if term is None else term * v
            acc = term if acc is None else acc + term
        result[out_index] = acc
    return result


def simple_regression_t(x, y) -> float:
    """Textbook slope t statistic for y = b + m x: m_hat / (s / sqrt(Sxx))."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    xbar = sum(x) / n
    ybar = sum(y) / n
    sxx = sum((xi - xbar) ** 2 for xi in x)
    sxy = sum((xi - xbar) * (yi - ybar) for xi, yi in zip(x, y))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    rss = sum((yi - intercept - slope * xi) ** 2 for xi, yi in zip(x, y))
    s = (rss / (n - 2)) ** 0.5
    return slope / (s / sxx ** 0.5)
