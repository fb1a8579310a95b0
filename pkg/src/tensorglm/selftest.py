"""Oracle-equivalence checks runnable from the command line."""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .errors import TensorGLMError
from .glm import Dataset, fit_model
from .hypothesis import ContrastTensor, conventional_t, evaluate_hypotheses
from .linalg import elimination_inverse, epsilon_inverse
from .ndtensor import contract
from .oracles import naive_contract
from .staggered import fit_staggered_model


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def rel_dev(a, b) -> float:
    """max |a - b| / max |b| (absolute when b is all zeros)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    diff = float(np.max(np.abs(a - b))) if b.size else 0.0
    return diff / scale if scale > 0 else diff


def random_instance(rng: np.random.Generator, max_groups: int = 4, max_regressors: int = 2,
                    min_n: int = 5, max_n: int = 50) -> Dataset:
    """Ragged grouped data with Gaussian noise and shuffled row order."""
    G = int(rng.integers(1, max_groups + 1))
    r = int(rng.integers(0, max_regressors + 1))
    counts = rng.integers(min_n, max_n + 1, size=G)
    group = np.repeat(np.arange(G), counts)
    rng.shuffle(group)
    x = rng.uniform(-1.0, 1.0, size=(group.size, r))
    beta = rng.normal(size=(r + 1, G))
    y = beta[0, group] + np.einsum("ia,ai->i", x, beta[1:, group]) + rng.normal(size=group.size)
    return Dataset(y, x, group, G)


def random_contrast(rng: np.random.Generator, H: int, p: int, G: int) -> ContrastTensor:
    C = rng.normal(size=(H, p, G))
    return ContrastTensor.from_array(C)


def random_einsum(rng: np.random.Generator, max_rank: int = 4, max_extent: int = 5,
                  max_labels: int = 6):
    """A random valid einsum spec with matching random operands."""
    n_labels = int(rng.integers(1, max_labels + 1))
    labels = string.ascii_letters[: n_labels]
    extent = {l: int(rng.integers(1, max_extent + 1)) for l in labels}
    n_ops = int(rng.integers(1, 4))
    subs = []
    for _ in range(n_ops):
        rank = int(rng.integers(0, max_rank + 1))
        subs.append("".join(rng.choice(list(labels), size=rank)))
    used = sorted(set("".join(subs)))
    out_size = int(rng.integers(0, len(used) + 1))
    output = "".join(rng.permutation(used)[:out_size]) if used else ""
    spec = ",".join(subs) + "->" + output
    operands = [rng.normal(size=tuple(extent[l] for l in s)) for s in subs]
    return spec, operands


def check_formulations(seeds: int, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_beta = worst_t = 0.0
    for _ in range(seeds):
        data = random_instance(rng)
        tf = fit_model(data)
        sf = fit_staggered_model(data)
        p, G = tf.beta.p, tf.beta.groups
        C = random_contrast(rng, int(rng.integers(1, 4)), p, G)
        worst_beta = max(worst_beta, rel_dev(tf.beta.values.array, sf.beta.values.array))
        worst_t = max(worst_t, rel_dev(evaluate_hypotheses(tf, C).t, conventional_t(C, sf).t))
    passed = worst_beta < 1e-9 and worst_t < 1e-9
    return CheckResult("tensor vs staggered (beta, t)", passed,
                       f"max rel dev beta={worst_beta:.2e} t={worst_t:.2e}")


def check_epsilon_inverse(seeds: int, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in range(1, 7):
        for _ in range(seeds):
            W = rng.normal(size=(p, p)) + p * np.eye(p)
            inv = epsilon_inverse(W).array
            worst = max(worst, float(np.max(np.abs(inv @ W - np.eye(p)))),
                        rel_dev(inv, elimination_inverse(W).array))
    return CheckResult("epsilon inverse vs elimination", worst < 1e-8, f"max dev={worst:.2e}")


def check_contract(seeds: int, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(seeds):
        spec, operands = random_einsum(rng)
        if not np.array_equal(contract(spec, operands).array, naive_contract(spec, operands)):
            mismatches += 1
    return CheckResult("einsum vs nested loops", mismatches == 0, f"{mismatches} mismatches")


def run_selftest(seeds: int = 20, seed: int = 0) -> list[CheckResult]:
    results = []
    for check in (check_formulations, check_epsilon_inverse, check_contract):
        try:
            results.append(check(seeds, seed))
        except TensorGLMError as exc:
            results.append(CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return results
