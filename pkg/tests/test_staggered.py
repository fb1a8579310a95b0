import numpy as np
import pytest

from tensorglm.errors import EmptyGroup, LengthMismatch, SingularSystem
from tensorglm.glm import Dataset, build_design, fit, fit_model
from tensorglm.selftest import random_instance, rel_dev
from tensorglm.staggered import (
    beta_to_flat,
    build_staggered,
    fit_staggered,
    fit_staggered_model,
    flat_to_beta,
)


def two_by_two():
    # groups interleaved on purpose; x values are all nonzero
    return Dataset([1, 2, 3, 4, 5, 6], [[0.5], [1.5], [2.5], [3.5], [4.5], [5.5]],
                   [0, 1, 0, 1, 0, 1], 2)


class TestBuild:
    def test_row_pattern(self):
        sys = build_staggered(two_by_two())
        assert sys.design[0].tolist() == [1.0, 0.0, 0.5, 0.0]
        assert sys.design[3].tolist() == [0.0, 1.0, 0.0, 1.5]
        assert sys.outcome.tolist() == [1, 3, 5, 2, 4, 6]

    def test_single_group_matches_design_slice(self, rng):
        d = random_instance(rng, max_groups=1)
        X, _ = build_design(d)
        assert np.array_equal(build_staggered(d).design, X.values.array[:, :, 0])

    def test_zero_count(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            d = random_instance(rng)
            sys = build_staggered(d)
            p, G = sys.p, sys.n_groups
            assert sys.design.size - np.count_nonzero(sys.design) == d.n_obs * p * (G - 1)
            assert np.count_nonzero(sys.design) == d.n_obs * p

    def test_row_nonzeros_sit_in_group_columns(self, rng):
        d = random_instance(rng)
        sys = build_staggered(d)
        G = sys.n_groups
        for row, g in zip(sys.design, sys.group):
            cols = set(np.flatnonzero(row))
            assert cols == {a * G + g for a in range(sys.p)}

    def test_empty_group(self):
        with pytest.raises(EmptyGroup):
            Dataset([1.0, 2.0], [[1.0], [2.0]], [0, 0], 2)


class TestFit:
    def test_noiseless(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0])
        g = np.array([0, 0, 0, 0, 1, 1, 1])
        y = np.where(g == 0, 1.0 + 2.0 * x, -3.0 + 0.5 * x)
        flat = fit_staggered(build_staggered(Dataset(y, x[:, None], g, 2)))
        np.testing.assert_allclose(flat, [1.0, -3.0, 2.0, 0.5], rtol=0, atol=1e-13)

    def test_row_permutation(self, rng):
        d = random_instance(rng)
        perm = rng.permutation(d.n_obs)
        shuffled = Dataset(d.outcome[perm], d.regressors[perm], d.group[perm], d.n_groups)
        a = fit_staggered(build_staggered(d))
        b = fit_staggered(build_staggered(shuffled))
        assert rel_dev(b, a) < 1e-12

    def test_equivalence_100_seeds(self):
        rng = np.random.default_rng(1000)
        for _ in range(100):
            d = random_instance(rng, max_groups=4, max_regressors=2)
            X, Y = build_design(d)
            sys = build_staggered(d)
            tensor = fit(X, Y).values.array
            staggered = flat_to_beta(fit_staggered(sys), sys.p, sys.n_groups).values.array
            assert rel_dev(staggered, tensor) < 1e-9

    def test_variance_agrees(self, rng):
        d = random_instance(rng)
        tf, sf = fit_model(d), fit_staggered_model(d)
        assert sf.df == tf.variance.df
        assert sf.sigma2 == pytest.approx(tf.variance.pooled, rel=1e-10)
        np.testing.assert_allclose(sf.rss, tf.variance.rss, rtol=1e-9)

    def test_singular(self):
        d = Dataset([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [[1.0], [1.0], [1.0], [0.0], [1.0], [2.0]],
                    [0, 0, 0, 1, 1, 1], 2)
        with pytest.raises(SingularSystem):
            fit_staggered(build_staggered(d))


class TestReshape:
    def test_flat_to_beta(self):
        beta = flat_to_beta([10.0, 20.0, 1.0, 2.0], 2, 2).values.array
        assert beta[:, 0].tolist() == [10.0, 1.0]
        assert beta[:, 1].tolist() == [20.0, 2.0]

    def test_identity_case(self):
        assert flat_to_beta([4.2], 1, 1).values.array.tolist() == [[4.2]]

    def test_round_trip(self, rng):
        flat = rng.normal(size=12)
        assert np.array_equal(beta_to_flat(flat_to_beta(flat, 3, 4)), flat)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            flat_to_beta([1.0, 2.0, 3.0], 2, 2)
