import numpy as np
import pytest

from tensorglm.bench import (
    COUNT_COLUMNS,
    BenchConfig,
    count_elements,
    measure_elements,
    run_benchmark,
    synthetic_dataset,
)
from tensorglm.counting import OpCounter, stage, tally
from tensorglm.glm import Dataset


class TestCountElements:
    def test_small_example(self):
        assert count_elements("staggered", 2, 2, (3, 3)) == (24, 12)
        assert count_elements("tensor", 2, 2, (3, 3)) == (12, 12)

    def test_single_group_identical(self):
        assert count_elements("staggered", 1, 3, 10) == count_elements("tensor", 1, 3, 10)

    @pytest.mark.parametrize("G", range(1, 17))
    def test_ratio_is_group_count(self, G):
        stag = count_elements("staggered", G, 2, 9)
        tens = count_elements("tensor", G, 2, 9)
        assert stag[0] == G * tens[0]
        assert stag[1] == tens[1]
        data = synthetic_dataset(G, 1, 9, seed=0)
        assert measure_elements("staggered", data) == stag
        assert measure_elements("tensor", data) == tens

    def test_ragged_closed_form_matches_built(self):
        d = Dataset(np.arange(9.0), np.arange(1.0, 10.0)[:, None], [0, 0, 0, 0, 1, 1, 2, 2, 2], 3)
        assert measure_elements("staggered", d) == count_elements("staggered", 3, 2, (4, 2, 3))
        assert measure_elements("tensor", d) == count_elements("tensor", 3, 2, (4, 2, 3))

    def test_invalid(self):
        with pytest.raises(ValueError):
            count_elements("sparse", 1, 1, 1)
        with pytest.raises(ValueError):
            count_elements("tensor", 2, 1, (3,))


class TestCounter:
    def test_stage_attribution(self):
        c = OpCounter()
        with stage(c, "gram"):
            tally(c, multiplies=3, adds=2)
        with stage(c, "solve"):
            tally(c, divides=1)
        assert (c.multiplies, c.adds, c.divides) == (3, 2, 1)
        assert c.stages == {"gram": 5, "solve": 1}
        assert c.total == 6

    def test_none_counter_is_noop(self):
        with stage(None, "gram"):
            tally(None, multiplies=5)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"groups": ()}, {"groups": (0,)}, {"samples": (0,)}, {"repetitions": 0}, {"regressors": (-1,)},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BenchConfig(**kwargs)


class TestRunBenchmark:
    def test_solve_ratio_grows(self):
        report = run_benchmark(BenchConfig(groups=(1, 2, 4, 8), regressors=(1,), samples=(32,),
                                           repetitions=1))
        ratios = []
        for G in (1, 2, 4, 8):
            t, s = report.row(G, 1, 32, "tensor"), report.row(G, 1, 32, "staggered")
            assert t.status == s.status == "OK"
            assert t.beta_max_rel_dev < 1e-9
            assert s.stored_elements == G * t.stored_elements
            assert s.nonzero_elements == t.nonzero_elements
            ratios.append(s.flops_solve / t.flops_solve)
        assert all(a < b for a, b in zip(ratios, ratios[1:]))

    def test_repetitions_deterministic(self):
        cfg = BenchConfig(groups=(2, 3), regressors=(1, 2), samples=(12,), repetitions=3, seed=7)
        a, b = run_benchmark(cfg), run_benchmark(cfg)
        for ra, rb in zip(a.rows, b.rows):
            assert [getattr(ra, c) for c in COUNT_COLUMNS] == [getattr(rb, c) for c in COUNT_COLUMNS]
            assert ra.median_seconds is not None and ra.median_seconds >= 0

    def test_singular_point_flagged(self):
        cfg = BenchConfig(groups=(1, 2, 4), regressors=(1,), samples=(10,), repetitions=1,
                          singular_points=((2, 1, 10),))
        report = run_benchmark(cfg)
        assert len(report.rows) == 6
        for backend in ("tensor", "staggered"):
            assert report.row(2, 1, 10, backend).failed
            assert report.row(1, 1, 10, backend).status == "OK"
            assert report.row(4, 1, 10, backend).status == "OK"
        assert "FAILED" in report.to_csv()

    def test_csv_and_table(self):
        report = run_benchmark(BenchConfig(groups=(1,), samples=(8,), repetitions=1))
        lines = report.to_csv().splitlines()
        assert lines[0].split(",")[:4] == ["groups", "regressors", "samples", "backend"]
        assert len(lines) == 3
        table = report.to_table().splitlines()
        assert table[0].split()[:4] == ["G", "r", "n", "backend"]

    def test_synthetic_reproducible(self):
        a = synthetic_dataset(3, 2, 5, seed=1)
        b = synthetic_dataset(3, 2, 5, seed=1)
        assert np.array_equal(a.outcome, b.outcome) and np.array_equal(a.regressors, b.regressors)
        assert np.all(np.abs(a.regressors) <= 1.0)
