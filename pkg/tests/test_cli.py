import json

import numpy as np
import pytest

from tensorglm.cli import FAULT_ENV, main
from tensorglm.dataio import ModelSpec, RunReport, file_digest, load_contrasts, load_csv
from tensorglm.errors import (
    AllZeroHypothesis,
    EmptyFile,
    IndexOutOfRange,
    InputError,
    MissingColumn,
    NonNumericCell,
)

SPEC = ModelSpec("y", ("x",), "g")


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def data_csv(tmp_path):
    rows = ["y,x,g"]
    for i, (x, g) in enumerate([(0, "ctrl"), (1, "treat"), (1, "ctrl"), (2, "treat"),
                                (2, "ctrl"), (3, "treat"), (3, "ctrl"), (4, "treat")]):
        y = 1.0 + 2.0 * x if g == "ctrl" else -1.0 + 0.5 * x
        y += 0.01 * ((7 * i) % 5 - 2)
        rows.append(f"{y!r},{x},{g}")
    return write(tmp_path / "d.csv", "\n".join(rows) + "\n")


@pytest.fixture
def slope_diff_csv(tmp_path):
    return write(tmp_path / "c.csv", "hypothesis,group,param,coeff\n0,0,1,1\n0,1,1,-1\n")


class TestLoadCsv:
    def test_two_groups(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x,g\n1,0,a\n2,1,a\n3,2,a\n4,0,b\n5,1,b\n6,2,b\n")
        d = load_csv(p, SPEC)
        assert d.n_groups == 2 and d.counts == (3, 3)
        assert d.outcome.tolist() == [1, 2, 3, 4, 5, 6]

    def test_first_appearance_ids(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x,g\n1,0,treat\n2,1,ctrl\n3,2,treat\n4,1,ctrl\n")
        d = load_csv(p, SPEC)
        assert d.labels == ("treat", "ctrl")
        assert d.group.tolist() == [0, 1, 0, 1]

    def test_label_mapping_stable_under_within_group_permutation(self, tmp_path):
        a = write(tmp_path / "a.csv", "y,x,g\n1,0,z\n2,1,a\n3,2,z\n4,1,a\n")
        b = write(tmp_path / "b.csv", "y,x,g\n3,2,z\n4,1,a\n1,0,z\n2,1,a\n")
        assert load_csv(a, SPEC).labels == load_csv(b, SPEC).labels == ("z", "a")

    def test_scientific_notation(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x,g\n1e-3,-2.5E2,a\n.5,+3.,a\n")
        d = load_csv(p, SPEC)
        assert d.outcome.tolist() == [1e-3, 0.5]
        assert d.regressors[:, 0].tolist() == [-250.0, 3.0]

    def test_missing_column(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x\n1,2\n")
        with pytest.raises(MissingColumn):
            load_csv(p, SPEC)

    def test_non_numeric(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x,g\n1,2,a\n3,abc,a\n")
        with pytest.raises(NonNumericCell) as info:
            load_csv(p, SPEC)
        assert (info.value.row, info.value.column) == (2, "x")

    @pytest.mark.parametrize("text", ["", "y,x,g\n"])
    def test_empty(self, tmp_path, text):
        with pytest.raises(EmptyFile):
            load_csv(write(tmp_path / "a.csv", text), SPEC)

    def test_spec_names_distinct(self):
        with pytest.raises(InputError):
            ModelSpec("y", ("y",), "g")


class TestLoadContrasts:
    def test_slope_difference(self, slope_diff_csv):
        C = load_contrasts(slope_diff_csv, 2, 2).values.array
        expected = np.zeros((1, 2, 2))
        expected[0, 1, 0], expected[0, 1, 1] = 1.0, -1.0
        assert np.array_equal(C, expected)

    def test_dense_two_hypotheses(self, tmp_path):
        rows = [f"{h},{g},{a},{h * 4 + g * 2 + a + 1}" for h in range(2) for g in range(2) for a in range(2)]
        p = write(tmp_path / "c.csv", "hypothesis,group,param,coeff\n" + "\n".join(rows) + "\n")
        C = load_contrasts(p, 2, 2).values.array
        assert C.shape == (2, 2, 2)
        assert C[1, 0, 1] == 1 * 4 + 1 * 2 + 0 + 1

    def test_missing_hypothesis(self, tmp_path):
        p = write(tmp_path / "c.csv", "hypothesis,group,param,coeff\n1,0,0,1\n")
        with pytest.raises(AllZeroHypothesis):
            load_contrasts(p, 2, 2)

    @pytest.mark.parametrize("row", ["0,2,0,1", "0,0,2,1", "-1,0,0,1"])
    def test_out_of_range(self, tmp_path, row):
        p = write(tmp_path / "c.csv", f"hypothesis,group,param,coeff\n{row}\n")
        with pytest.raises(IndexOutOfRange):
            load_contrasts(p, 2, 2)

    def test_duplicate_cell(self, tmp_path):
        p = write(tmp_path / "c.csv", "hypothesis,group,param,coeff\n0,0,0,1\n0,0,0,2\n")
        with pytest.raises(InputError):
            load_contrasts(p, 2, 2)


class TestRunReport:
    def test_round_trip_byte_identical(self, data_csv, slope_diff_csv, tmp_path):
        out = tmp_path / "r.json"
        assert main(["test", "--data", str(data_csv), "--outcome", "y", "--regressors", "x",
                     "--group", "g", "--contrasts", str(slope_diff_csv), "--f-test",
                     "--report", str(out)]) == 0
        text = out.read_text(encoding="utf-8")
        report = RunReport.from_json(text)
        assert report.to_json() == text
        assert RunReport.from_json(report.to_json()) == report
        assert report.input_digests["data"] == file_digest(data_csv)
        assert report.groups == ["ctrl", "treat"]
        assert report.F == pytest.approx(report.hypotheses[0]["t"] ** 2, rel=1e-10)


class TestMain:
    def args(self, data_csv, *extra):
        return ["fit", "--data", str(data_csv), "--outcome", "y", "--regressors", "x",
                "--group", "g", *extra]

    def test_fit_noiseless(self, tmp_path, capsys):
        p = write(tmp_path / "a.csv", "y,x,g\n1,0,a\n3,1,a\n5,2,a\n7,3,a\n")
        out = tmp_path / "r.json"
        assert main(self.args(p, "--report", str(out))) == 0
        stdout = capsys.readouterr().out
        assert "intercept" in stdout and "cross-check" in stdout
        beta = json.loads(out.read_text())["beta"]
        np.testing.assert_allclose(beta, [[1.0, 2.0]], atol=1e-12)

    @pytest.mark.parametrize("backend", ["tensor", "staggered"])
    def test_single_backend(self, data_csv, tmp_path, backend):
        out = tmp_path / "r.json"
        assert main(self.args(data_csv, "--backend", backend, "--report", str(out))) == 0
        report = json.loads(out.read_text())
        assert report["backend"] == backend and report["cross_check"] is None

    def test_input_errors_exit_1(self, data_csv, tmp_path, capsys):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--outcome", "y",
                     "--group", "g"]) == 1
        assert main(self.args(data_csv)[:-2]) == 1  # missing --group
        assert main(["fit", "--data", str(data_csv), "--outcome", "y", "--regressors", "w",
                     "--group", "g"]) == 1
        assert main(["frobnicate"]) == 1
        assert "error" in capsys.readouterr().err

    def test_singular_exit_2(self, tmp_path, capsys):
        p = write(tmp_path / "a.csv", "y,x,g\n1,1,a\n2,1,a\n3,1,a\n4,0,b\n5,1,b\n6,2,b\n")
        assert main(self.args(p)) == 2
        assert "group 0" in capsys.readouterr().err

    def test_no_degrees_of_freedom_exit_2(self, tmp_path):
        p = write(tmp_path / "a.csv", "y,x,g\n1,0,a\n2,1,a\n")
        assert main(self.args(p)) == 2

    @pytest.mark.parametrize("faulty", ["tensor", "staggered"])
    def test_cross_check_exit_3(self, data_csv, slope_diff_csv, monkeypatch, capsys, faulty):
        monkeypatch.setenv(FAULT_ENV, faulty)
        code = main(["test", "--data", str(data_csv), "--outcome", "y", "--regressors", "x",
                     "--group", "g", "--contrasts", str(slope_diff_csv)])
        assert code == 3
        assert "disagree" in capsys.readouterr().err

    def test_fault_ignored_for_single_backend(self, data_csv, monkeypatch):
        monkeypatch.setenv(FAULT_ENV, "tensor")
        assert main(self.args(data_csv, "--backend", "staggered")) == 0

    def test_bench_csv_deterministic(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert main(["bench", "--groups", "1,2", "--regressors", "1", "--samples", "16",
                         "--seed", "7", "--repetitions", "1", "--csv", str(p)]) == 0
        strip = lambda p: [line.split(",")[:-3] for line in p.read_text().splitlines()]
        assert strip(paths[0]) == strip(paths[1])

    def test_bench_bad_args_exit_1(self):
        assert main(["bench", "--groups", "0"]) == 1
        assert main(["bench", "--groups", "a,b"]) == 1

    def test_selftest(self, capsys):
        assert main(["selftest", "--seeds", "3"]) == 0
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 3
