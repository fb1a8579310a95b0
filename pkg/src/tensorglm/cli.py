"""Command-line interface: ``tensorglm fit|test|bench|selftest``.

Exit codes: 0 success, 1 input error, 2 numerical failure (singular system,
no degrees of freedom), 3 backend cross-check failure.

Setting ``TENSORGLM_INJECT_FAULT=tensor`` (or ``staggered``) perturbs that
backend's coefficients; it exists so the cross-check can be tested.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .bench import BenchConfig, run_benchmark
from .dataio import ModelSpec, RunReport, file_digest, load_contrasts, load_csv
from .errors import CrossCheckError, InputError, NumericalError, TensorGLMError
from .glm import BetaTensor, Dataset, fit_model
from .hypothesis import HypothesisResult, conventional_t, evaluate_hypotheses
from .ndtensor import Tensor
from .selftest import rel_dev, run_selftest
from .staggered import fit_staggered_model

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_CROSSCHECK = 0, 1, 2, 3
CROSS_CHECK_RTOL = 1e-9
FAULT_ENV = "TENSORGLM_INJECT_FAULT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensorglm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--data", required=True, help="input CSV with a header row")
        p.add_argument("--outcome", required=True)
        p.add_argument("--regressors", default="",
                       help="comma-separated regressor columns (empty for intercept only)")
        p.add_argument("--group", required=True)
        p.add_argument("--backend", choices=("tensor", "staggered", "both"), default="both")
        p.add_argument("--report", help="write the JSON report here")

    model_args(sub.add_parser("fit", help="fit per-group coefficients and variance"))
    test = sub.add_parser("test", help="fit, then evaluate contrasts (g, t, p, F)")
    model_args(test)
    test.add_argument("--contrasts", required=True,
                      help="CSV with header hypothesis,group,param,coeff")
    test.add_argument("--f-test", action="store_true", help="also report the joint F test")

    bench = sub.add_parser("bench", help="element and operation counts, tensor vs staggered")
    bench.add_argument("--groups", type=_int_list, default=(1, 2, 4, 8))
    bench.add_argument("--regressors", type=_int_list, default=(1,))
    bench.add_argument("--samples", type=_int_list, default=(32,))
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repetitions", type=int, default=3)
    bench.add_argument("--csv", "--report", dest="csv", help="write the CSV report here")

    selftest = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    selftest.add_argument("--seeds", type=int, default=20)
    selftest.add_argument("--seed", type=int, default=0)
    return parser


@dataclass
class _BackendResult:
    beta: np.ndarray
    sigma2: float
    sigma2_per_group: list[float]
    df: int
    hypotheses: HypothesisResult | None = None


def _faulty(backend: str, beta: np.ndarray) -> np.ndarray:
    if os.environ.get(FAULT_ENV, "").strip().lower() != backend:
        return beta
    beta = beta.copy()
    beta[0, 0] = beta[0, 0] * (1.0 + 1e-6) + 1e-6
    return beta


def _run_tensor(data: Dataset, contrasts, with_f: bool) -> _BackendResult:
    tf = fit_model(data)
    beta = _faulty("tensor", tf.beta.values.array)
    hyp = None
    if contrasts is not None:
        tf = replace(tf, beta=BetaTensor(Tensor(beta)))
        hyp = evaluate_hypotheses(tf, contrasts, with_f)
    return _BackendResult(beta, tf.variance.pooled, list(tf.variance.per_group), tf.variance.df, hyp)


def _run_staggered(data: Dataset, contrasts, with_f: bool) -> _BackendResult:
    sf = fit_staggered_model(data)
    beta = _faulty("staggered", sf.beta.values.array)
    p = sf.system.p
    per_group = [r / (n - p) if n > p else float("nan") for r, n in zip(sf.rss, data.counts)]
    hyp = None
    if contrasts is not None:
        sf = replace(sf, flat=beta.reshape(-1), beta=BetaTensor(Tensor(beta)))
        hyp = conventional_t(contrasts, sf, with_f)
    return _BackendResult(beta, sf.sigma2, per_group, sf.df, hyp)


def _cross_check(a: _BackendResult, b: _BackendResult) -> dict:
    devs = {"beta_max_rel_dev": rel_dev(a.beta, b.beta)}
    if a.hypotheses is not None:
        ta, tb = np.array(a.hypotheses.t), np.array(b.hypotheses.t)
        same_nonfinite = np.array_equal(~np.isfinite(ta), ~np.isfinite(tb))
        finite = np.isfinite(ta) & np.isfinite(tb)
        devs["t_max_rel_dev"] = (
            rel_dev(ta[finite], tb[finite]) if same_nonfinite else float("inf")
        )
    for name, dev in devs.items():
        if not dev < CROSS_CHECK_RTOL:
            raise CrossCheckError(
                f"tensor and staggered backends disagree: {name} = {dev:.3e} "
                f"(tolerance {CROSS_CHECK_RTOL:g})"
            )
    return devs


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.10g}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    cells = [header] + rows
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _print_report(report: RunReport, out) -> None:
    print(f"backend: {report.backend}", file=out)
    rows = [[g] + [_fmt(v) for v in coefs] for g, coefs in zip(report.groups, report.beta)]
    print(_table(["group"] + report.parameters, rows), file=out)
    print(f"\nsigma2 (pooled): {_fmt(report.sigma2)}   df: {report.df}", file=out)
    print("sigma2 per group: " + ", ".join(
        f"{g}={_fmt(v)}" for g, v in zip(report.groups, report.sigma2_per_group)), file=out)
    if report.hypotheses is not None:
        rows = [[str(i), _fmt(h["g"]), _fmt(h["se"]), _fmt(h["t"]), _fmt(h["p"])]
                for i, h in enumerate(report.hypotheses)]
        print("\n" + _table(["hypothesis", "g", "se", "t", "p"], rows), file=out)
        if report.F is not None:
            H = len(report.hypotheses)
            print(f"\nF({H}, {report.df}) = {_fmt(report.F)}   p = {_fmt(report.F_p)}", file=out)
    if report.cross_check:
        print("\ncross-check: " + ", ".join(
            f"{k}={v:.2e}" for k, v in sorted(report.cross_check.items())), file=out)


def _model_command(args, out) -> int:
    regressors = tuple(c.strip() for c in args.regressors.split(",") if c.strip())
    spec = ModelSpec(args.outcome, regressors, args.group)
    data = load_csv(args.data, spec)
    digests = {"data": file_digest(args.data)}
    contrasts, with_f = None, False
    if args.command == "test":
        contrasts = load_contrasts(args.contrasts, len(regressors) + 1, data.n_groups)
        digests["contrasts"] = file_digest(args.contrasts)
        with_f = args.f_test

    runs = {}
    if args.backend in ("tensor", "both"):
        runs["tensor"] = _run_tensor(data, contrasts, with_f)
    if args.backend in ("staggered", "both"):
        runs["staggered"] = _run_staggered(data, contrasts, with_f)
    cross = _cross_check(runs["tensor"], runs["staggered"]) if len(runs) == 2 else None
    primary = runs.get("tensor") or runs["staggered"]

    hyp = primary.hypotheses
    report = RunReport(
        command=args.command,
        backend=args.backend,
        model={"outcome": spec.outcome, "regressors": list(spec.regressors), "group": spec.group},
        groups=list(data.labels),
        parameters=["intercept", *spec.regressors],
        beta=primary.beta.T.tolist(),
        sigma2=primary.sigma2,
        sigma2_per_group=primary.sigma2_per_group,
        df=primary.df,
        hypotheses=None if hyp is None else [
            {"g": g, "se": se, "t": t, "p": p} for g, se, t, p in zip(hyp.g, hyp.se, hyp.t, hyp.p)
        ],
        F=None if hyp is None else hyp.F,
        F_p=None if hyp is None else hyp.F_p,
        cross_check=cross,
        input_digests=digests,
    )
    _print_report(report, out)
    if args.report:
        report.write(args.report)
    return EXIT_OK


def _bench_command(args, out) -> int:
    try:
        cfg = BenchConfig(tuple(args.groups), tuple(args.regressors), tuple(args.samples),
                          args.seed, args.repetitions)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = run_benchmark(cfg)
    out.write(report.to_table())
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return EXIT_OK


def _selftest_command(args, out) -> int:
    results = run_selftest(args.seeds, args.seed)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}", file=out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CROSSCHECK


def main(argv=None) -> int:
    out, err = sys.stdout, sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "bench":
            return _bench_command(args, out)
        if args.command == "selftest":
            return _selftest_command(args, out)
        return _model_command(args, out)
    except CrossCheckError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_CROSSCHECK
    except NumericalError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERICAL
    except (InputError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except TensorGLMError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
