"""Command-line pipeline: simulate -> test -> aggregate (-> oracle checks).

Subcommands:

* ``simulate``  write a synthetic job file (and optionally a calibration file)
* ``test``      run the lag-l autocorrelation test on every stream of a job file
* ``aggregate`` fleet report + scatter from a results file
* ``oracle``    exact-vs-normal-approximation error table
* ``pipeline``  the three stages end to end in one working directory

Exit codes: 0 success, 1 data/IO error, 2 usage error. Every subcommand is
deterministic given its flags; repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import aggregate as agg
from . import simulate as sim
from .autocorr import InvalidLagError, TestParams
from .ingest import (
    parse_calibration,
    parse_jobs,
    read_results,
    serialize_calibration,
    serialize_jobs,
    write_results,
)
from .oracle import EnumerationLimitError, approximation_error


class UsageError(ValueError):
    """Flag combination outside the valid range (exit code 2)."""


def _parse_schedule(text: str, jobs: int) -> sim.DriftingSource:
    phases = []
    for chunk in text.split(","):
        try:
            bias_text, count_text = chunk.split(":")
            phases.append((float(bias_text), int(count_text)))
        except ValueError:
            raise UsageError(
                f"bad schedule phase {chunk!r}, expected <bias>:<jobs>"
            ) from None
    source = sim.DriftingSource(phases=tuple(phases))
    if source.total_jobs != jobs:
        raise UsageError(
            f"schedule covers {source.total_jobs} jobs but the run has {jobs}"
        )
    return source


def _parse_bias_flag(text: str) -> float | None:
    if text == "estimated":
        return None
    if text.startswith("fixed:"):
        try:
            bias = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad fixed bias in {text!r}") from None
        if not 0.0 <= bias <= 1.0:
            raise UsageError(f"fixed bias must be in [0, 1], got {bias}")
        return bias
    raise UsageError(f"--bias must be 'estimated' or 'fixed:<p>', got {text!r}")


def _build_model(args: argparse.Namespace) -> sim.SourceModel:
    try:
        if args.model == "ideal":
            return sim.IdealSource(bias=args.p)
        if args.model == "markov":
            return sim.MarkovSource(bias=args.p, rho=args.rho)
        if args.schedule is None:
            raise UsageError("--model drifting requires --schedule")
        return _parse_schedule(args.schedule, args.jobs)
    except sim.InvalidParameterError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = sim.DeviceRunConfig(
            qubit_count=args.qubits,
            jobs=args.jobs,
            bits_per_job=args.bits,
            models=_build_model(args),
            master_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    run = sim.generate_device_run(config, with_calibration=args.calibration_out is not None)
    with open(args.out, "w", newline="") as fh:
        serialize_jobs(run.jobs, fh)
    if args.calibration_out is not None:
        with open(args.calibration_out, "w", newline="") as fh:
            serialize_calibration(run.calibration, fh)
    print(
        f"simulated {config.jobs} jobs x {config.qubit_count} qubits x "
        f"{config.bits_per_job} bits (model {args.model}, seed {config.master_seed}) "
        f"-> {args.out}"
    )
    return 0


def cmd_test(args: argparse.Namespace) -> int:
    try:
        params = TestParams(
            lag=args.lag, alpha=args.alpha, fixed_bias=_parse_bias_flag(args.bias)
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with open(args.infile, newline="") as fh:
        jobs = parse_jobs(fh)
    matrix = agg.build_matrix(jobs, params)
    rows = [
        (matrix.job_ids[r], matrix.qubit_ids[c], matrix.cells[r][c])
        for r in range(len(matrix.job_ids))
        for c in range(len(matrix.qubit_ids))
    ]
    with open(args.out, "w", newline="") as fh:
        write_results(rows, fh)
    print(
        f"tested {len(matrix.job_ids)} jobs x {len(matrix.qubit_ids)} qubits "
        f"(lag {params.lag}, alpha {params.alpha}) -> {args.out}"
    )
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    with open(args.infile, newline="") as fh:
        rows = read_results(fh)
    matrix = agg.matrix_from_results(rows, alpha=args.alpha)
    calibration = None
    if args.calibration is not None:
        with open(args.calibration, newline="") as fh:
            calibration, duplicates = parse_calibration(fh)
        if duplicates:
            print(f"notice: {duplicates} duplicate calibration rows (last kept)")
    report = agg.build_report(matrix, calibration)
    with open(args.report, "w", newline="") as fh:
        agg.write_report_csv(report, fh)
    if calibration is not None and args.scatter is not None:
        with open(args.scatter, "w", newline="") as fh:
            agg.write_scatter_csv(report, fh)
    print(f"simultaneous-pass proportion: {report.simultaneous_pass_proportion:.4f}")
    if report.spearman_t1_failure is not None:
        print(f"spearman(T1, failure ratio): {report.spearman_t1_failure:.4f}")
    elif calibration is None:
        print("no calibration data: T1 fields omitted from the report")
    else:
        print("spearman undefined: fewer than 3 complete pairs or constant ranks")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    k_range = None
    if args.k_min is not None or args.k_max is not None:
        if args.k_min is None or args.k_max is None:
            raise UsageError("--k-min and --k-max must be given together")
        k_range = (args.k_min, args.k_max)
    try:
        table = approximation_error(args.n, args.lag, args.p, k_range)
    except EnumerationLimitError as exc:
        raise UsageError(str(exc)) from None
    with open(args.out, "w", newline="") as fh:
        fh.write("statistic,exact_p,approx_p,difference\n")
        for row in table.rows:
            fh.write(
                f"{row.statistic},{row.exact_p!r},{row.approx_p!r},{row.difference!r}\n"
            )
    print(f"max |exact - approx|: {table.max_abs_difference:.6g}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    args.out = str(workdir / "jobs.csv")
    args.calibration_out = str(workdir / "calibration.csv")
    cmd_simulate(args)
    args.infile = args.out
    args.out = str(workdir / "results.csv")
    cmd_test(args)
    args.infile = args.out
    args.calibration = args.calibration_out
    args.report = str(workdir / "report.csv")
    args.scatter = str(workdir / "scatter.csv")
    return cmd_aggregate(args)


def _add_test_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lag", type=int, default=1, help="bit separation l (default 1)")
    parser.add_argument("--alpha", type=float, default=0.01,
                        help="significance level (default 0.01)")
    parser.add_argument("--bias", default="estimated",
                        help="'estimated' (per-stream ones-frequency) or 'fixed:<p>'")


def _add_simulate_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--qubits", type=int, default=sim.DEFAULT_QUBIT_COUNT)
    parser.add_argument("--jobs", type=int, default=sim.DEFAULT_JOBS)
    parser.add_argument("--bits", type=int, default=sim.DEFAULT_BITS_PER_JOB)
    parser.add_argument("--model", choices=["ideal", "markov", "drifting"],
                        default="ideal")
    parser.add_argument("--p", type=float, default=0.5, help="ones-probability")
    parser.add_argument("--rho", type=float, default=0.0,
                        help="lag-1 autocorrelation (markov model)")
    parser.add_argument("--schedule",
                        help="drifting bias phases '<bias>:<jobs>,...' covering the run")
    parser.add_argument("--seed", type=int, default=sim.DEFAULT_MASTER_SEED,
                        help="64-bit master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrng-audit",
        description="Detect temporal correlation in QRNG bitstreams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a synthetic job file")
    _add_simulate_flags(p_sim)
    p_sim.add_argument("--out", required=True, help="job CSV path")
    p_sim.add_argument("--calibration-out", help="also write a drifting T1 series")
    p_sim.set_defaults(func=cmd_simulate)

    p_test = sub.add_parser("test", help="test every stream of a job file")
    p_test.add_argument("--in", dest="infile", required=True, help="job CSV path")
    p_test.add_argument("--out", required=True, help="results CSV path")
    _add_test_flags(p_test)
    p_test.set_defaults(func=cmd_test)

    p_aggr = sub.add_parser("aggregate", help="fleet report from a results file")
    p_aggr.add_argument("--in", dest="infile", required=True, help="results CSV path")
    p_aggr.add_argument("--calibration", help="calibration CSV path (optional)")
    p_aggr.add_argument("--report", required=True, help="report CSV path")
    p_aggr.add_argument("--scatter", help="T1-vs-failure scatter CSV path")
    p_aggr.add_argument("--alpha", type=float, default=0.01)
    p_aggr.set_defaults(func=cmd_aggregate)

    p_oracle = sub.add_parser("oracle", help="exact vs normal-approximation table")
    p_oracle.add_argument("--n", type=int, required=True, help="sequence length")
    p_oracle.add_argument("--lag", type=int, default=1)
    p_oracle.add_argument("--p", type=float, default=0.5, help="ones-probability")
    p_oracle.add_argument("--k-min", type=int)
    p_oracle.add_argument("--k-max", type=int)
    p_oracle.add_argument("--out", required=True, help="table CSV path")
    p_oracle.set_defaults(func=cmd_oracle)

    p_pipe = sub.add_parser(
        "pipeline", help="simulate, test, and aggregate into one directory"
    )
    _add_simulate_flags(p_pipe)
    _add_test_flags(p_pipe)
    p_pipe.add_argument("--workdir", default="qrng-audit-run",
                        help="output directory (default ./qrng-audit-run)")
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (
        UsageError,
        InvalidLagError,
        sim.InvalidParameterError,
        sim.InvalidScheduleError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        # Data-level rejections (parse errors carry line numbers) and IO.
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
