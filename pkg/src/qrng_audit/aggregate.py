"""Fleet-level analysis: p-value matrix, failure ratios, pass proportions,
and the relaxation-time-vs-failure relationship.

Degenerate cells (all-zero / all-one streams) carry no evidence about
correlation, so they are excluded from failure ratios and pass proportions
and reported separately as counts. The relaxation-time
comparison uses Spearman rank correlation (with average ranks for ties): the
relationship claim is monotone, not linear, and the raw scatter is emitted
alongside so any other coefficient can be recomputed externally.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence, TextIO

import numpy as np

from .autocorr import AutocorrResult, TestParams, Verdict, run_test
from .ingest import CalibrationRecord, JobRecord

THREADS_ENV_VAR = "QRNG_AUDIT_THREADS"


class ShapeError(ValueError):
    """Jobs do not share one rectangular qubit set."""


class InsufficientDataError(ValueError):
    """Too few complete pairs for a rank correlation."""


def worker_count() -> int:
    """Parallelism cap from QRNG_AUDIT_THREADS (0 or unset = auto)."""
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError(f"{THREADS_ENV_VAR} must be >= 0, got {cap}")
    if cap == 0:
        return min(8, os.cpu_count() or 1)
    return cap


@dataclass(frozen=True)
class PValueMatrix:
    """Test outcomes on a (jobs x qubits) grid, rows in job-time order."""

    job_ids: tuple[str, ...]
    qubit_ids: tuple[int, ...]
    cells: tuple[tuple[AutocorrResult, ...], ...]  # cells[row][col]
    alpha: float
    lag: int
    timestamps: tuple[datetime, ...] | None = None

    def column(self, qubit_id: int) -> tuple[AutocorrResult, ...]:
        col = self.qubit_ids.index(qubit_id)
        return tuple(row[col] for row in self.cells)

    @property
    def n_jobs(self) -> int:
        return len(self.job_ids)


def _effective_verdict(cell: AutocorrResult, alpha: float) -> Verdict:
    if cell.verdict is Verdict.DEGENERATE:
        return Verdict.DEGENERATE
    return Verdict.FAIL if cell.p_value < alpha else Verdict.PASS


def build_matrix(jobs: Sequence[JobRecord], params: TestParams) -> PValueMatrix:
    """Run the autocorrelation test on every (job, qubit) stream.

    Jobs are ordered by timestamp (job_id breaking ties); every job must
    carry the same qubit set. Cell evaluation may be spread over a thread
    pool capped by QRNG_AUDIT_THREADS; results are placed by index, so the
    matrix is identical at any parallelism.
    """
    if not jobs:
        raise ValueError("no jobs to analyze")
    ordered = sorted(jobs, key=lambda j: (j.timestamp, j.job_id))
    qubit_ids = ordered[0].qubit_ids
    for job in ordered:
        if job.qubit_ids != qubit_ids:
            raise ShapeError(
                f"job {job.job_id!r} has qubit set {job.qubit_ids}, "
                f"expected {qubit_ids}"
            )

    def row_for(job: JobRecord) -> tuple[AutocorrResult, ...]:
        return tuple(run_test(seq, params) for _, seq in job.streams)

    workers = worker_count()
    if workers > 1 and len(ordered) * len(qubit_ids) >= 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row_for, ordered))
    else:
        rows = [row_for(job) for job in ordered]

    return PValueMatrix(
        job_ids=tuple(j.job_id for j in ordered),
        qubit_ids=qubit_ids,
        cells=tuple(rows),
        alpha=params.alpha,
        lag=params.lag,
        timestamps=tuple(j.timestamp for j in ordered),
    )


def matrix_from_results(
    rows: Iterable[tuple[str, int, AutocorrResult]],
    alpha: float = 0.01,
) -> PValueMatrix:
    """Rebuild a matrix from results-file rows (row order = job order)."""
    per_job: dict[str, dict[int, AutocorrResult]] = {}
    order: list[str] = []
    for job_id, qubit, res in rows:
        if job_id not in per_job:
            per_job[job_id] = {}
            order.append(job_id)
        if qubit in per_job[job_id]:
            raise ShapeError(f"duplicate cell for job {job_id!r} qubit {qubit}")
        per_job[job_id][qubit] = res
    if not order:
        raise ValueError("no result rows to aggregate")
    qubit_ids = tuple(sorted(per_job[order[0]]))
    lags = set()
    cells = []
    for job_id in order:
        if tuple(sorted(per_job[job_id])) != qubit_ids:
            raise ShapeError(f"job {job_id!r} does not cover the qubit set {qubit_ids}")
        row = tuple(per_job[job_id][q] for q in qubit_ids)
        lags.update(cell.lag for cell in row)
        cells.append(row)
    return PValueMatrix(
        job_ids=tuple(order), qubit_ids=qubit_ids, cells=tuple(cells),
        alpha=alpha, lag=lags.pop() if len(lags) == 1 else -1,
    )


def failure_ratio_per_qubit(
    matrix: PValueMatrix, alpha: float | None = None
) -> dict[int, float]:
    """Per-qubit #Fail / (#Fail + #Pass); NaN for an all-degenerate column."""
    alpha = matrix.alpha if alpha is None else alpha
    out: dict[int, float] = {}
    for col, qubit in enumerate(matrix.qubit_ids):
        verdicts = [_effective_verdict(row[col], alpha) for row in matrix.cells]
        fails = sum(v is Verdict.FAIL for v in verdicts)
        decided = sum(v is not Verdict.DEGENERATE for v in verdicts)
        out[qubit] = fails / decided if decided else math.nan
    return out


def degenerate_count_per_qubit(matrix: PValueMatrix) -> dict[int, int]:
    return {
        qubit: sum(row[col].verdict is Verdict.DEGENERATE for row in matrix.cells)
        for col, qubit in enumerate(matrix.qubit_ids)
    }


def simultaneous_pass_proportion(
    matrix: PValueMatrix, alpha: float | None = None
) -> float:
    """Fraction of jobs whose streams pass on every qubit at once."""
    alpha = matrix.alpha if alpha is None else alpha
    all_pass = sum(
        all(_effective_verdict(cell, alpha) is Verdict.PASS for cell in row)
        for row in matrix.cells
    )
    return all_pass / len(matrix.cells)


def pass_proportion_overall(
    matrix: PValueMatrix, alpha: float | None = None
) -> float:
    """Fraction of non-degenerate cells with p-value >= alpha."""
    alpha = matrix.alpha if alpha is None else alpha
    passed = decided = 0
    for row in matrix.cells:
        for cell in row:
            v = _effective_verdict(cell, alpha)
            if v is not Verdict.DEGENERATE:
                decided += 1
                passed += v is Verdict.PASS
    return passed / decided if decided else math.nan


def mean_t1_per_qubit(
    records: Iterable[CalibrationRecord],
    qubit_ids: Sequence[int] | None = None,
) -> dict[int, float]:
    """Arithmetic mean relaxation time per qubit; NaN flags a requested qubit
    with no records."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for rec in records:
        sums[rec.qubit_id] = sums.get(rec.qubit_id, 0.0) + rec.t1_us
        counts[rec.qubit_id] = counts.get(rec.qubit_id, 0) + 1
    means = {q: sums[q] / counts[q] for q in sorted(sums)}
    if qubit_ids is None:
        return means
    return {q: means.get(q, math.nan) for q in qubit_ids}


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties; pairs with a
    NaN on either side are dropped."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if x.size < 3:
        raise InsufficientDataError(
            f"need at least 3 complete pairs, got {x.size}"
        )
    rx = _rank_with_ties(x)
    ry = _rank_with_ties(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if denom == 0.0:
        raise InsufficientDataError("a side is constant after ranking")
    return float(np.dot(rx, ry) / denom)


@dataclass(frozen=True)
class AggregateReport:
    qubit_ids: tuple[int, ...]
    failure_ratio: dict[int, float]
    degenerate_per_qubit: dict[int, int]
    mean_t1_us: dict[int, float] | None
    simultaneous_pass_proportion: float
    pass_proportion_overall: float
    spearman_t1_failure: float | None
    degenerate_count: int
    alpha: float
    lag: int


def build_report(
    matrix: PValueMatrix,
    calibration: Iterable[CalibrationRecord] | None = None,
    alpha: float | None = None,
) -> AggregateReport:
    """Assemble the full fleet report; T1 fields are omitted (None) when no
    calibration data is supplied or too few qubits have both values."""
    alpha = matrix.alpha if alpha is None else alpha
    ratios = failure_ratio_per_qubit(matrix, alpha)
    degenerates = degenerate_count_per_qubit(matrix)
    mean_t1 = None
    rho_s: float | None = None
    if calibration is not None:
        mean_t1 = mean_t1_per_qubit(calibration, matrix.qubit_ids)
        try:
            rho_s = spearman(
                [mean_t1[q] for q in matrix.qubit_ids],
                [ratios[q] for q in matrix.qubit_ids],
            )
        except InsufficientDataError:
            rho_s = None
    return AggregateReport(
        qubit_ids=matrix.qubit_ids,
        failure_ratio=ratios,
        degenerate_per_qubit=degenerates,
        mean_t1_us=mean_t1,
        simultaneous_pass_proportion=simultaneous_pass_proportion(matrix, alpha),
        pass_proportion_overall=pass_proportion_overall(matrix, alpha),
        spearman_t1_failure=rho_s,
        degenerate_count=sum(degenerates.values()),
        alpha=alpha,
        lag=matrix.lag,
    )


def write_report_csv(report: AggregateReport, stream: TextIO) -> None:
    """Per-qubit rows followed by a commented footer of scalar fields."""
    stream.write("qubit_id,failure_ratio,mean_t1_us,degenerate_count\n")
    for q in report.qubit_ids:
        t1 = "" if report.mean_t1_us is None else repr(report.mean_t1_us[q])
        stream.write(
            f"{q},{report.failure_ratio[q]!r},{t1},{report.degenerate_per_qubit[q]}\n"
        )
    stream.write(f"# alpha={report.alpha!r}\n")
    stream.write(f"# lag={report.lag}\n")
    stream.write(
        f"# simultaneous_pass_proportion={report.simultaneous_pass_proportion!r}\n"
    )
    stream.write(f"# pass_proportion_overall={report.pass_proportion_overall!r}\n")
    stream.write(f"# degenerate_count={report.degenerate_count}\n")
    if report.spearman_t1_failure is not None:
        stream.write(f"# spearman_t1_failure={report.spearman_t1_failure!r}\n")
        stream.write(
            "# note=spearman is a rank-based reading of the T1-vs-failure scatter;"
            " see the scatter file to recompute other coefficients\n"
        )


def write_scatter_csv(report: AggregateReport, stream: TextIO) -> None:
    if report.mean_t1_us is None:
        raise ValueError("no relaxation-time data to emit")
    stream.write("qubit_id,mean_t1_us,failure_ratio\n")
    for q in report.qubit_ids:
        stream.write(f"{q},{report.mean_t1_us[q]!r},{report.failure_ratio[q]!r}\n")
