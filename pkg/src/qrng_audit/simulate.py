"""Synthetic per-qubit bitstream generation.

Three source families stand in for device data:

* ``IdealSource``: i.i.d. Bernoulli(p) bits, the behaviour a perfect
  single-qubit generator should exhibit.
* ``MarkovSource``: a two-state chain with stationary ones-probability p
  and lag-1 autocorrelation rho, a phenomenological model of residual state
  leaking through an imperfect wait-based reset. ``reset_rho`` maps physical
  reset timing (relaxation time, wait, coupling) onto rho.
* ``DriftingSource``: independent bits whose bias follows a piecewise-
  constant trajectory over the job index, modelling slow device drift.

Every (job, qubit) stream draws from its own generator seeded by a SplitMix64
mix of (master_seed, job, qubit), so any subset of a run can be regenerated
independently and results never depend on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Sequence, Union

import numpy as np

from .autocorr import BitSequence
from .ingest import CalibrationRecord, JobRecord

# Experiment-shaped defaults: 20 qubits, 579 jobs of 8192 bits spread over
# roughly three and a half days.
DEFAULT_QUBIT_COUNT = 20
DEFAULT_JOBS = 579
DEFAULT_BITS_PER_JOB = 8192
DEFAULT_MASTER_SEED = 20190509
DEFAULT_RUN_START = datetime(2019, 5, 9, 11, 24, 27, tzinfo=timezone.utc)
DEFAULT_JOB_INTERVAL_S = 523.0

# Circuit timing: 1 kHz repetition gives a ~1 ms window per circuit, with
# ~4 ms of interleaved calibration circuits between executions.
REPETITION_PERIOD_US = 1000.0
CALIBRATION_GAP_US = 4000.0


class InvalidParameterError(ValueError):
    """Source parameters outside their valid region."""


class InvalidScheduleError(ValueError):
    """Bias schedule does not cover the requested indices."""


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanching 64-bit mix."""
    mask = (1 << 64) - 1
    z = (z + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def derive_substream_seed(master_seed: int, *indices: int) -> int:
    """Deterministic 64-bit child seed for a (master, indices...) substream."""
    h = _mix64(master_seed & ((1 << 64) - 1))
    for index in indices:
        h = _mix64(h ^ (index & ((1 << 64) - 1)))
    return h


def stream_seed(master_seed: int, job_index: int, qubit_id: int) -> int:
    return derive_substream_seed(master_seed, 0, job_index, qubit_id)


def _calibration_seed(master_seed: int, qubit_id: int) -> int:
    return derive_substream_seed(master_seed, 1, qubit_id)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _check_bias(bias: float) -> None:
    if not 0.0 <= bias <= 1.0:
        raise InvalidParameterError(f"bias must be in [0, 1], got {bias}")


def _check_markov(bias: float, rho: float) -> None:
    _check_bias(bias)
    if not rho < 1.0:
        raise InvalidParameterError(f"rho must be < 1, got {rho}")
    stay = bias + rho * (1.0 - bias)   # P(1 | previous 1)
    move = bias * (1.0 - rho)          # P(1 | previous 0)
    if not (0.0 <= stay <= 1.0 and 0.0 <= move <= 1.0):
        raise InvalidParameterError(
            f"rho={rho} with bias={bias} gives transition probabilities "
            f"outside [0, 1] (need rho > -min(p/(1-p), (1-p)/p))"
        )


@dataclass(frozen=True)
class IdealSource:
    bias: float = 0.5

    def __post_init__(self) -> None:
        _check_bias(self.bias)

    def bias_for_job(self, job_index: int) -> float:
        return self.bias


@dataclass(frozen=True)
class MarkovSource:
    bias: float = 0.5
    rho: float = 0.0

    def __post_init__(self) -> None:
        _check_markov(self.bias, self.rho)

    def bias_for_job(self, job_index: int) -> float:
        return self.bias


@dataclass(frozen=True)
class DriftingSource:
    """Bias trajectory over the job index: phases of (bias, job_count)."""

    phases: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        if not self.phases:
            raise InvalidScheduleError("drifting source needs at least one phase")
        for bias, count in self.phases:
            _check_bias(bias)
            if count < 1:
                raise InvalidScheduleError(f"phase job count must be >= 1, got {count}")

    @property
    def total_jobs(self) -> int:
        return sum(count for _, count in self.phases)

    def bias_for_job(self, job_index: int) -> float:
        offset = job_index
        for bias, count in self.phases:
            if offset < count:
                return bias
            offset -= count
        raise InvalidScheduleError(
            f"job index {job_index} beyond schedule covering {self.total_jobs} jobs"
        )


SourceModel = Union[IdealSource, MarkovSource, DriftingSource]


@dataclass(frozen=True)
class QubitPhysicalParams:
    """Reset timing of one qubit: relaxation time, wait, and how strongly
    surviving excitation couples into the next output bit."""

    qubit_id: int
    t1_us: float
    t_wait_us: float = REPETITION_PERIOD_US
    coupling: float = 0.0

    def __post_init__(self) -> None:
        if not self.t1_us > 0:
            raise InvalidParameterError(f"t1_us must be positive, got {self.t1_us}")
        if self.t_wait_us < 0:
            raise InvalidParameterError(f"t_wait_us must be >= 0, got {self.t_wait_us}")
        if not 0.0 <= self.coupling <= 1.0:
            raise InvalidParameterError(f"coupling must be in [0, 1], got {self.coupling}")


def reset_rho(params: QubitPhysicalParams) -> float:
    """Residual lag-1 correlation c * exp(-t_wait / T1) left by a wait-based reset."""
    return params.coupling * math.exp(-params.t_wait_us / params.t1_us)


def markov_from_physical(params: QubitPhysicalParams, bias: float = 0.5) -> MarkovSource:
    return MarkovSource(bias=bias, rho=reset_rho(params))


def ideal_source(bias: float, n: int, seed: int) -> BitSequence:
    """n i.i.d. Bernoulli(bias) bits from a deterministic seeded generator."""
    _check_bias(bias)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return BitSequence(_rng(seed).random(n) < bias)


def markov_source(bias: float, rho: float, n: int, seed: int) -> BitSequence:
    """Two-state chain: stationary ones-probability ``bias``, lag-1
    autocorrelation ``rho``. With rho=0 and the same seed this reproduces
    ideal_source bit for bit (one uniform draw per bit either way)."""
    _check_markov(bias, rho)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = _rng(seed).random(n)
    stay = bias + rho * (1.0 - bias)
    move = bias * (1.0 - rho)
    bits = np.empty(n, dtype=np.uint8)
    previous = u[0] < bias
    bits[0] = previous
    for i, draw in enumerate(u[1:].tolist(), start=1):
        previous = draw < (stay if previous else move)
        bits[i] = previous
    return BitSequence(bits)


def drifting_source(
    schedule: Sequence[tuple[float, int]], n: int, seed: int
) -> BitSequence:
    """Independent bits with piecewise-constant bias covering indices 1..n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    biases = []
    counts = []
    for bias, count in schedule:
        _check_bias(bias)
        if count < 1:
            raise InvalidScheduleError(f"phase bit count must be >= 1, got {count}")
        biases.append(bias)
        counts.append(count)
    if sum(counts) != n:
        raise InvalidScheduleError(
            f"schedule covers {sum(counts)} bits but n={n}"
        )
    thresholds = np.repeat(biases, counts)
    return BitSequence(_rng(seed).random(n) < thresholds)


@dataclass(frozen=True)
class DeviceRunConfig:
    """Shape and models for one synthetic device run."""

    qubit_count: int = DEFAULT_QUBIT_COUNT
    jobs: int = DEFAULT_JOBS
    bits_per_job: int = DEFAULT_BITS_PER_JOB
    models: SourceModel | tuple[SourceModel, ...] = IdealSource(0.5)
    master_seed: int = DEFAULT_MASTER_SEED
    start_time: datetime = DEFAULT_RUN_START
    job_interval_s: float = DEFAULT_JOB_INTERVAL_S

    def __post_init__(self) -> None:
        if min(self.qubit_count, self.jobs, self.bits_per_job) < 1:
            raise ValueError("qubit_count, jobs, and bits_per_job must all be >= 1")
        if isinstance(self.models, tuple) and len(self.models) != self.qubit_count:
            raise ValueError(
                f"got {len(self.models)} per-qubit models for {self.qubit_count} qubits"
            )

    def model_for(self, qubit_id: int) -> SourceModel:
        if isinstance(self.models, tuple):
            return self.models[qubit_id]
        return self.models

    def job_timestamp(self, job_index: int) -> datetime:
        return self.start_time + timedelta(seconds=job_index * self.job_interval_s)


@dataclass(frozen=True)
class DeviceRun:
    jobs: list[JobRecord]
    calibration: list[CalibrationRecord] | None = None


def _job_stream(config: DeviceRunConfig, job_index: int, qubit_id: int) -> BitSequence:
    model = config.model_for(qubit_id)
    seed = stream_seed(config.master_seed, job_index, qubit_id)
    n = config.bits_per_job
    if isinstance(model, MarkovSource):
        return markov_source(model.bias, model.rho, n, seed)
    return ideal_source(model.bias_for_job(job_index), n, seed)


def generate_device_run(
    config: DeviceRunConfig, with_calibration: bool = False
) -> DeviceRun:
    """Generate jobs x qubits streams (and optionally a drifting calibration
    series). Each stream is independently derivable from its seed, so any
    subset regenerates bit-for-bit."""
    for q in range(config.qubit_count):
        model = config.model_for(q)
        if isinstance(model, DriftingSource) and model.total_jobs != config.jobs:
            raise InvalidScheduleError(
                f"qubit {q}: schedule covers {model.total_jobs} jobs, run has {config.jobs}"
            )
    jobs = [
        JobRecord(
            job_id=f"j{j + 1:04d}",
            timestamp=config.job_timestamp(j),
            streams=tuple(
                (q, _job_stream(config, j, q)) for q in range(config.qubit_count)
            ),
        )
        for j in range(config.jobs)
    ]
    calibration = generate_calibration_series(config) if with_calibration else None
    return DeviceRun(jobs=jobs, calibration=calibration)


def generate_calibration_series(
    config: DeviceRunConfig,
    interval_s: float = 4 * 3600.0,
    base_t1_us: Sequence[float] | None = None,
    relative_step: float = 0.05,
    t1_range_us: tuple[float, float] = (40.0, 110.0),
) -> list[CalibrationRecord]:
    """Per-qubit relaxation-time series drifting as a bounded multiplicative
    random walk, sampled every ``interval_s`` over the run's span."""
    span_s = config.jobs * config.job_interval_s
    ticks = int(span_s // interval_s) + 1
    records = []
    for q in range(config.qubit_count):
        rng = _rng(_calibration_seed(config.master_seed, q))
        if base_t1_us is not None:
            base = float(base_t1_us[q])
        else:
            base = float(rng.uniform(*t1_range_us))
        t1 = base
        for tick in range(ticks):
            records.append(
                CalibrationRecord(
                    timestamp=config.start_time + timedelta(seconds=tick * interval_s),
                    qubit_id=q,
                    t1_us=t1,
                )
            )
            t1 = float(np.clip(t1 * math.exp(rng.normal(0.0, relative_step)),
                               base / 3.0, base * 3.0))
    records.sort(key=lambda r: (r.timestamp, r.qubit_id))
    return records
