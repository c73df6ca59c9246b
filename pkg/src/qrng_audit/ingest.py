"""CSV formats for job bitstreams, calibration series, and test results.

Three file kinds, all UTF-8 CSV with a fixed header:

* job file        ``job_id,timestamp,qubit_id,bits``: one row per
                  (job, qubit), ``bits`` an ASCII string over {0,1}; every
                  row in a file carries the same declared bit count.
* calibration     ``timestamp,qubit_id,t1_us``
* results         ``job_id,qubit_id,n,lag,bias,statistic,normalized,p_value,verdict``

Parsers are strict: every rejection raises ParseError carrying the offending
line number. Serializers emit a canonical form (rows sorted by job order then
qubit id, timestamps second-precision UTC with a trailing Z, floats in
shortest round-trip notation), so serialize(parse(f)) is byte-identical for
canonical inputs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, TextIO

import numpy as np

from .autocorr import AutocorrResult, BitSequence, Verdict

JOB_HEADER = ["job_id", "timestamp", "qubit_id", "bits"]
CALIBRATION_HEADER = ["timestamp", "qubit_id", "t1_us"]
RESULT_HEADER = [
    "job_id", "qubit_id", "n", "lag", "bias",
    "statistic", "normalized", "p_value", "verdict",
]


class ParseError(ValueError):
    """Malformed input; ``line`` is the 1-based physical line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class CalibrationRecord:
    timestamp: datetime
    qubit_id: int
    t1_us: float

    def __post_init__(self) -> None:
        if not self.t1_us > 0:
            raise ValueError(f"t1_us must be positive, got {self.t1_us}")


@dataclass(frozen=True)
class JobRecord:
    """One job: its id, submission instant, and one bit stream per qubit."""

    job_id: str
    timestamp: datetime
    streams: tuple[tuple[int, BitSequence], ...]

    def __post_init__(self) -> None:
        qubits = [q for q, _ in self.streams]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"job {self.job_id}: duplicate qubit ids")
        if qubits != sorted(qubits):
            object.__setattr__(
                self, "streams", tuple(sorted(self.streams, key=lambda s: s[0]))
            )

    @property
    def qubit_ids(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.streams)

    def stream(self, qubit_id: int) -> BitSequence:
        for q, seq in self.streams:
            if q == qubit_id:
                return seq
        raise KeyError(qubit_id)


def _parse_timestamp(text: str, line: int) -> datetime:
    raw = text.strip()
    candidate = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        ts = datetime.fromisoformat(candidate)
    except ValueError:
        raise ParseError(f"malformed timestamp {raw!r}", line) from None
    if ts.tzinfo is None:
        raise ParseError(f"timestamp {raw!r} must carry a UTC offset", line)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_qubit_id(text: str, line: int) -> int:
    try:
        qubit = int(text)
    except ValueError:
        raise ParseError(f"qubit_id {text!r} is not an integer", line) from None
    if qubit < 0:
        raise ParseError(f"qubit_id must be non-negative, got {qubit}", line)
    return qubit


def _check_header(row: list[str] | None, expected: list[str]) -> None:
    if row != expected:
        raise ParseError(
            f"expected header {','.join(expected)!r}, got "
            f"{','.join(row) if row else '<empty file>'!r}",
            line=1,
        )


def parse_jobs(stream: TextIO | Iterable[str], expected_bits: int | None = None) -> list[JobRecord]:
    """Parse a job CSV into records, in file order of first appearance.

    ``expected_bits`` pins the declared per-stream length; by default the
    first data row declares it.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise ParseError(f"unreadable CSV: {exc}", line=1) from None
    _check_header(header, JOB_HEADER)

    declared = expected_bits
    order: list[str] = []
    timestamps: dict[str, datetime] = {}
    streams: dict[str, list[tuple[int, BitSequence]]] = {}
    seen: set[tuple[str, int]] = set()
    while True:
        try:
            row = next(reader, None)
        except csv.Error as exc:
            raise ParseError(f"unreadable CSV: {exc}", reader.line_num) from None
        if row is None:
            break
        line = reader.line_num
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line)
        job_id, ts_text, qubit_text, bits_text = row
        if not job_id:
            raise ParseError("empty job_id", line)
        timestamp = _parse_timestamp(ts_text, line)
        qubit = _parse_qubit_id(qubit_text, line)
        if not bits_text:
            raise ParseError("empty bit string", line)
        bad = set(bits_text) - {"0", "1"}
        if bad:
            raise ParseError(f"bit string contains non-bit character {min(bad)!r}", line)
        if declared is None:
            declared = len(bits_text)
        elif len(bits_text) != declared:
            raise ParseError(
                f"bit string length {len(bits_text)} does not match declared {declared}",
                line,
            )
        if (job_id, qubit) in seen:
            raise ParseError(f"duplicate stream for job {job_id!r} qubit {qubit}", line)
        seen.add((job_id, qubit))
        if job_id not in timestamps:
            order.append(job_id)
            timestamps[job_id] = timestamp
            streams[job_id] = []
        elif timestamps[job_id] != timestamp:
            raise ParseError(
                f"job {job_id!r} has conflicting timestamps", line
            )
        streams[job_id].append((qubit, BitSequence.from_string(bits_text)))

    return [
        JobRecord(job_id=j, timestamp=timestamps[j], streams=tuple(streams[j]))
        for j in order
    ]


def serialize_jobs(records: Iterable[JobRecord], stream: TextIO) -> None:
    """Write records as canonical job CSV (job order, then ascending qubit)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(JOB_HEADER)
    for record in records:
        ts = format_timestamp(record.timestamp)
        for qubit, seq in record.streams:
            writer.writerow([record.job_id, ts, qubit, seq.to_string()])


def serialize_jobs_str(records: Iterable[JobRecord]) -> str:
    buf = io.StringIO()
    serialize_jobs(records, buf)
    return buf.getvalue()


def parse_calibration(stream: TextIO | Iterable[str]) -> tuple[list[CalibrationRecord], int]:
    """Parse a calibration CSV; returns (records, duplicate_count).

    Repeated (timestamp, qubit_id) keys keep the last value seen.
    """
    reader = csv.reader(stream)
    header = next(reader, None)
    _check_header(header, CALIBRATION_HEADER)

    by_key: dict[tuple[datetime, int], CalibrationRecord] = {}
    duplicates = 0
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line)
        ts = _parse_timestamp(row[0], line)
        qubit = _parse_qubit_id(row[1], line)
        try:
            t1 = float(row[2])
        except ValueError:
            raise ParseError(f"t1_us {row[2]!r} is not a number", line) from None
        if not 0.0 < t1 < float("inf"):
            raise ParseError(f"t1_us must be a positive finite value, got {row[2]}", line)
        if (ts, qubit) in by_key:
            duplicates += 1
        by_key[(ts, qubit)] = CalibrationRecord(timestamp=ts, qubit_id=qubit, t1_us=t1)
    return list(by_key.values()), duplicates


def serialize_calibration(records: Iterable[CalibrationRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CALIBRATION_HEADER)
    for rec in sorted(records, key=lambda r: (r.timestamp, r.qubit_id)):
        writer.writerow([format_timestamp(rec.timestamp), rec.qubit_id, repr(rec.t1_us)])


def pack_bits(seq: BitSequence) -> bytes:
    """Packed stream form for large runs: 8-byte big-endian bit count, then
    the bits 8 per byte, most significant bit first, zero-padded at the tail."""
    return len(seq).to_bytes(8, "big") + np.packbits(seq.bits).tobytes()


def unpack_bits(data: bytes) -> tuple[BitSequence, bytes]:
    """Inverse of pack_bits; returns (sequence, remaining bytes) so packed
    streams can be concatenated."""
    if len(data) < 8:
        raise ParseError("packed stream truncated before its length prefix")
    n = int.from_bytes(data[:8], "big")
    if n < 1:
        raise ParseError(f"packed stream declares {n} bits")
    n_bytes = (n + 7) // 8
    payload = data[8 : 8 + n_bytes]
    if len(payload) < n_bytes:
        raise ParseError(f"packed stream declares {n} bits but carries {len(payload) * 8}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:n]
    return BitSequence(bits), data[8 + n_bytes :]


def _format_float(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_results(
    rows: Iterable[tuple[str, int, AutocorrResult]], stream: TextIO
) -> None:
    """Write per-(job, qubit) test outcomes as the results CSV."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for job_id, qubit, res in rows:
        writer.writerow([
            job_id, qubit, res.n, res.lag, repr(res.bias), res.statistic,
            _format_float(res.normalized), _format_float(res.p_value),
            res.verdict.value,
        ])


def read_results(stream: TextIO | Iterable[str]) -> list[tuple[str, int, AutocorrResult]]:
    reader = csv.reader(stream)
    header = next(reader, None)
    _check_header(header, RESULT_HEADER)
    out: list[tuple[str, int, AutocorrResult]] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(RESULT_HEADER):
            raise ParseError(f"expected {len(RESULT_HEADER)} fields, got {len(row)}", line)
        try:
            verdict = Verdict(row[8])
        except ValueError:
            raise ParseError(f"unknown verdict {row[8]!r}", line) from None
        try:
            result = AutocorrResult(
                n=int(row[2]), lag=int(row[3]), statistic=int(row[5]),
                bias=float(row[4]),
                normalized=float(row[6]) if row[6] else None,
                p_value=float(row[7]) if row[7] else None,
                verdict=verdict,
            )
        except ValueError as exc:
            raise ParseError(f"malformed result row: {exc}", line) from None
        out.append((row[0], _parse_qubit_id(row[1], line), result))
    return out
