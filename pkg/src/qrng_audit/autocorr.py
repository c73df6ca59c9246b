"""Lag-l autocorrelation test for binary sequences.

The statistic is the XOR count ``A = sum_i x_i ^ x_{i+l}`` over the n-l pairs
l positions apart. Under independence with ones-probability p, a pair differs
with probability ``q = 2p(1-p)``, so A is centered at ``q(n-l)`` and is
standardized with variance ``(n-l) q (1-q)``; the two-sided p-value is
``erfc(|A'| / sqrt(2))``. A sequence fails at level alpha when p-value < alpha
(p-value == alpha passes). All-zero / all-one sequences have zero variance and
get the separate Degenerate verdict instead of a p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .special import erfc

# Below this value of (n-l) * q * (1-q) the normal approximation is dubious;
# results are still computed but flagged.
LOW_SAMPLE_VARIANCE = 25.0

# Smallest positive double; p-values are clamped here so they stay in (0, 1]
# even when erfc underflows for astronomically extreme statistics.
_TINY = 5e-324


class InvalidLagError(ValueError):
    """Lag outside 1 <= lag < n."""


class DegenerateVarianceError(ValueError):
    """Bias of 0 or 1 gives the statistic zero variance."""


class Verdict(Enum):
    PASS = "pass"
    FAIL = "fail"
    DEGENERATE = "degenerate"

    def __str__(self) -> str:
        return self.value


class BitSequence:
    """Immutable finite sequence of {0,1} symbols."""

    __slots__ = ("bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError(f"bits must be one-dimensional, got shape {arr.shape}")
        if arr.size < 1:
            raise ValueError("a bit sequence must contain at least one bit")
        if not np.all(arr <= 1):
            bad = int(np.argmax(arr > 1))
            raise ValueError(f"bit at position {bad} is not 0 or 1")
        arr.setflags(write=False)
        self.bits = arr

    @classmethod
    def from_string(cls, text: str) -> "BitSequence":
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")

    def ones_count(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.all(self.bits == other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        if len(self) <= 32:
            return f"BitSequence({self.to_string()!r})"
        return f"BitSequence(<{len(self)} bits>)"


@dataclass(frozen=True)
class TestParams:
    """Test configuration: lag, significance level, and bias handling.

    ``fixed_bias=None`` means the ones-probability is estimated from the
    sequence under test (its ones-frequency); a float pins it.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    lag: int = 1
    alpha: float = 0.01
    fixed_bias: float | None = None

    def __post_init__(self) -> None:
        if self.lag < 1:
            raise InvalidLagError(f"lag must be >= 1, got {self.lag}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.fixed_bias is not None and not 0.0 <= self.fixed_bias <= 1.0:
            raise ValueError(f"fixed bias must be in [0, 1], got {self.fixed_bias}")


@dataclass(frozen=True)
class AutocorrResult:
    """Full outcome of one autocorrelation test.

    ``normalized`` keeps its sign (negative means fewer mismatches than an
    independent source would produce); the p-value is two-sided, computed
    from |normalized|. For Degenerate verdicts normalized and p_value are
    None. ``low_sample`` flags (n-lag)*q*(1-q) < 25.
    """

    n: int
    lag: int
    statistic: int
    bias: float
    normalized: float | None
    p_value: float | None
    verdict: Verdict
    low_sample: bool = False


def autocorr_statistic(seq: BitSequence, lag: int) -> int:
    """XOR count of the ``len(seq) - lag`` bit pairs ``lag`` apart."""
    n = len(seq)
    if not 1 <= lag < n:
        raise InvalidLagError(f"lag must satisfy 1 <= lag < n={n}, got {lag}")
    return int((seq.bits[:-lag] ^ seq.bits[lag:]).sum(dtype=np.int64))


def estimate_bias(seq: BitSequence) -> float:
    """Ones-frequency of the sequence."""
    return seq.ones_count() / len(seq)


def pair_mismatch_rate(bias: float) -> float:
    """Probability 2p(1-p) that two independent bits with ones-probability p differ."""
    return 2.0 * bias * (1.0 - bias)


def normalize_statistic(statistic: float, n: int, lag: int, bias: float) -> float:
    """Standardize the XOR count: (A - q(n-lag)) / sqrt((n-lag) q (1-q))."""
    if not 0.0 <= bias <= 1.0:
        raise ValueError(f"bias must be in [0, 1], got {bias}")
    m = n - lag
    if m < 1:
        raise InvalidLagError(f"lag must satisfy 1 <= lag < n={n}, got {lag}")
    q = pair_mismatch_rate(bias)
    variance = m * q * (1.0 - q)
    if variance <= 0.0:
        raise DegenerateVarianceError(f"zero variance at bias {bias}")
    return (statistic - q * m) / math.sqrt(variance)


def p_value(normalized: float) -> float:
    """Two-sided p-value erfc(|A'| / sqrt(2)) of a standardized statistic."""
    normalized = float(normalized)
    if not math.isfinite(normalized):
        raise ValueError(f"normalized statistic must be finite, got {normalized!r}")
    return max(erfc(abs(normalized) / math.sqrt(2.0)), _TINY)


def run_test(seq: BitSequence, params: TestParams = TestParams()) -> AutocorrResult:
    """Run the full test: statistic, bias, normalization, p-value, verdict."""
    n = len(seq)
    statistic = autocorr_statistic(seq, params.lag)
    bias = params.fixed_bias if params.fixed_bias is not None else estimate_bias(seq)
    q = pair_mismatch_rate(bias)
    m = n - params.lag
    if q * (1.0 - q) <= 0.0:
        return AutocorrResult(
            n=n, lag=params.lag, statistic=statistic, bias=bias,
            normalized=None, p_value=None, verdict=Verdict.DEGENERATE,
        )
    normalized = normalize_statistic(statistic, n, params.lag, bias)
    p = p_value(normalized)
    verdict = Verdict.FAIL if p < params.alpha else Verdict.PASS
    return AutocorrResult(
        n=n, lag=params.lag, statistic=statistic, bias=bias,
        normalized=normalized, p_value=p, verdict=verdict,
        low_sample=m * q * (1.0 - q) < LOW_SAMPLE_VARIANCE,
    )
