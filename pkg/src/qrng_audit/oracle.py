"""Exact null distributions of the XOR-count statistic.

Ground truth for the normal approximation used by the main test. Two routes:

* full enumeration of every length-n sequence (n <= 24), weighting each by
  ``p^ones * (1-p)^(n-ones)``, valid for any bias;
* the closed-form Binomial(n-lag, 1/2) that the statistic follows exactly at
  p = 1/2 (the lag-differenced fair i.i.d. sequence is itself i.i.d. fair).

Enumeration counts (statistic, ones) pairs with exact integers and applies
float weights only to the <= (n+1)^2 aggregated cells, so at p = 1/2 the pmf
is exact to the last bit. The binomial route uses the exact big-integer
recurrence C(m,k+1) = C(m,k)(m-k)/(k+1) and correctly rounded division, which
stays accurate past n = 10^5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autocorr import normalize_statistic, p_value, pair_mismatch_rate

ENUMERATION_MAX_N = 24
_CHUNK = 1 << 20


class EnumerationLimitError(ValueError):
    """Sequence length too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ExactDistribution:
    """Exact pmf of the XOR-count statistic on its support 0..n-lag."""

    n: int
    lag: int
    bias: float
    pmf: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = self.n - self.lag
        if self.pmf.shape != (m + 1,):
            raise ValueError(f"pmf must cover 0..{m}, got shape {self.pmf.shape}")
        if np.any(self.pmf < 0.0):
            raise ValueError("pmf has negative mass")
        total = math.fsum(self.pmf.tolist())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf mass {total!r} deviates from 1 by more than 1e-12")
        self.pmf.setflags(write=False)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.n - self.lag + 1)

    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def variance(self) -> float:
        d = self.support - self.mean()
        return float(np.dot(d * d, self.pmf))

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.support, self.pmf)}


def exact_distribution_enumerate(n: int, lag: int, bias: float) -> ExactDistribution:
    """Exact pmf by visiting all 2^n sequences (n <= 24), any bias."""
    if not 1 <= lag < n:
        raise ValueError(f"lag must satisfy 1 <= lag < n={n}, got {lag}")
    if n > ENUMERATION_MAX_N:
        raise EnumerationLimitError(
            f"enumeration is limited to n <= {ENUMERATION_MAX_N}, got {n}"
        )
    if not 0.0 <= bias <= 1.0:
        raise ValueError(f"bias must be in [0, 1], got {bias}")

    m = n - lag
    pair_mask = np.uint32((1 << m) - 1)
    # Integer joint counts over (statistic value, ones count): exact.
    joint = np.zeros((m + 1) * (n + 1), dtype=np.int64)
    for lo in range(0, 1 << n, _CHUNK):
        block = np.arange(lo, min(lo + _CHUNK, 1 << n), dtype=np.uint32)
        ones = np.bitwise_count(block)
        stat = np.bitwise_count((block ^ (block >> np.uint32(lag))) & pair_mask)
        joint += np.bincount(
            stat.astype(np.int64) * (n + 1) + ones, minlength=joint.size
        )
    counts = joint.reshape(m + 1, n + 1)

    weight_by_ones = [bias**c * (1.0 - bias) ** (n - c) for c in range(n + 1)]
    pmf = np.array(
        [
            math.fsum(int(counts[a, c]) * weight_by_ones[c] for c in range(n + 1))
            for a in range(m + 1)
        ]
    )
    return ExactDistribution(n=n, lag=lag, bias=bias, pmf=pmf)


def exact_distribution_binomial(n: int, lag: int) -> ExactDistribution:
    """Binomial(n-lag, 1/2) pmf; the exact law of the statistic at bias 1/2."""
    if not 1 <= lag < n:
        raise ValueError(f"lag must satisfy 1 <= lag < n={n}, got {lag}")
    m = n - lag
    denominator = 1 << m
    pmf = np.empty(m + 1)
    coeff = 1
    for k in range(m + 1):
        pmf[k] = coeff / denominator  # correctly rounded big-int division
        coeff = coeff * (m - k) // (k + 1)
    return ExactDistribution(n=n, lag=lag, bias=0.5, pmf=pmf)


def exact_two_sided_p(dist: ExactDistribution, observed: int) -> float:
    """Total pmf mass at least as far from the exact mean as ``observed``."""
    m = dist.n - dist.lag
    if not 0 <= observed <= m:
        raise ValueError(f"observed must be in [0, {m}], got {observed}")
    distances = np.abs(dist.support - dist.mean())
    # Tiny slack so the mirror point k = 2*mean - observed is kept when the
    # mean itself carries float rounding (bias != 1/2).
    mask = distances >= distances[observed] - 1e-9
    return float(np.sum(dist.pmf[mask]))


def xor_count_mean(n: int, lag: int, bias: float) -> float:
    """Exact mean q(n-lag) of the statistic, q = 2p(1-p); holds for every lag."""
    return pair_mismatch_rate(bias) * (n - lag)


def xor_count_variance_lag1(n: int, bias: float) -> float:
    """Exact lag-1 variance (n-1)q(1-q) + 2(n-2)(p(1-p) - q^2).

    The covariance term comes from adjacent XOR pairs sharing a bit; it
    vanishes at p = 1/2, where the plug-in variance (n-1)q(1-q) is exact.
    """
    q = pair_mismatch_rate(bias)
    return (n - 1) * q * (1.0 - q) + 2.0 * (n - 2) * (bias * (1.0 - bias) - q * q)


@dataclass(frozen=True)
class ApproximationRow:
    statistic: int
    exact_p: float
    approx_p: float
    difference: float


@dataclass(frozen=True)
class ApproximationTable:
    n: int
    lag: int
    bias: float
    rows: tuple[ApproximationRow, ...]

    @property
    def max_abs_difference(self) -> float:
        return max((abs(r.difference) for r in self.rows), default=0.0)


def _pick_distribution(n: int, lag: int, bias: float) -> ExactDistribution:
    if n <= ENUMERATION_MAX_N:
        return exact_distribution_enumerate(n, lag, bias)
    if bias == 0.5:
        return exact_distribution_binomial(n, lag)
    raise EnumerationLimitError(
        f"no exact distribution available for n={n} with bias {bias}; "
        f"enumeration stops at n={ENUMERATION_MAX_N} and the closed form "
        "requires bias 0.5"
    )


def approximation_error(
    n: int,
    lag: int,
    bias: float,
    k_range: tuple[int, int] | None = None,
) -> ApproximationTable:
    """Tabulate exact vs normal-approximation two-sided p-values per statistic value."""
    dist = _pick_distribution(n, lag, bias)
    m = n - lag
    k_lo, k_hi = k_range if k_range is not None else (0, m)
    if not 0 <= k_lo <= k_hi <= m:
        raise ValueError(f"k_range must lie within [0, {m}], got {k_range}")

    # One pass over distances gives every tail sum; ascending-pmf order keeps
    # the small tails accurate.
    distances = np.abs(dist.support - dist.mean())
    order = np.argsort(-distances, kind="stable")
    tail = np.empty(m + 1)
    tail[order] = np.cumsum(dist.pmf[order])
    exact_by_k = np.empty(m + 1)
    # Ties at the same distance must share the full tail mass.
    sorted_d = distances[order]
    run_start = 0
    for i in range(1, m + 2):
        if i == m + 1 or sorted_d[i] < sorted_d[run_start] - 1e-9:
            exact_by_k[order[run_start:i]] = tail[order[i - 1]]
            run_start = i

    rows = []
    for k in range(k_lo, k_hi + 1):
        approx = p_value(normalize_statistic(k, n, lag, bias))
        exact = float(min(exact_by_k[k], 1.0))
        rows.append(
            ApproximationRow(
                statistic=k, exact_p=exact, approx_p=approx,
                difference=exact - approx,
            )
        )
    return ApproximationTable(n=n, lag=lag, bias=bias, rows=tuple(rows))
