"""Complementary error function to 1e-12 absolute accuracy, dependency-free.

Two branches, both classical:

* ``|x| <= 2``: the non-alternating Maclaurin series for erf,
  ``erf(x) = (2/sqrt(pi)) * x * exp(-x^2) * sum_k (2x^2)^k / (1*3*...*(2k+1))``,
  then ``erfc = 1 - erf``. No cancellation inside the sum (all terms positive).
* ``|x| > 2``: the Laplace continued fraction
  ``sqrt(pi) * exp(x^2) * erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))``
  evaluated by backward recurrence at fixed depth.

Negative arguments go through the reflection ``erfc(-x) = 2 - erfc(x)``.
Accuracy is pinned by tests against a committed 200-point high-precision table.
"""

from __future__ import annotations

import math

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SQRT_PI = math.sqrt(math.pi)

# Continued-fraction depth: at x = 2 the truncation error is already below
# double precision well before 100 levels; deeper only helps smaller x.
_CF_DEPTH = 120

# Series cutoff: terms fall below 1e-20 of the running sum long before this.
_SERIES_MAX_TERMS = 200


def _erf_series(x: float) -> float:
    """erf(x) for |x| <= 2 via the positive-term Maclaurin form."""
    if x == 0.0:
        return 0.0
    x2 = x * x
    term = 1.0
    total = 1.0
    k = 0
    while k < _SERIES_MAX_TERMS:
        k += 1
        term *= 2.0 * x2 / (2.0 * k + 1.0)
        total += term
        if term < 1e-20 * total:
            break
    return _TWO_OVER_SQRT_PI * x * math.exp(-x2) * total


def _erfc_continued_fraction(x: float) -> float:
    """erfc(x) for x > 2 via backward recurrence of the Laplace fraction."""
    tail = 0.0
    for k in range(_CF_DEPTH, 0, -1):
        tail = (0.5 * k) / (x + tail)
    return math.exp(-x * x) / _SQRT_PI / (x + tail)


def erfc(x: float) -> float:
    """Complementary error function (2/sqrt(pi)) * integral_x^inf exp(-t^2) dt.

    Raises ValueError on non-finite input. Absolute error <= 1e-12 on
    [-10, 10] (in practice a few ulps); monotone decreasing.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"erfc requires a finite argument, got {x!r}")
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x <= 2.0:
        return 1.0 - _erf_series(x)
    if x * x > 745.0:  # exp(-x^2) underflows; erfc(x) < 5e-324
        return 0.0
    return _erfc_continued_fraction(x)
