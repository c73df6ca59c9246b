#!/usr/bin/env python3
"""Regenerate the high-precision erfc reference table used by the test suite.

The table pins 200 points on [-10, 10]: 199 uniformly spaced plus x = 1.0.
Values come from mpmath at 40 significant digits, evaluated at the *exact*
binary float of each grid point, so the table is a true oracle for a double
precision erfc. Requires mpmath (not a runtime dependency of the package).
"""

from __future__ import annotations

import csv
from pathlib import Path

import mpmath

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "erfc_reference_200.csv"
N_UNIFORM = 199


def grid() -> list[float]:
    xs = [-10.0 + 20.0 * i / (N_UNIFORM - 1) for i in range(N_UNIFORM)]
    xs.append(1.0)
    return sorted(xs)


def main() -> None:
    mpmath.mp.dps = 40
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "erfc"])
        for x in grid():
            # mpf(float) takes the exact binary value, not the decimal literal
            writer.writerow([repr(x), mpmath.nstr(mpmath.erfc(mpmath.mpf(x)), 30)])
    print(f"wrote {OUT} ({len(grid())} points)")


if __name__ == "__main__":
    main()
