#!/usr/bin/env python3
"""How good is the normal approximation behind the test's p-values?

Sweeps exact null distributions (full enumeration for small n, the closed
binomial form at p=1/2 for large n) against the erfc-based p-values and
prints the worst absolute gap per setting, overall and inside the critical
region p in [0.005, 0.05] where verdicts are decided.

The small-n biased settings also expose the plug-in variance mismatch: the
standardization variance assumes independent XOR terms, which only holds at
p = 1/2.
"""

from __future__ import annotations

import argparse

from qrng_audit.oracle import approximation_error


def gap_line(n, lag, bias):
    table = approximation_error(n, lag, bias)
    region = [
        r for r in table.rows
        if 0.005 <= r.approx_p <= 0.05 or 0.005 <= r.exact_p <= 0.05
    ]
    region_gap = max((abs(r.difference) for r in region), default=float("nan"))
    return (
        f"n={n:>5} lag={lag} bias={bias:<4}  "
        f"max|gap| {table.max_abs_difference:.5f}   "
        f"critical-region max|gap| {region_gap:.5f}"
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--big-n", type=int, default=8192,
                        help="closed-form binomial setting (bias 0.5)")
    args = parser.parse_args()

    print("exact enumeration, small n:")
    for n in (16, 20, 24):
        for bias in (0.5, 0.3, 0.1):
            print("  " + gap_line(n, 1, bias))

    print("closed-form binomial, large n:")
    for n in (1024, args.big_n):
        print("  " + gap_line(n, 1, 0.5))

    print()
    print("worst critical-region rows at the large-n setting:")
    table = approximation_error(args.big_n, 1, 0.5)
    rows = [
        r for r in table.rows
        if 0.005 <= r.approx_p <= 0.05 or 0.005 <= r.exact_p <= 0.05
    ]
    rows.sort(key=lambda r: -abs(r.difference))
    print("  statistic     exact_p    approx_p  difference")
    for r in rows[:8]:
        print(f"  {r.statistic:9d}  {r.exact_p:.6f}  {r.approx_p:.6f}  {r.difference:+.6f}")


if __name__ == "__main__":
    main()
