#!/usr/bin/env python3
"""Zero-temperature bookkeeping at the critical field, j = N/2.

Prints b tau_Q, b tau_P, their ratio, and mu2 next to two closed-form
candidates for it.  At beta = infinity the generator is triangular, so the
whole table follows from the diagonal.
"""

import math

from lmgtherm.rates import DEFAULT_GAMMA, sector_generator
from lmgtherm.sector import SectorParams, critical_field, gap
from lmgtherm.times import mu2_and_tau_P, thermalization_time


def row(N: int, ratio: float = 1.0) -> str:
    s0 = SectorParams(N, N, 1.0, 0.0)
    s = s0.with_field(ratio * critical_field(s0))
    r = thermalization_time(s, math.inf, DEFAULT_GAMMA)
    mu2 = mu2_and_tau_P(sector_generator(s, math.inf)).mu2
    d3 = gap(s).gap ** 3
    cand_a = 2 * DEFAULT_GAMMA * (2 * s.j - 1) * d3
    cand_b = 2 * DEFAULT_GAMMA * (2 * s.j) * d3
    return (
        f"{N:6d} {ratio:5.3f} {r.tauQ_b:14.6g} {r.tauQ_b / N**2:8.5f} {r.tauP_b:14.6g} "
        f"{r.tau_Q / r.tau_P:7.4f} {mu2:12.6g} {mu2 / cand_a:9.5f} {mu2 / cand_b:9.5f}"
    )


def main() -> None:
    print(f"{'N':>6} {'G/Gc':>5} {'b tauQ':>14} {'/N^2':>8} {'b tauP':>14} {'Q/P':>7} "
          f"{'mu2':>12} {'/(2j-1)':>9} {'/(2j)':>9}")
    for N in (20, 50, 100, 200, 500, 1000, 2000):
        print(row(N))
    print()
    for ratio in (0.237, 0.487, 0.737, 0.937):
        print(row(100, ratio))


if __name__ == "__main__":
    main()
