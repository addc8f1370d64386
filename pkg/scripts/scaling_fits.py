#!/usr/bin/env python3
"""Log-log slopes of b tau_{j,j-1} and b tau against N.

Two families are fitted: j = N/2 at a fixed Gamma / Gamma_c, and a fixed j
at a fixed absolute field (Gamma_c = 2jJ/N shrinks with N there, so that
sector sits deeper in the paramagnetic phase as N grows).  They answer
different questions, which is why both are printed.
"""

import argparse
import logging
import math

import numpy as np

from lmgtherm.rates import DEFAULT_GAMMA
from lmgtherm.sector import SectorParams, critical_field
from lmgtherm.sweep import fit_scaling_exponent
from lmgtherm.times import b_scale, tau_j_jm1, thermalization_time


def _fit(sectors, beta):
    b = b_scale(DEFAULT_GAMMA)
    N_grid, pair, full = [], [], []
    for s in sectors:
        N_grid.append(s.N)
        pair.append(b * tau_j_jm1(s, beta))
        full.append(thermalization_time(s, beta).tau_b)
    return fit_scaling_exponent(N_grid, pair), fit_scaling_exponent(N_grid, full)


def symmetric(N_grid, ratio, beta):
    base = [SectorParams(int(N), int(N), 1.0, 0.0) for N in N_grid]
    return _fit([s.with_field(ratio * critical_field(s)) for s in base], beta)


def fixed_j(N_grid, two_j, field, beta):
    return _fit([SectorParams(int(N), two_j, 1.0, field) for N in N_grid], beta)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=400)
    ap.add_argument("--n-max", type=int, default=3200)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--fixed-two-j", type=int, default=20)
    ap.add_argument("--fixed-field", type=float, default=2.0)
    args = ap.parse_args()
    logging.getLogger("lmgtherm").setLevel(logging.ERROR)  # tie warnings are expected here

    # multiples of 4 keep Gamma_c / 2 off the level ties
    N = np.unique(np.round(np.geomspace(args.n_min, args.n_max, args.points) / 4).astype(int) * 4)
    print(f"N grid: {N.tolist()}")
    print(f"{'family':>14} {'beta':>6} {'slope pair':>11} {'slope tau':>10}")
    for beta in (1.0, 10.0, 100.0, math.inf):
        for ratio in (0.5, 1.0, 2.0):
            fp, ff = symmetric(N, ratio, beta)
            print(f"{f'j=N/2 G/Gc={ratio:g}':>14} {beta:6g} {fp.slope:11.4f} {ff.slope:10.4f}")
        fp, ff = fixed_j(N, args.fixed_two_j, args.fixed_field, beta)
        label = f"2j={args.fixed_two_j} G={args.fixed_field:g}"
        print(f"{label:>14} {beta:6g} {fp.slope:11.4f} {ff.slope:10.4f}")


if __name__ == "__main__":
    main()
