"""Tabulate the dissipative-qubit QFIM against its closed form.

Prints, per grid point, the largest deviation from the closed-form entries,
the normalized determinant and the QFI of the estimable combination.
"""

import argparse
import math

import numpy as np

from qubitqfim import DissipativeQubitModel, ParamPoint, estimable_combination, qfim_sld


def closed_form(x, g, t):
    e = math.exp(t * g)
    return np.array([[t * t * x / (e - x), t / (x - e)], [t / (x - e), 1.0 / (x * e - x * x)]])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5, help="points per axis")
    args = ap.parse_args()
    xs = np.linspace(0.1, 0.9, args.n)
    axis = np.linspace(0.2, 1.8, args.n)
    print(f"{'t':>5} {'x':>5} {'gamma':>6} {'max|dF|':>10} {'det/|F|^2':>10} {'qfi_comb':>10} {'closed':>10}")
    worst = 0.0
    for t in axis:
        m = DissipativeQubitModel(time=t)
        for x in xs:
            for g in axis:
                p = ParamPoint.of(gamma=g, x=x)
                r = qfim_sld(m, p)
                dev = float(np.max(np.abs(r.F - closed_form(x, g, t))))
                worst = max(worst, dev)
                c = estimable_combination(r, p)
                comb = (1 + t * t * x * x) / (math.exp(t * g) * x - x * x)
                print(f"{t:5.2f} {x:5.2f} {g:6.2f} {dev:10.2e} {r.det / r.norm() ** 2:10.2e} "
                      f"{c.qfi_values[0]:10.6f} {comb:10.6f}")
    print(f"worst entry deviation: {worst:.3e}")


if __name__ == "__main__":
    main()
