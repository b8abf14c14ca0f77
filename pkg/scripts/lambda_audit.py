"""Compare the printed eigen-model weight Lambda with the Bloch-oracle value.

For lambda(x, y) = 0.2 + 0.1 x y and h(x, y) = x - 0.4 y^2 the quantum block
of the QFIM is w (dh)(dh)^T; this prints the printed w, the recovered w and
whether the determinant zero set still agrees, over a sweep of theta0.
"""

import argparse
import math

import numpy as np

from qubitqfim import EigenModel, ParamPoint, lambda_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--x", type=float, default=0.5)
    ap.add_argument("--y", type=float, default=0.7)
    ap.add_argument("--steps", type=int, default=9)
    args = ap.parse_args()
    p = ParamPoint.of(x=args.x, y=args.y)
    print(f"{'theta0':>8} {'printed':>10} {'oracle':>10} {'4(1-2l)^2':>10} {'diff':>10} {'zero set':>8}")
    for theta0 in np.linspace(0.0, math.pi / 2, args.steps):
        a = lambda_audit(EigenModel("0.2 + 0.1*x*y", "x - 0.4*y^2", theta0), p)
        print(f"{theta0:8.4f} {a.printed_lambda:10.6f} {a.oracle_weight:10.6f} "
              f"{a.bloch_closed_form:10.6f} {a.discrepancy:10.2e} {str(a.zero_set_agrees):>8}")


if __name__ == "__main__":
    main()
