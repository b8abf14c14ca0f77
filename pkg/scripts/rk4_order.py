"""Measure the convergence order of the Lindblad RK4 integrator.

The excited population of a decaying qubit is compared with exp(-gamma t)
for a sequence of halved time steps.
"""

import argparse
import math

from qubitqfim import DensityMatrix, Hermitian2, convergence_order
from qubitqfim.models import integrate_lindblad


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.8)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=0.1, help="coarsest step")
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    exact = math.exp(-args.gamma * args.t)
    errs = []
    for k in range(args.levels):
        dt = args.dt / 2**k
        rho = integrate_lindblad(DensityMatrix(Hermitian2(1.0, 0.0)), 0.0, args.gamma, args.t, dt)
        errs.append(abs(rho.m.a11 - exact))
        print(f"dt={dt:<10.6g} error={errs[-1]:.3e}")
    for i in range(len(errs) - 2):
        print(f"order over levels {i}-{i + 2}: {convergence_order(errs[i:i + 3])}")


if __name__ == "__main__":
    main()
