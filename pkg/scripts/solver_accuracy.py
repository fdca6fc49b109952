#!/usr/bin/env python3
"""Solve the invariance equation for one model and report per-order
accuracy: largest coefficient, mean invariance residual, spectral tail.
"""

import argparse

import numpy as np

from phamp.integrate import Flow
from phamp.jets import term_exponents
from phamp.models import get_model
from phamp.solver import AccuracyDomain, SolverConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="rt")
    ap.add_argument("--L", type=int, default=10)
    args = ap.parse_args()

    model = get_model(args.model)
    flow = Flow(model)
    K = solve(model, config=SolverConfig(L=args.L), flow=flow)
    g = K.diagnostics
    al, be = term_exponents(K.L)

    print(f"model={model.name} T={K.T:.6f} lam=({K.lam1:.6f},{K.lam2:.6f}) "
          f"L={K.L} N={K.n}")
    print(f"{'order':>5s} {'max|K|':>12s} {'l1 residual':>12s} {'tail':>12s}")
    for m in range(K.L + 1):
        sel = (al + be) == m
        print(f"{m:5d} {np.max(g.coeff_max[sel]):12.4e} "
              f"{np.max(g.order_l1[sel]):12.4e} {np.max(g.tail[sel]):12.4e}")

    domain = AccuracyDomain(K)
    rs = [domain.radius(th, ph)
          for th in (0.0, 0.25, 0.5, 0.75)
          for ph in np.linspace(0.0, 2 * np.pi, 8, endpoint=False)]
    print(f"accuracy-domain radius: min {min(rs):.4f}  max {max(rs):.4f}")


if __name__ == "__main__":
    main()
