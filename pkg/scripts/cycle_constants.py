#!/usr/bin/env python3
"""Print the limit-cycle constants of every bundled model: period,
Floquet exponents, and the saddle-focus equilibrium of the phaseless set.
"""

import argparse

import numpy as np

from phamp.integrate import Flow
from phamp.limit_cycle import find_limit_cycle, floquet_data
from phamp.models import MODEL_NAMES, find_equilibrium, get_model

EQ_GUESS = {
    "rt": (-39.1, 0.38, 1.3e-5),
    "hh": (-49.1, 0.564, 0.137),
    "wcsyn": (0.272, 0.033, 0.198),
    "qif": (0.018, -0.267, 0.018),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", nargs="*", default=[m for m in MODEL_NAMES
                                                    if m != "synth"])
    args = ap.parse_args()

    print(f"{'model':8s} {'T':>12s} {'lam1':>12s} {'lam2':>12s}  equilibrium")
    for name in args.models:
        model = get_model(name)
        flow = Flow(model)
        x0, T = find_limit_cycle(model, flow=flow)
        fd = floquet_data(model, x0, T, n=512, flow=flow)
        eq = (find_equilibrium(model, EQ_GUESS[name])
              if name in EQ_GUESS else None)
        eq_s = np.array2string(eq, precision=4) if eq is not None else "-"
        print(f"{name:8s} {T:12.6f} {fd.lam1:12.6f} {fd.lam2:12.6f}  {eq_s}")


if __name__ == "__main__":
    main()
