#!/usr/bin/env python3
"""Fixed points of the stroboscopic pulse-train maps, in every
description: exact state-space, linearized phase-amplitude, slow
(sigma_1 = 0), and phase-only.
"""

import argparse
import time

import numpy as np

from phamp.integrate import Flow
from phamp.models import get_model
from phamp.solver import solve
from phamp.strobe import StimulusSpec, fixed_point


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="rt")
    ap.add_argument("--eps", type=float, default=-0.1)
    ap.add_argument("--pulses", type=int, default=100)
    ap.add_argument("--ts", type=float, default=0.001)
    ap.add_argument("--tp", type=float, default=8.394)
    ap.add_argument("--v", default="1,0,0")
    args = ap.parse_args()

    model = get_model(args.model)
    flow = Flow(model)
    K = solve(model, flow=flow)
    stim = StimulusSpec(eps=args.eps,
                        v=tuple(float(t) for t in args.v.split(",")),
                        n=args.pulses, t_s=args.ts, t_p=args.tp)
    print(f"model={model.name} eps={stim.eps} n={stim.n} "
          f"t_s={stim.t_s} t_p={stim.t_p} (T={K.T:.4f})")
    print(f"{'map':8s} {'conv':>5s} {'iters':>5s} {'theta':>9s} "
          f"{'sigma1':>10s} {'sigma2':>10s}  state")
    for kind, tol in (("state", 1e-8), ("pa-lin", 1e-3),
                      ("slow", 1e-8), ("phase", 1e-8)):
        t0 = time.perf_counter()
        fp = fixed_point(kind, stim, K, flow=flow, tol=tol)
        dt = time.perf_counter() - t0
        print(f"{kind:8s} {str(fp.converged):>5s} {fp.iterations:5d} "
              f"{fp.theta:9.4f} {fp.sigma1:10.4f} {fp.sigma2:10.4f}  "
              f"{np.array2string(fp.x, precision=5)}  ({dt:.1f}s)")


if __name__ == "__main__":
    main()
