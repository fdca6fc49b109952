#!/usr/bin/env python3
"""Globalize an isochron, a slow-manifold leaf, and an isostable surface
for one model and write the point clouds to text files.
"""

import argparse
from pathlib import Path

from phamp.globalize import (GlobalizationConfig, grow_isochron,
                             grow_isostable, grow_slow_leaf)
from phamp.integrate import Flow
from phamp.models import get_model
from phamp.solver import AccuracyDomain, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="rt")
    ap.add_argument("--theta", type=float, default=0.0)
    ap.add_argument("--level", type=float, default=0.4)
    ap.add_argument("--max-depth", type=int, default=5)
    ap.add_argument("--max-points", type=int, default=2000)
    ap.add_argument("--out", default="manifolds")
    args = ap.parse_args()

    model = get_model(args.model)
    flow = Flow(model)
    K = solve(model, flow=flow)
    domain = AccuracyDomain(K)
    cfg = GlobalizationConfig(max_points=args.max_points,
                              max_depth=args.max_depth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for kind, atlas in (
            ("slow_leaf", grow_slow_leaf(K, domain, args.theta, cfg, flow)),
            ("isochron", grow_isochron(K, domain, args.theta, cfg=cfg,
                                       flow=flow)),
            ("isostable", grow_isostable(K, domain, 2, args.level, cfg,
                                         flow=flow))):
        path = out / f"{model.name}_{kind}.txt"
        atlas.save(path)
        msg = f"{kind}: {len(atlas.points)} points -> {path}"
        if atlas.diagnostics:
            msg += f" ({len(atlas.diagnostics)} truncations)"
        print(msg)


if __name__ == "__main__":
    main()
