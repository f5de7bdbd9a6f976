#!/usr/bin/env python3
"""Edge-state survival threshold versus gain/loss strength and width.

For each ribbon width, sweeps the gain/loss strength and records the
fraction of topological edge states that stay dissipation-free, then
reports the largest strength at which at least five percent survive.
The widest preset matches the reference lattice scale.
"""

import argparse
import csv
import math
import sys

import numpy as np

from dicehaldane import ModelParams, edge_state_fraction


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--widths", type=int, nargs="+", default=[12, 36, 58])
    ap.add_argument("--delta-max", type=float, default=1.6)
    ap.add_argument("--delta-step", type=float, default=0.1)
    ap.add_argument("--n-k", type=int, default=81)
    ap.add_argument("--output", default="edge_state_threshold.csv")
    args = ap.parse_args(argv)

    p = ModelParams(t2=0.03, phi=math.pi / 2, m=0.06)
    deltas = np.arange(args.delta_step, args.delta_max + 1e-9,
                       args.delta_step)
    rows = []
    for ny in args.widths:
        critical = 0.0
        for delta in deltas:
            f = edge_state_fraction(p.replace(delta=float(delta)), ny,
                                    n_k=args.n_k)
            rows.append((ny, float(delta), f))
            if f >= 0.05:
                critical = float(delta)
            else:
                break
        print(f"ny={ny:3d}  critical delta={critical:.2f}", flush=True)

    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("ny", "delta", "edge_state_fraction"))
        writer.writerows(rows)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
