#!/usr/bin/env python3
"""Sample the 2D invariants of a configured space over a position/direction grid.

Writes one CSV row per (x, theta) with F, det g, I, J, K, ready for external
plotting.  Example:

    python scripts/invariant_map.py configs/bimetric.json --grid 12 --directions 24 --out invariants.csv
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from multifinsler.config import load_config
from multifinsler.dim2 import invariant_I, invariants_JK
from multifinsler.finsler import TangentSample, finsler_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--grid", type=int, default=12)
    ap.add_argument("--directions", type=int, default=24)
    ap.add_argument("--out", default="invariants.csv")
    args = ap.parse_args()

    cfg = load_config(args.config)
    if cfg.dimension != 2:
        ap.error("invariant maps are 2D only")
    space = cfg.build_space()
    lo = [b[0] for b in cfg.sampling.box]
    hi = [b[1] for b in cfg.sampling.box]
    xs = np.linspace(lo[0], hi[0], args.grid)
    ys = np.linspace(lo[1], hi[1], args.grid)
    thetas = np.linspace(0.0, 2.0 * math.pi, args.directions, endpoint=False)

    with open(args.out, "w") as fh:
        fh.write("x1,x2,theta,F,det_g,I,J,K\n")
        for x1 in xs:
            for x2 in ys:
                for th in thetas:
                    s = TangentSample([x1, x2], [math.cos(th), math.sin(th)])
                    st = finsler_state(space, s)
                    i_val = invariant_I(space, s, "compact")
                    j_val, k_val = invariants_JK(space, s)
                    row = [x1, x2, th, st.F, st.det_g, i_val, j_val, k_val]
                    fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    print(f"wrote {args.grid * args.grid * args.directions} rows to {args.out}")


if __name__ == "__main__":
    main()
