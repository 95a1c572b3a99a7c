#!/usr/bin/env python3
"""Export the beam patterns of the reference geometry as a CSV.

Two columns of normalized gain in dB over broadside angle: the full
sparse aperture (both modules coherently) and a single 16-element
module, for eyeballing the grating comb against the module envelope.
"""

import argparse

import numpy as np

from elaa_doa.scenarios import paper_array
from elaa_doa.signal_model import array_factor
from elaa_doa.ss_music import default_grid


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step-deg", type=float, default=0.01, help="angle grid step")
    ap.add_argument("--out", default="array_factor.csv")
    args = ap.parse_args()

    cfg = paper_array()
    grid = default_grid(args.step_deg)
    elaa = array_factor(cfg, grid, aperture="elaa")
    ula = array_factor(cfg, grid, aperture="ula")
    with open(args.out, "w") as fh:
        fh.write("angle_deg,elaa_db,ula_db\n")
        for ang, e, u in zip(np.rad2deg(grid), elaa, ula):
            fh.write(f"{float(ang)!r},{float(e)!r},{float(u)!r}\n")
    print(f"wrote {args.out} ({len(grid)} angles)")


if __name__ == "__main__":
    main()
