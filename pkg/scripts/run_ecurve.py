"""Tabulate E(L) on a log-spaced L grid and write results/ecurve.csv."""

import argparse
from pathlib import Path

import numpy as np

from glzero import strip
from glzero.io import TABLE_SCHEMAS, write_table


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--L-min", type=float, default=0.05)
    ap.add_argument("--L-max", type=float, default=2.2)
    ap.add_argument("--samples", type=int, default=12)
    ap.add_argument("--R", default="4,8,16")
    ap.add_argument("--out", default="results/ecurve.csv")
    args = ap.parse_args()
    R = [float(r) for r in args.R.split(",")]
    rows = []
    for L in np.geomspace(args.L_min, args.L_max, args.samples):
        p = strip.estimate_E(float(L), R)
        rows.append(p.to_dict())
        print(f"L={L:.4f} E={p.E:.6f} err={p.err:.1e} p={p.exponent:.2f}", flush=True)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_table(args.out, TABLE_SCHEMAS["ecurve"] + ["exponent"], rows)


if __name__ == "__main__":
    main()
