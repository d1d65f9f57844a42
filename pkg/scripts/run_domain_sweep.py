"""kappa sweep on the unit disc with B0 = x1, compared with the leading-order formulas.

Needs the tables from run_ecurve.py and run_gtable.py.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from glzero import asym
from glzero import domain as dm
from glzero.io import read_table


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--kappa", default="8,12,16")
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--ecurve", default="results/ecurve.csv")
    ap.add_argument("--gtable", default="results/gtable.csv")
    ap.add_argument("--out", default="results/domain_sweep.json")
    args = ap.parse_args()
    _, er = read_table(args.ecurve)
    _, gr = read_table(args.gtable)
    ec = asym.ECurve(np.array([r["L"] for r in er]), np.array([r["E"] for r in er]))
    gc = asym.GCurve(np.array([r["b"] for r in gr]), np.array([r["g"] for r in gr]))
    out = []
    for k in (float(v) for v in args.kappa.split(",")):
        prob = dm.build_problem(dm.Geometry.disc(1.0), "x1", k, args.sigma * k * k)
        fixed = dm.minimize_gl(prob, "fixed")
        full = dm.minimize_gl(prob, "full")
        rep = asym.verify(prob, fixed, ec, gc)
        mag = dm.magnetic_energy(full, prob).value
        row = rep.to_dict() | {"E_full": full.energy_total, "magnetic_scaled": mag * prob.H / k ** 3}
        out.append(row)
        print(json.dumps(row), flush=True)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
