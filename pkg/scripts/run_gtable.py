"""Tabulate g(b) and write results/gtable.csv."""

import argparse
from pathlib import Path

from glzero import cell
from glzero.io import TABLE_SCHEMAS, write_table


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--b", default="0.05,0.1,0.25,0.5,0.75,0.9,1.2")
    ap.add_argument("--r", default="8,16,32")
    ap.add_argument("--out", default="results/gtable.csv")
    args = ap.parse_args()
    r_list = [float(r) for r in args.r.split(",")]
    rows = []
    for b in (float(v) for v in args.b.split(",")):
        row = cell.estimate_g(b, r_list)
        rows.append({"b": b, "g": row.g_est, "envelope": row.envelope, "r_max": r_list[-1]})
        print(f"b={b:g} g={row.g_est:.4f} (fit {row.g_fit:.4f}) e_D={row.e_D} e_N={row.e_N}", flush=True)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_table(args.out, TABLE_SCHEMAS["gtable"], rows)


if __name__ == "__main__":
    main()
