"""SVG figures from the CSV tables; output bytes depend only on the input table."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import TABLE_SCHEMAS, detect_schema  # noqa: E402

LAMBDA0 = 0.5698


def _col(rows, name):
    return np.array([float(r[name]) for r in rows])


def render(header: list[str], rows: list[dict], kind: str | None = None) -> str:
    found = detect_schema(header)
    kind = kind or found
    if kind != found:
        raise ValueError(f"table has the {found!r} schema, not {kind!r}")
    plt.rcParams["svg.hashsalt"] = "glzero"
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    if kind == "ecurve":
        ax.plot(_col(rows, "L"), _col(rows, "E"), "o-")
        ax.axvline(LAMBDA0 ** -1.5, ls="--", color="gray", label=r"$\lambda_0^{-3/2}$")
        ax.set_xlabel("L")
        ax.set_ylabel("E(L)")
        ax.set_xscale("log")
        ax.legend()
    elif kind == "gtable":
        ax.plot(_col(rows, "b"), _col(rows, "g"), "o-")
        ax.axhline(-0.5, ls="--", color="gray")
        ax.axvline(1.0, ls="--", color="gray")
        ax.set_xlabel("b")
        ax.set_ylabel("g(b)")
    elif kind == "decay":
        mid = 0.5 * (_col(rows, "t_lo") + _col(rows, "t_hi"))
        mass = _col(rows, "mass")
        ok = mass > 0
        ax.semilogy(mid[ok], mass[ok], "o-")
        ax.set_xlabel("distance to zero set [kappa/H]")
        ax.set_ylabel("mass of |psi|^2 per bin")
    elif kind == "verify":
        ax.plot(_col(rows, "kappa"), _col(rows, "relative_gap"), "o-")
        ax.set_xlabel("kappa")
        ax.set_ylabel("|E - C0| H / kappa^3")
    elif kind == "curve":
        ax.plot(_col(rows, "tau"), _col(rows, "lambda"), "-")
        ax.set_xlabel("tau")
        ax.set_ylabel("lambda(tau)")
    elif kind == "e1d":
        ax.plot(_col(rows, "b"), _col(rows, "e1d"), "o-")
        ax.set_xlabel("b")
        ax.set_ylabel("E1D(b)")
    else:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {sorted(TABLE_SCHEMAS)}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()
