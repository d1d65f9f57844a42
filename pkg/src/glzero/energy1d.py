"""One-dimensional reduced energy

    E(f) = int |f'|^2 + (t^2/2 + alpha)^2 f^2 - b f^2 + (b/2) f^4 dt

and its minimization over f (fixed alpha) and over alpha.

The kinetic and potential part is the quadratic form of the Montgomery matrix
on the same grid (differences on edges, zero outside the grid), so for a small
multiple of the discrete eigenfunction the energy is exactly
``eps^2 (lambda_h(alpha) - b) + O(eps^4)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from . import montgomery
from .lattice import ConvergenceError, quartic_argmin
from .montgomery import Grid1D

log = logging.getLogger(__name__)

DEFAULT_GRID = Grid1D(12.0, 4801)


def _check(f: np.ndarray, grid: Grid1D) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"f has shape {f.shape}, grid has {grid.n} nodes")
    if not np.all(np.isfinite(f)):
        raise ValueError("f has non-finite entries")
    return f


def apply_operator(f: np.ndarray, alpha: float, grid: Grid1D) -> np.ndarray:
    diag, off = montgomery.assemble_operator(alpha, grid)
    out = diag * f
    out[:-1] += off * f[1:]
    out[1:] += off * f[:-1]
    return out


def energy_1d(f: np.ndarray, alpha: float, b: float, grid: Grid1D) -> float:
    if not b > 0:
        raise ValueError("b must be positive")
    f = _check(f, grid)
    h = grid.h
    return float(h * (f @ apply_operator(f, alpha, grid) - b * f @ f + 0.5 * b * np.sum(f ** 4)))


def gradient_1d(f: np.ndarray, alpha: float, b: float, grid: Grid1D) -> np.ndarray:
    f = _check(f, grid)
    return 2.0 * grid.h * (apply_operator(f, alpha, grid) - b * f + b * f ** 3)


def el_residual(f: np.ndarray, alpha: float, b: float, grid: Grid1D) -> float:
    """RMS (weight h) of ``-f'' + (t^2/2+alpha)^2 f - b f + b f^3``."""
    r = apply_operator(f, alpha, grid) - b * f + b * f ** 3
    return float(math.sqrt(grid.h * np.sum(r * r)))


@dataclass
class Minimizer1D:
    alpha: float
    b: float
    f: np.ndarray = field(repr=False)
    energy: float
    el_residual: float
    grid: Grid1D
    trivial: bool = False
    iterations: int = 0


def _line_poly(f, d, alpha, b, grid) -> np.ndarray:
    h = grid.h
    Af, Ad = apply_operator(f, alpha, grid), apply_operator(d, alpha, grid)
    m0, m1, m2 = f * f, 2 * f * d, d * d
    a0 = f @ Af - b * m0.sum() + 0.5 * b * np.sum(m0 * m0)
    a1 = 2 * d @ Af - b * m1.sum() + b * np.sum(m0 * m1)
    a2 = d @ Ad - b * m2.sum() + 0.5 * b * np.sum(m1 * m1 + 2 * m0 * m2)
    a3 = b * np.sum(m1 * m2)
    a4 = 0.5 * b * np.sum(m2 * m2)
    return h * np.array([a0, a1, a2, a3, a4])


def minimize_1d(alpha: float, b: float, grid: Grid1D | None = None, tol: float = 1e-10,
                max_iter: int = 200) -> Minimizer1D:
    """Positive minimizer of the 1D energy at fixed alpha.

    Damped Newton on the Euler-Lagrange equation with an exact (quartic) line
    search; when the Newton step is not a descent direction the step falls
    back to the gradient preconditioned by the positive operator P + b.  The
    result is replaced by |f|, which never raises the energy.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    grid = grid or DEFAULT_GRID
    sp = montgomery.eigenpair(alpha, grid)
    zero = np.zeros(grid.n)
    if sp.lam >= b:
        return Minimizer1D(alpha, b, zero, 0.0, 0.0, grid, trivial=True)
    phi = sp.eigenfunction
    nu = grid.h * np.sum(phi ** 4)
    f = math.sqrt((b - sp.lam) / (b * nu)) * phi  # best multiple of phi
    diag, off = montgomery.assemble_operator(alpha, grid)
    band_off = np.concatenate([[0.0], off])
    prec = np.vstack([band_off, diag + b, np.concatenate([off, [0.0]])])
    it = 0
    for it in range(1, max_iter + 1):
        r = apply_operator(f, alpha, grid) - b * f + b * f ** 3
        if math.sqrt(grid.h * np.sum(r * r)) < tol:
            break
        jac = np.vstack([band_off, diag - b + 3 * b * f * f, np.concatenate([off, [0.0]])])
        try:
            d = -solve_banded((1, 1), jac, r)
        except np.linalg.LinAlgError:
            d = zero
        if not np.all(np.isfinite(d)) or d @ r >= 0:
            d = -solve_banded((1, 1), prec, r)
        s = quartic_argmin(_line_poly(f, d, alpha, b, grid))
        if s == 0.0:
            break
        f = f + s * d
    else:
        raise ConvergenceError(f"minimize_1d(alpha={alpha}, b={b}): residual above {tol} after {max_iter} steps")
    f = np.abs(f)
    return Minimizer1D(alpha, b, f, energy_1d(f, alpha, b, grid), el_residual(f, alpha, b, grid),
                       grid, iterations=it)


def b_energy(alpha: float, b: float, grid: Grid1D | None = None) -> float:
    return minimize_1d(alpha, b, grid).energy


def fh_integral(m: Minimizer1D) -> float:
    """``int (t^2/2 + alpha) f^2 dt``, half the alpha-derivative of the energy at the minimizer."""
    t = m.grid.nodes
    return float(m.grid.h * np.sum((0.5 * t * t + m.alpha) * m.f ** 2))


def z_interval(b: float, grid: Grid1D | None = None, step: float = 0.5, max_reach: float = 50.0,
               xtol: float = 1e-10) -> tuple[float, float]:
    """The two solutions ``z1 < tau0 < z2`` of ``lambda(z) = b``."""
    grid = grid or DEFAULT_GRID
    mm = montgomery.minimize_lambda(grid, tol=1e-8)
    if not b > mm.lambda0:
        raise ValueError(f"b={b} must exceed lambda0={mm.lambda0:.6f}")

    def g(z):
        return montgomery.lam(z, grid) - b

    ends = []
    for sign in (-1.0, 1.0):
        lo = mm.tau0
        hi = lo + sign * step
        while g(hi) < 0:
            lo = hi
            hi += sign * step
            if abs(hi - mm.tau0) > max_reach:
                raise ValueError(f"lambda never reaches b={b} within {max_reach} of tau0; extend the scan")
        ends.append(brentq(g, min(lo, hi), max(lo, hi), xtol=xtol))
    return ends[0], ends[1]


@dataclass
class AlphaMinimum:
    b: float
    alpha0: float
    e1d: float
    fh_residual: float
    z1: float
    z2: float
    defined: bool = True
    minimizer: Minimizer1D | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        nan = float("nan")
        return {"b": self.b, "alpha0": self.alpha0 if self.defined else nan, "e1d": self.e1d,
                "fh_residual": self.fh_residual if self.defined else nan,
                "z1": self.z1 if self.defined else nan, "z2": self.z2 if self.defined else nan}


def minimize_over_alpha(b: float, tol: float = 1e-8, grid: Grid1D | None = None,
                        scan_points: int = 9) -> AlphaMinimum:
    """alpha0 and E1D(b) = min over alpha of the 1D ground energy.

    Coarse scan of (z1, z2), then golden section to ``tol`` in alpha.  For
    b <= lambda0 every alpha gives the zero minimizer; the result then carries
    ``defined=False``.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    grid = grid or DEFAULT_GRID
    mm = montgomery.minimize_lambda(grid, tol=1e-8)
    nan = float("nan")
    if b <= mm.lambda0:
        return AlphaMinimum(b, nan, 0.0, 0.0, nan, nan, defined=False)
    z1, z2 = z_interval(b, grid)
    cache: dict[float, Minimizer1D] = {}

    def f(a):
        if a not in cache:
            cache[a] = minimize_1d(a, b, grid)
        return cache[a].energy

    alphas = np.linspace(z1, z2, scan_points)
    vals = np.array([f(float(a)) for a in alphas])
    if vals.max() - vals.min() < 1e-13:
        log.warning("flat alpha landscape at b=%g (variation %.2e)", b, vals.max() - vals.min())
    k = int(np.argmin(vals))
    lo, hi = float(alphas[max(k - 1, 0)]), float(alphas[min(k + 1, scan_points - 1)])
    a0, e0 = montgomery.golden_section(f, lo, hi, tol)
    m = cache[a0]
    return AlphaMinimum(b, a0, e0, fh_integral(m), z1, z2, True, m)


def e1d(b: float, grid: Grid1D | None = None, tol: float = 1e-8) -> float:
    return minimize_over_alpha(b, tol, grid).e1d
