"""Lowest eigenpair of the Montgomery family P(tau) = -d^2/dt^2 + (t^2/2 + tau)^2."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TruncationError(ValueError):
    """The truncated interval is too short for the requested spectral window."""


class BracketError(RuntimeError):
    """No interior minimum was seen on the coarse tau scan."""


@dataclass(frozen=True)
class Grid1D:
    T: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("Grid1D needs n >= 3")
        if not self.T > 0:
            raise ValueError("Grid1D needs T > 0")

    @property
    def h(self) -> float:
        return 2.0 * self.T / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.T, self.T, self.n)

    def refined(self) -> "Grid1D":
        return Grid1D(self.T, 2 * self.n - 1)

    @classmethod
    def with_spacing(cls, T: float, h: float) -> "Grid1D":
        return cls(T, int(round(2 * T / h)) + 1)


def default_truncation(tau: float, lambda_est: float = 1.0) -> float:
    return max(8.0, 2.0 * math.sqrt(2.0 * (lambda_est + abs(tau))) + 4.0)


@dataclass
class SpectralPoint:
    tau: float
    lam: float
    eigenfunction: np.ndarray = field(repr=False)


@dataclass
class MontgomeryMinimum:
    tau0: float
    lambda0: float
    phi0: np.ndarray = field(repr=False)
    grid: Grid1D
    extrapolated: bool = False
    err: float = float("nan")

    def to_dict(self) -> dict:
        return {"tau0": self.tau0, "lambda0": self.lambda0, "err": self.err,
                "extrapolated": self.extrapolated, "grid": {"T": self.grid.T, "n": self.grid.n}}


def potential(t: np.ndarray, tau: float) -> np.ndarray:
    return (0.5 * t * t + tau) ** 2


def assemble_operator(tau: float, grid: Grid1D, window: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the central-difference P(tau).

    Values outside the grid are zero (Dirichlet).  When ``window`` is given the
    potential at the truncation boundary must exceed it, otherwise the
    truncation would cut into the part of the spectrum being asked for.
    """
    t = grid.nodes
    h = grid.h
    if window is not None:
        edge = 0.5 * grid.T ** 2 + tau
        if edge <= 0 or edge ** 2 <= window:
            raise TruncationError(
                f"T={grid.T} too small for tau={tau}: boundary potential {max(edge, 0) ** 2:.3g} <= window {window}")
    diag = 2.0 / h ** 2 + potential(t, tau)
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    return diag, off


def lowest_eigenpair(op: tuple[np.ndarray, np.ndarray], h: float) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and its nonnegative eigenvector, normalized with weight h.

    LAPACK's stebz/stein pair is Sturm-sequence bisection followed by inverse
    iteration.
    """
    diag, off = op
    try:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), lapack_driver="stebz")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise RuntimeError(f"tridiagonal eigensolver failed: {exc}") from exc
    vec = v[:, 0]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    vec = vec / math.sqrt(h * float(np.dot(vec, vec)))
    return float(w[0]), vec


def eigenpair(tau: float, grid: Grid1D) -> SpectralPoint:
    lam, vec = lowest_eigenpair(assemble_operator(tau, grid), grid.h)
    return SpectralPoint(tau, lam, vec)


def lam(tau: float, grid: Grid1D) -> float:
    return eigenpair(tau, grid).lam


def lambda_curve(tau_lo: float, tau_hi: float, samples: int, grid: Grid1D) -> list[SpectralPoint]:
    if not tau_lo < tau_hi:
        raise ValueError("tau_lo must be < tau_hi")
    if samples < 2:
        raise ValueError("need at least two samples")
    out = []
    for tau in np.linspace(tau_lo, tau_hi, samples):
        try:
            out.append(eigenpair(float(tau), grid))
        except RuntimeError as exc:
            raise RuntimeError(f"eigensolve failed at tau={tau}: {exc}") from exc
    return out


def golden_section(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on [a, b]; returns ``(x, f(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def scan_bracket(f, lo: float, hi: float, step: float) -> tuple[float, float]:
    taus = np.arange(lo, hi + 0.5 * step, step)
    vals = np.array([f(t) for t in taus])
    k = int(np.argmin(vals))
    if k == 0 or k == taus.size - 1:
        raise BracketError(f"no interior minimum on [{lo}, {hi}] (argmin at edge tau={taus[k]})")
    return float(taus[k - 1]), float(taus[k + 1])


def minimize_lambda(grid: Grid1D | None = None, tol: float = 1e-6, scan: tuple[float, float] = (-5.0, 2.0),
                    step: float = 0.25) -> MontgomeryMinimum:
    """Locate (tau0, lambda0) on one grid: coarse scan, then golden section."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = grid or Grid1D(12.0, 4801)
    f = lambda tau: lam(tau, grid)  # noqa: E731
    a, b = scan_bracket(f, scan[0], scan[1], step)
    tau0, lam0 = golden_section(f, a, b, tol)
    return MontgomeryMinimum(tau0, lam0, eigenpair(tau0, grid).eigenfunction, grid)


def richardson(coarse: float, fine: float) -> tuple[float, float]:
    """h^2 extrapolation from grids h and h/2; returns ``(value, |fine - value|)``."""
    extr = (4.0 * fine - coarse) / 3.0
    return extr, abs(fine - extr)


def minimize_lambda_extrapolated(grid: Grid1D | None = None, tol: float = 1e-6) -> MontgomeryMinimum:
    grid = grid or Grid1D(12.0, 4801)
    m1 = minimize_lambda(grid, tol)
    m2 = minimize_lambda(grid.refined(), tol)
    lam0, err = richardson(m1.lambda0, m2.lambda0)
    tau0, terr = richardson(m1.tau0, m2.tau0)
    return MontgomeryMinimum(tau0, lam0, m2.phi0, m2.grid, extrapolated=True, err=max(err, terr, tol))


def lambda_extrapolated(tau: float, grid: Grid1D) -> tuple[float, float]:
    return richardson(lam(tau, grid), lam(tau, grid.refined()))


_CACHE: dict[tuple, MontgomeryMinimum] = {}


def reference_minimum(h: float = 0.005, T: float = 12.0) -> MontgomeryMinimum:
    """Cached minimum on a given spacing, reused by the downstream models."""
    key = (round(h, 12), T)
    if key not in _CACHE:
        _CACHE[key] = minimize_lambda(Grid1D.with_spacing(T, h), tol=1e-8)
    return _CACHE[key]
