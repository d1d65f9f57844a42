"""Link-variable discretization of magnetic Ginzburg-Landau type functionals.

All 2D models in the package share one discrete functional

    E(u) = kin * sum_e w_e |U_e u_j - u_i|^2 + sum_n m_n (c2_n |u_n|^2 + q/2 |u_n|^4)

on a structured grid, where ``U_e = exp(-i theta_e)`` and ``theta_e`` is the
line integral of the (scaled) vector potential along edge ``e``.  Because the
covariant difference only sees link phases the discrete energy is exactly
gauge invariant.

Along any search line the energy is a quartic polynomial in the step, so the
nonlinear conjugate-gradient solver below uses an exact line search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""


@dataclass
class Lattice:
    """Structured grid carrying node weights, edge weights and link phases.

    Arrays are indexed ``[i, j]`` with ``i`` along x1 and ``j`` along x2.
    ``theta_x[i, j]`` is the phase on the edge (i, j) -> (i+1, j) and
    ``theta_y[i, j]`` the phase on (i, j) -> (i, j+1).
    """

    x: np.ndarray
    y: np.ndarray
    node_w: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    theta_x: np.ndarray
    theta_y: np.ndarray
    free: np.ndarray
    ux: np.ndarray = field(init=False, repr=False)
    uy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.set_phases(self.theta_x, self.theta_y)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x.size, self.y.size)

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    def set_phases(self, theta_x: np.ndarray, theta_y: np.ndarray) -> None:
        self.theta_x = np.asarray(theta_x, dtype=float)
        self.theta_y = np.asarray(theta_y, dtype=float)
        self.ux = np.exp(-1j * self.theta_x)
        self.uy = np.exp(-1j * self.theta_y)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.node_w * f))

    def gauge_transform(self, u: np.ndarray, chi: np.ndarray) -> tuple[np.ndarray, "Lattice"]:
        """Return ``(u e^{i chi}, lattice with theta + d chi)``; energy is unchanged."""
        tx = self.theta_x + (chi[1:, :] - chi[:-1, :])
        ty = self.theta_y + (chi[:, 1:] - chi[:, :-1])
        lat = Lattice(self.x, self.y, self.node_w, self.wx, self.wy, tx, ty, self.free)
        return u * np.exp(1j * chi), lat

    def plaquette_flux(self) -> np.ndarray:
        """Counter-clockwise circulation of theta around each plaquette."""
        tx, ty = self.theta_x, self.theta_y
        return tx[:, :-1] + ty[1:, :] - tx[:, 1:] - ty[:-1, :]


def rect_lattice(x: np.ndarray, y: np.ndarray, theta_x: np.ndarray, theta_y: np.ndarray,
                 dirichlet: bool) -> Lattice:
    """Rectangle with trapezoid node weights.

    Dirichlet: boundary nodes are pinned to zero.  Neumann: all nodes are free
    and boundary edges carry half weight, which is the natural (weak) boundary
    condition for the link-phase stencil.
    """
    hx, hy = x[1] - x[0], y[1] - y[0]
    nx, ny = x.size, y.size
    fx = np.ones(nx)
    fy = np.ones(ny)
    fx[[0, -1]] = 0.5
    fy[[0, -1]] = 0.5
    node_w = hx * hy * np.outer(fx, fy)
    wx = (hy / hx) * np.outer(np.ones(nx - 1), fy)
    wy = (hx / hy) * np.outer(fx, np.ones(ny - 1))
    free = np.ones((nx, ny), dtype=bool)
    if dirichlet:
        free[[0, -1], :] = False
        free[:, [0, -1]] = False
    return Lattice(x, y, node_w, wx, wy, theta_x, theta_y, free)


# ---------------------------------------------------------------- functional


@dataclass
class GLFunctional:
    """Discrete functional ``kin*K(u) + sum m (c2|u|^2 + q/2 |u|^4)`` on a lattice."""

    lattice: Lattice
    c2: np.ndarray | float
    q: float
    kin: float = 1.0

    def apply_K(self, u: np.ndarray) -> np.ndarray:
        lat = self.lattice
        out = np.zeros_like(u)
        dx = lat.wx * (lat.ux * u[1:, :] - u[:-1, :])
        out[:-1, :] -= dx
        out[1:, :] += np.conj(lat.ux) * dx
        dy = lat.wy * (lat.uy * u[:, 1:] - u[:, :-1])
        out[:, :-1] -= dy
        out[:, 1:] += np.conj(lat.uy) * dy
        return out

    def kinetic(self, u: np.ndarray) -> float:
        lat = self.lattice
        ex = np.abs(lat.ux * u[1:, :] - u[:-1, :]) ** 2
        ey = np.abs(lat.uy * u[:, 1:] - u[:, :-1]) ** 2
        return float(np.sum(lat.wx * ex) + np.sum(lat.wy * ey))

    def potential(self, u: np.ndarray) -> float:
        m = np.abs(u) ** 2
        return float(np.sum(self.lattice.node_w * (self.c2 * m + 0.5 * self.q * m * m)))

    def energy(self, u: np.ndarray) -> float:
        return self.kin * self.kinetic(u) + self.potential(u)

    def gradient(self, u: np.ndarray, Ku: np.ndarray | None = None) -> np.ndarray:
        """``dE/dRe u + i dE/dIm u`` restricted to free nodes."""
        if Ku is None:
            Ku = self.apply_K(u)
        g = 2.0 * (self.kin * Ku + self.lattice.node_w * (self.c2 + self.q * np.abs(u) ** 2) * u)
        g[~self.lattice.free] = 0.0
        return g

    def residual(self, u: np.ndarray, Ku: np.ndarray | None = None) -> np.ndarray:
        """Strong-form Euler-Lagrange residual (gradient divided by node weight)."""
        g = self.gradient(u, Ku)
        w = self.lattice.node_w
        r = np.zeros_like(g)
        ok = w > 0
        r[ok] = g[ok] / (2.0 * w[ok])
        return r

    def residual_norm(self, u: np.ndarray, Ku: np.ndarray | None = None) -> float:
        r = self.residual(u, Ku)
        w = self.lattice.node_w * self.lattice.free
        return float(np.sqrt(np.sum(w * np.abs(r) ** 2) / max(np.sum(w), 1e-300)))

    def diag(self) -> np.ndarray:
        lat = self.lattice
        d = np.zeros(lat.shape)
        d[:-1, :] += lat.wx
        d[1:, :] += lat.wx
        d[:, :-1] += lat.wy
        d[:, 1:] += lat.wy
        return self.kin * d + lat.node_w * (np.abs(self.c2) + self.q)

    def line_poly(self, u: np.ndarray, d: np.ndarray, Ku: np.ndarray, Kd: np.ndarray) -> np.ndarray:
        """Coefficients ``[a0..a4]`` with ``E(u + s d) = sum a_k s^k``."""
        w = self.lattice.node_w
        m0 = np.abs(u) ** 2
        m1 = 2.0 * np.real(np.conj(u) * d)
        m2 = np.abs(d) ** 2
        c2, q = self.c2, self.q
        k0 = np.real(np.vdot(u, Ku))
        k1 = 2.0 * np.real(np.vdot(d, Ku))
        k2 = np.real(np.vdot(d, Kd))
        a0 = self.kin * k0 + np.sum(w * (c2 * m0 + 0.5 * q * m0 * m0))
        a1 = self.kin * k1 + np.sum(w * (c2 * m1 + q * m0 * m1))
        a2 = self.kin * k2 + np.sum(w * (c2 * m2 + 0.5 * q * (m1 * m1 + 2.0 * m0 * m2)))
        a3 = np.sum(w * q * m1 * m2)
        a4 = np.sum(w * 0.5 * q * m2 * m2)
        return np.array([a0, a1, a2, a3, a4], dtype=float)


def quartic_argmin(a: np.ndarray) -> float:
    """Global minimizer over s of ``sum a_k s^k`` (a[4] >= 0), 0 if unbounded/flat."""
    a0, a1, a2, a3, a4 = a
    scale = max(abs(a1), abs(a2), abs(a3), abs(a4), 1e-300)
    if a4 <= 1e-14 * scale and abs(a3) <= 1e-14 * scale:
        return -a1 / (2.0 * a2) if a2 > 0 else 0.0
    roots = np.roots([4 * a4, 3 * a3, 2 * a2, a1])
    real = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
    if real.size == 0:
        real = roots.real
    vals = np.polyval(a[::-1], real)
    return float(real[np.argmin(vals)])


@dataclass
class DescentResult:
    u: np.ndarray
    energy: float
    residual: float
    iterations: int
    converged: bool
    history: list[tuple[int, float, float]]
    stalled: bool = False


def nlcg(fun: GLFunctional, u0: np.ndarray, *, tol_res: float = 1e-6, tol_energy: float = 1e-10,
         res_scale: float = 1.0, max_iter: int = 20000, energy_floor: float = 1e-14,
         window: int = 100, restart: int = 500, check_every: int = 5,
         strict: bool = False) -> DescentResult:
    """Jacobi-preconditioned Polak-Ribiere+ conjugate gradients with exact line search.

    ``converged``: normalized residual ``residual_norm/res_scale < tol_res`` and
    the energy decrease over the last ``window`` iterations is below
    ``tol_energy`` relative (or ``|E| < energy_floor``, the collapsed case).
    ``stalled``: the energy has stagnated but the residual is still above
    ``tol_res`` (slow soft modes such as vortex lattices); the state is returned
    and ``strict`` only raises when neither holds.
    """
    lat = fun.lattice
    u = np.where(lat.free, u0, 0.0).astype(complex)
    P = fun.diag()
    P[P <= 0] = 1.0
    Ku = fun.apply_K(u)
    g = fun.gradient(u, Ku)
    z = g / P
    d = -z
    gz_old = np.real(np.vdot(g, z))
    e = fun.energy(u)
    e_mark = e
    history: list[tuple[int, float, float]] = []
    converged = stalled = False
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        if gz_old <= 0.0:
            converged = True
            break
        Kd = fun.apply_K(d)
        coef = fun.line_poly(u, d, Ku, Kd)
        if coef[1] >= 0.0:
            # lost descent: restart along the preconditioned gradient
            d = -z
            Kd = fun.apply_K(d)
            coef = fun.line_poly(u, d, Ku, Kd)
        s = quartic_argmin(coef)
        e = float(np.polyval(coef[::-1], s))
        u += s * d
        Ku += s * Kd
        if it % 100 == 0:
            Ku = fun.apply_K(u)
            e = fun.energy(u)
        z_old = z
        g = fun.gradient(u, Ku)
        z = g / P
        gz = np.real(np.vdot(g, z))
        if it % check_every == 0:
            res = fun.residual_norm(u, Ku) / res_scale
            if res < tol_res and abs(e) < energy_floor:
                converged = True
                break
        if it % window == 0:
            de = (e_mark - e) / max(abs(e), 1e-300)
            e_mark = e
            history.append((it, e, res))
            if de < tol_energy:
                if res < tol_res:
                    converged = True
                    break
                stalled = True
                break
        beta = 0.0
        if it % restart:
            beta = max(0.0, (gz - np.real(np.vdot(g, z_old))) / gz_old)
        d = -z + beta * d
        gz_old = gz
    u = polish(fun, u)
    res = fun.residual_norm(u) / res_scale
    e = fun.energy(u)
    history.append((it, e, res))
    if strict and not (converged or stalled):
        raise ConvergenceError(f"nlcg: no convergence after {max_iter} iterations (res={res:.3e})")
    return DescentResult(u, e, res, it, converged, history, stalled)


def polish(fun: GLFunctional, u: np.ndarray) -> np.ndarray:
    """Clip to the unit disc, then optimize the overall amplitude.

    The pointwise projection onto ``|u| <= 1`` commutes with phases and is
    non-expansive, so it never raises the energy when ``c2 = -q`` style
    potentials have their minimum at ``|u| <= 1``.  The amplitude search makes
    ``<u, grad E(u)> = 0`` hold to rounding, i.e. the virial identity.
    """
    mod = np.abs(u)
    clipped = np.where(mod > 1.0, u / np.maximum(mod, 1e-300), u)
    if fun.energy(clipped) <= fun.energy(u):
        u = clipped
    Ku = fun.apply_K(u)
    coef = fun.line_poly(u, u, Ku, Ku)
    s = quartic_argmin(coef)
    if np.polyval(coef[::-1], s) < coef[0]:
        u = abs(1.0 + s) * u  # a sign flip is a global phase
    return u
