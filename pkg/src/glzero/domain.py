"""Full Ginzburg-Landau functional on a planar domain with a sign-changing field.

    e(psi, A) = int_Omega |(grad - i kH A) psi|^2 - k^2 |psi|^2 + k^2/2 |psi|^4
                + (kH)^2 int_Omega |curl A - B0|^2

with k = kappa.  Omega is a rectangle or a disc, meshed by a structured grid
whose node, edge and plaquette weights are the areas of the corresponding
control regions inside Omega (cut cells at a curved boundary).  The Neumann
condition is then the natural one.

Vector potentials live on edges as phases.  The reference potential F comes
from a stream function solved on the dual grid, so the circulation of F
around every plaquette is exactly B0 at the plaquette centre times its area.
In full mode the unknown correction ``A - F`` is stored as edge phases
``vartheta = kH * int_e (A - F) . dl``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.fft import dstn, idstn
from scipy.optimize import minimize
from skimage.measure import find_contours

from .expr import Polynomial, parse
from .lattice import ConvergenceError, GLFunctional, Lattice, nlcg

log = logging.getLogger(__name__)

Region = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ProblemError(ValueError):
    """The field profile or geometry violates the model assumptions."""


# ------------------------------------------------------------------ geometry


@dataclass(frozen=True)
class Geometry:
    kind: str  # "disc" | "rectangle"
    params: tuple[float, ...]  # disc: (cx, cy, radius); rectangle: (x0, x1, y0, y1)

    def __post_init__(self) -> None:
        if self.kind == "disc":
            if len(self.params) != 3 or not self.params[2] > 0:
                raise ProblemError("disc needs (cx, cy, radius > 0)")
        elif self.kind == "rectangle":
            if len(self.params) != 4 or not (self.params[1] > self.params[0] and self.params[3] > self.params[2]):
                raise ProblemError("rectangle needs (x0 < x1, y0 < y1)")
        else:
            raise ProblemError(f"unknown geometry {self.kind!r}")

    @classmethod
    def disc(cls, radius: float = 1.0, center=(0.0, 0.0)) -> "Geometry":
        return cls("disc", (float(center[0]), float(center[1]), float(radius)))

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float) -> "Geometry":
        return cls("rectangle", (float(x0), float(x1), float(y0), float(y1)))

    @property
    def box(self) -> tuple[float, float, float, float]:
        if self.kind == "disc":
            cx, cy, r = self.params
            return cx - r, cx + r, cy - r, cy + r
        return self.params  # type: ignore[return-value]

    def inside(self, X, Y) -> np.ndarray:
        if self.kind == "disc":
            cx, cy, r = self.params
            return (X - cx) ** 2 + (Y - cy) ** 2 < r * r
        x0, x1, y0, y1 = self.params
        return (X > x0) & (X < x1) & (Y > y0) & (Y < y1)

    def boundary_distance(self, X, Y) -> np.ndarray:
        if self.kind == "disc":
            cx, cy, r = self.params
            return np.abs(np.hypot(X - cx, Y - cy) - r)
        x0, x1, y0, y1 = self.params
        return np.minimum.reduce([np.abs(X - x0), np.abs(X - x1), np.abs(Y - y0), np.abs(Y - y1)])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Geometry":
        return cls(d["kind"], tuple(float(p) for p in d["params"]))


def _fractions(region: Region, xs: np.ndarray, ys: np.ndarray, wx: float, wy: float, sub: int) -> np.ndarray:
    """Fraction of each box ``[x - wx/2, x + wx/2] x [y - wy/2, y + wy/2]`` inside ``region``.

    ``xs``, ``ys`` are box centres (1D, tensor-product); midpoint subsampling
    with ``sub x sub`` points per box.
    """
    o = (np.arange(sub) + 0.5) / sub - 0.5
    out = np.zeros((xs.size, ys.size))
    for a in o:
        for b in o:
            X, Y = np.meshgrid(xs + a * wx, ys + b * wy, indexing="ij")
            out += region(X, Y)
    return out / sub ** 2


@dataclass
class Weights:
    node: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    plaq: np.ndarray


def region_weights(region: Region, x: np.ndarray, y: np.ndarray, sub: int = 8) -> Weights:
    """Areas of node, edge and plaquette control regions inside ``region``.

    Edge weights are (area of the edge's control box inside) / length^2, which
    gives the usual h_perp / h on interior edges and half that on a straight
    boundary.
    """
    hx, hy = x[1] - x[0], y[1] - y[0]
    xm, ym = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
    node = hx * hy * _fractions(region, x, y, hx, hy, sub)
    wx = (hy / hx) * _fractions(region, xm, y, hx, hy, sub)
    wy = (hx / hy) * _fractions(region, x, ym, hx, hy, sub)
    plaq = hx * hy * _fractions(region, xm, ym, hx, hy, sub)
    return Weights(node, wx, wy, plaq)


# -------------------------------------------------------- reference potential


def stream_function_phases(B0: Callable, x: np.ndarray, y: np.ndarray, pad: int = 4) -> tuple[np.ndarray, np.ndarray, float]:
    """Edge line integrals of F = (-d2 phi, d1 phi) with Delta_h phi = B0 on the dual grid.

    The dual grid (plaquette centres plus one ring outside the node grid,
    padded by ``pad`` cells with phi = 0 beyond) is solved exactly with a
    type-I sine transform.  Returns ``(theta_x, theta_y, max curl residual)``.
    """
    hx, hy = x[1] - x[0], y[1] - y[0]
    nx, ny = x.size, y.size
    # dual nodes x_{i-1/2}, i = -pad .. nx + pad  (interior of the zero box)
    xd = x[0] - 0.5 * hx + hx * np.arange(-pad, nx + 1 + pad)
    yd = y[0] - 0.5 * hy + hy * np.arange(-pad, ny + 1 + pad)
    XD, YD = np.meshgrid(xd, yd, indexing="ij")
    rhs = np.asarray(B0(XD, YD), float)
    mx, my = xd.size, yd.size
    kx = np.arange(1, mx + 1)
    ky = np.arange(1, my + 1)
    lam_x = (2.0 * np.cos(np.pi * kx / (mx + 1)) - 2.0) / hx ** 2
    lam_y = (2.0 * np.cos(np.pi * ky / (my + 1)) - 2.0) / hy ** 2
    phi = idstn(dstn(rhs, type=1) / (lam_x[:, None] + lam_y[None, :]), type=1)
    core = phi[pad:pad + nx + 1, pad:pad + ny + 1]  # core[i, j] = phi(x_i - h/2, y_j - h/2)
    # edge (i,j)->(i+1,j): -(phi(i+1/2, j+1/2) - phi(i+1/2, j-1/2)) hx / hy
    theta_x = -(core[1:nx, 1:] - core[1:nx, :-1]) * hx / hy
    # edge (i,j)->(i,j+1): (phi(i+1/2, j+1/2) - phi(i-1/2, j+1/2)) hy / hx
    theta_y = (core[1:, 1:ny] - core[:-1, 1:ny]) * hy / hx
    circ = theta_x[:, :-1] + theta_y[1:, :] - theta_x[:, 1:] - theta_y[:-1, :]
    xm, ym = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1])
    XM, YM = np.meshgrid(xm, ym, indexing="ij")
    resid = float(np.max(np.abs(circ / (hx * hy) - B0(XM, YM)))) if circ.size else 0.0
    return theta_x, theta_y, resid


# ------------------------------------------------------------------ zero set


def _clip_polyline(pts: np.ndarray, geom: Geometry) -> list[np.ndarray]:
    """Pieces of a polyline inside the geometry, with exact boundary end points."""
    ins = geom.inside(pts[:, 0], pts[:, 1])
    pieces, cur = [], []

    def crossing(p, q):
        # bisection on the segment for the boundary point
        a, b = 0.0, 1.0
        pin = geom.inside(p[0], p[1])
        for _ in range(60):
            m = 0.5 * (a + b)
            z = p + m * (q - p)
            if geom.inside(z[0], z[1]) == pin:
                a = m
            else:
                b = m
        return p + 0.5 * (a + b) * (q - p)

    for k in range(len(pts)):
        if ins[k]:
            if not cur and k > 0:
                cur.append(crossing(pts[k - 1], pts[k]))
            cur.append(pts[k])
        elif cur:
            cur.append(crossing(pts[k - 1], pts[k]))
            pieces.append(np.array(cur))
            cur = []
    if cur:
        pieces.append(np.array(cur))
    return [p for p in pieces if len(p) >= 2]


def trace_zero_set(B0: Callable, geom: Geometry, spacing: float) -> list[np.ndarray]:
    """Polylines of {B0 = 0} inside the geometry by marching squares."""
    x0, x1, y0, y1 = geom.box
    m = 2  # margin cells so curves reaching the boundary are not cut short
    nx = int(math.ceil((x1 - x0) / spacing)) + 1 + 2 * m
    ny = int(math.ceil((y1 - y0) / spacing)) + 1 + 2 * m
    xs = x0 + spacing * (np.arange(nx) - m)
    ys = y0 + spacing * (np.arange(ny) - m)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = np.asarray(B0(X, Y), float)
    out = []
    for c in find_contours(vals, 0.0):
        pts = np.column_stack([xs[0] + spacing * c[:, 0], ys[0] + spacing * c[:, 1]])
        out.extend(_clip_polyline(pts, geom))
    return out


def polyline_length(p: np.ndarray) -> float:
    return float(np.sum(np.hypot(*np.diff(p, axis=0).T)))


def distance_to_polylines(X: np.ndarray, Y: np.ndarray, lines: list[np.ndarray], chunk: int = 4096) -> np.ndarray:
    """Euclidean distance from points to the union of polylines (segment projection)."""
    P = np.column_stack([np.ravel(X), np.ravel(Y)])
    if not lines:
        raise ProblemError("zero set is empty")
    A = np.concatenate([ln[:-1] for ln in lines])
    B = np.concatenate([ln[1:] for ln in lines])
    D = B - A
    dd = np.maximum(np.sum(D * D, axis=1), 1e-300)
    out = np.empty(P.shape[0])
    for s in range(0, P.shape[0], chunk):
        p = P[s:s + chunk, None, :]
        t = np.clip(np.sum((p - A[None]) * D[None], axis=2) / dd[None], 0.0, 1.0)
        proj = A[None] + t[..., None] * D[None]
        out[s:s + chunk] = np.sqrt(np.min(np.sum((p - proj) ** 2, axis=2), axis=1))
    return out.reshape(np.shape(X))


# ------------------------------------------------------------------- problem


@dataclass
class DomainProblem:
    geometry: Geometry
    B0: Polynomial | Callable = field(repr=False)
    kappa: float
    H: float
    h: float
    lattice: Lattice = field(repr=False)
    plaq_w: np.ndarray = field(repr=False)
    theta_F: tuple[np.ndarray, np.ndarray] = field(repr=False)
    B0_nodes: np.ndarray = field(repr=False)
    gradB0_nodes: np.ndarray = field(repr=False)
    gamma: list[np.ndarray] = field(repr=False)
    gamma_grad: list[np.ndarray] = field(repr=False)
    c_B0: float
    curl_residual: float
    flags: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.H / self.kappa ** 2

    @property
    def kH(self) -> float:
        return self.kappa * self.H

    @property
    def gamma_length(self) -> float:
        return sum(polyline_length(p) for p in self.gamma)

    @property
    def area(self) -> float:
        return float(self.lattice.node_w.sum())

    def to_dict(self) -> dict:
        return {"geometry": self.geometry.to_dict(), "B0": str(self.B0), "kappa": self.kappa, "H": self.H,
                "h": self.h, "c_B0": self.c_B0, "curl_residual": self.curl_residual,
                "gamma_length": self.gamma_length, "flags": dict(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "DomainProblem":
        return build_problem(Geometry.from_dict(d["geometry"]), d["B0"], d["kappa"], d["H"], h=d.get("h"))


def default_spacing(kappa: float, H: float) -> float:
    """Four nodes per coherence length 1/kappa, at most 0.05."""
    return min(0.05, 0.25 / kappa)


def _as_field(B0_spec) -> Polynomial | Callable:
    if isinstance(B0_spec, str):
        return parse(B0_spec)
    if callable(B0_spec):
        return B0_spec
    raise ProblemError("B0 must be an expression string, a Polynomial or a callable")


def _gradient(B0, X, Y, eps: float = 1e-6):
    if hasattr(B0, "gradient"):
        return B0.gradient(X, Y)
    return ((B0(X + eps, Y) - B0(X - eps, Y)) / (2 * eps), (B0(X, Y + eps) - B0(X, Y - eps)) / (2 * eps))


def build_problem(geometry: Geometry, B0_spec, kappa: float, H: float, h: float | None = None,
                  sub: int = 8, contour_refine: int = 4) -> DomainProblem:
    """Mesh, weights, reference potential and zero set for one (Omega, B0, kappa, H).

    Non-degeneracy ``|B0| + |grad B0| >= c > 0`` is checked on a grid ``contour_refine``
    times finer than the mesh; c below twice (fine spacing) * max|grad B0| is
    treated as a degenerate zero and rejected.
    """
    if not (kappa > 0 and H > 0):
        raise ProblemError("kappa and H must be positive")
    B0 = _as_field(B0_spec)
    h = float(h or default_spacing(kappa, H))
    x0, x1, y0, y1 = geometry.box
    nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 1
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 1
    x = np.linspace(x0, x1, nx)
    y = np.linspace(y0, y1, ny)
    W = region_weights(geometry.inside, x, y, sub)

    # non-degeneracy on a finer sampling of Omega
    delta = h / contour_refine
    xf = np.arange(x0 + 0.5 * delta, x1, delta)
    yf = np.arange(y0 + 0.5 * delta, y1, delta)
    XF, YF = np.meshgrid(xf, yf, indexing="ij")
    inside = geometry.inside(XF, YF)
    g1, g2 = _gradient(B0, XF, YF)
    gnorm = np.hypot(g1, g2)
    lhs = (np.abs(B0(XF, YF)) + gnorm)[inside]
    c = float(lhs.min())
    if c <= 2.0 * delta * max(float(gnorm[inside].max()), 1e-300):
        raise ProblemError(f"B0 has a degenerate zero in the domain (min |B0|+|grad B0| = {c:.3g})")

    tx, ty, curl_res = stream_function_phases(B0, x, y)
    kH = kappa * H
    free = (W.node > 0)
    free[:-1, :] |= W.wx > 0
    free[1:, :] |= W.wx > 0
    free[:, :-1] |= W.wy > 0
    free[:, 1:] |= W.wy > 0
    lat = Lattice(x, y, W.node, W.wx, W.wy, kH * tx, kH * ty, free)

    X, Y = lat.mesh()
    gx, gy = _gradient(B0, X, Y)
    gamma = trace_zero_set(B0, geometry, delta)
    flags = {"gamma_empty": not gamma}
    gamma_grad = []
    for line in gamma:
        a, b = _gradient(B0, line[:, 0], line[:, 1])
        gamma_grad.append(np.hypot(a, b))
        near = geometry.boundary_distance(line[:, 0], line[:, 1]) < delta
        # a few vertices sit next to each crossing; a long run means tangency
        if np.sum(near) > 6:
            raise ProblemError("zero set runs along the boundary (tangential contact)")
    if not gamma:
        log.warning("B0 does not vanish in the domain; the zero set is empty")
    return DomainProblem(geometry, B0, float(kappa), float(H), h, lat, W.plaq, (tx, ty),
                         B0(X, Y), np.stack([gx, gy]), gamma, gamma_grad, c, curl_res, flags)


# ------------------------------------------------------------------ energies


@dataclass
class GLState:
    psi: np.ndarray = field(repr=False)
    vartheta: tuple[np.ndarray, np.ndarray] | None = field(repr=False)
    mode: str
    energy_total: float
    energy_parts: dict
    residuals: dict
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {"mode": self.mode, "energy_total": self.energy_total, "energy_parts": dict(self.energy_parts),
                "residuals": dict(self.residuals), "converged": self.converged, "iterations": self.iterations}


class DomainEnergy:
    """Energy of (psi, vartheta) for a problem, with gradients in both arguments."""

    def __init__(self, problem: DomainProblem):
        self.p = problem
        k2 = problem.kappa ** 2
        self.base = problem.lattice
        self.fun = GLFunctional(self.base, -k2, k2)

    def lattice(self, vt=None) -> Lattice:
        if vt is None:
            return self.base
        lat = self.base
        return Lattice(lat.x, lat.y, lat.node_w, lat.wx, lat.wy, lat.theta_x + vt[0], lat.theta_y + vt[1], lat.free)

    def functional(self, vt=None) -> GLFunctional:
        if vt is None:
            return self.fun
        k2 = self.p.kappa ** 2
        return GLFunctional(self.lattice(vt), -k2, k2)

    def circulation(self, vt) -> np.ndarray:
        tx, ty = vt
        return tx[:, :-1] + ty[1:, :] - tx[:, 1:] - ty[:-1, :]

    def magnetic(self, vt) -> float:
        if vt is None:
            return 0.0
        lat = self.base
        c = self.circulation(vt) / (lat.hx * lat.hy)
        return float(np.sum(self.p.plaq_w * c * c))

    def parts(self, psi, vt=None) -> dict:
        f = self.functional(vt)
        m = np.abs(psi) ** 2
        w = self.base.node_w
        k2 = self.p.kappa ** 2
        return {"kinetic": f.kinetic(psi), "linear": float(-k2 * np.sum(w * m)),
                "quartic": float(0.5 * k2 * np.sum(w * m * m)), "magnetic": self.magnetic(vt)}

    def total(self, psi, vt=None) -> float:
        return self.functional(vt).energy(psi) + self.magnetic(vt)

    def grad_vartheta(self, psi, vt) -> tuple[np.ndarray, np.ndarray]:
        lat = self.lattice(vt)
        gx = -2.0 * lat.wx * np.imag(np.conj(psi[:-1, :]) * lat.ux * psi[1:, :])
        gy = -2.0 * lat.wy * np.imag(np.conj(psi[:, :-1]) * lat.uy * psi[:, 1:])
        hxy = lat.hx * lat.hy
        g = 2.0 * self.p.plaq_w * self.circulation(vt) / hxy ** 2
        gx[:, :-1] += g
        gx[:, 1:] -= g
        gy[1:, :] += g
        gy[:-1, :] -= g
        return gx, gy


def default_seed(problem: DomainProblem, rng: np.random.Generator, noise: float = 0.05) -> np.ndarray:
    """Bulk amplitude sqrt(1 - (H/kappa)|B0|)_+ with noise on its support.

    Where no point has (H/kappa)|B0| < 1 the seed is complex noise of size 0.1
    everywhere, so that a collapse to zero is what the solver has to find.
    """
    b = (problem.H / problem.kappa) * np.abs(problem.B0_nodes)
    amp = np.sqrt(np.clip(1.0 - b, 0.0, None))
    shape = amp.shape
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if not np.any(amp[problem.lattice.node_w > 0] > 0):
        return 0.1 * z
    return amp + noise * (amp > 0) * z


def _state(en: DomainEnergy, psi, vt, mode, converged, iterations) -> GLState:
    parts = en.parts(psi, vt)
    total = sum(parts.values())
    st = GLState(psi, vt, mode, total, parts, {}, converged, iterations)
    st.residuals = gl_residual(st, en.p, en)
    return st


def minimize_gl(problem: DomainProblem, mode: str = "fixed", tol: float = 1e-4, seed: int | np.ndarray = 0,
                max_iter: int = 20000, tol_energy: float = 1e-8, max_cycles: int = 30,
                a_steps: int = 200) -> GLState:
    """Ground state in fixed-potential mode (A = F) or full mode.

    Full mode alternates a psi-step (conjugate gradients at fixed phases) with
    an A-step (L-BFGS on the edge phases at fixed psi), starting from the
    fixed-mode minimizer, until the relative energy change per cycle is below
    ``tol_energy * 100``.
    """
    if mode not in ("fixed", "fixed_A", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    mode = "fixed_A" if mode in ("fixed", "fixed_A") else "full"
    en = DomainEnergy(problem)
    k2 = problem.kappa ** 2
    if isinstance(seed, np.ndarray):
        u0 = seed
    else:
        u0 = default_seed(problem, np.random.default_rng(seed))
    floor = 1e-10 * k2 * problem.area
    res = nlcg(en.fun, u0, tol_res=tol, tol_energy=tol_energy, res_scale=k2, max_iter=max_iter,
               energy_floor=floor, strict=True)
    psi, its = res.u, res.iterations
    if mode == "fixed_A":
        return _state(en, psi, None, mode, res.converged or res.stalled, its)

    lat = problem.lattice
    vt = (np.zeros_like(lat.theta_x), np.zeros_like(lat.theta_y))
    nxe = vt[0].size
    e_prev = en.total(psi, vt)
    converged = False
    for cycle in range(max_cycles):
        def fa(v, psi=psi):
            t = (v[:nxe].reshape(vt[0].shape), v[nxe:].reshape(vt[1].shape))
            gx, gy = en.grad_vartheta(psi, t)
            return en.total(psi, t), np.concatenate([gx.ravel(), gy.ravel()])

        v0 = np.concatenate([vt[0].ravel(), vt[1].ravel()])
        out = minimize(fa, v0, jac=True, method="L-BFGS-B", options={"maxiter": a_steps, "gtol": 1e-10})
        vt = (out.x[:nxe].reshape(vt[0].shape), out.x[nxe:].reshape(vt[1].shape))
        r = nlcg(en.functional(vt), psi, tol_res=tol, tol_energy=tol_energy, res_scale=k2,
                 max_iter=max_iter, energy_floor=floor)
        psi = r.u
        its += r.iterations
        e = en.total(psi, vt)
        if e > e_prev + 1e-9 * abs(e_prev):
            raise ConvergenceError(f"full mode energy increased in cycle {cycle}: {e_prev} -> {e}")
        if abs(e_prev - e) <= 100 * tol_energy * max(abs(e), 1e-300):
            converged = True
            break
        e_prev = e
    return _state(en, psi, vt, mode, converged, its)


def gl_residual(state: GLState, problem: DomainProblem, en: DomainEnergy | None = None) -> dict:
    """Normalized Euler-Lagrange residuals and the virial gap.

    psi_eq: RMS of the psi-equation residual in units of kappa^2.
    A_eq: RMS of the phase gradient per unit area in units of kappa^2.
    virial: |E0 + kappa^2/2 int|psi|^4| / (kappa^2 int|psi|^2).
    """
    en = en or DomainEnergy(problem)
    k2 = problem.kappa ** 2
    f = en.functional(state.vartheta)
    psi = state.psi
    out = {"psi_eq": f.residual_norm(psi) / k2}
    if state.vartheta is not None:
        gx, gy = en.grad_vartheta(psi, state.vartheta)
        hxy = problem.lattice.hx * problem.lattice.hy
        g = np.concatenate([gx.ravel(), gy.ravel()]) / hxy
        out["A_eq"] = float(np.sqrt(np.mean(g * g))) / k2
    else:
        out["A_eq"] = 0.0
    w = problem.lattice.node_w
    m = np.abs(psi) ** 2
    e0 = f.energy(psi)
    denom = k2 * float(np.sum(w * m))
    out["virial"] = abs(e0 + 0.5 * k2 * float(np.sum(w * m * m))) / denom if denom > 0 else 0.0
    return out


# --------------------------------------------------------------- diagnostics


def _region_weights(problem: DomainProblem, D: Region | None, sub: int = 8) -> Weights:
    lat = problem.lattice
    if D is None:
        return Weights(lat.node_w, lat.wx, lat.wy, problem.plaq_w)
    geom = problem.geometry

    def both(X, Y):
        return geom.inside(X, Y) & D(X, Y)

    return region_weights(both, lat.x, lat.y, sub)


def local_energy(state: GLState, problem: DomainProblem, D: Region | None = None) -> float:
    """Energy without the magnetic term restricted to D (None: all of Omega)."""
    W = _region_weights(problem, D)
    if not np.any(W.node > 0) and not np.any(W.wx > 0) and not np.any(W.wy > 0):
        log.warning("local_energy: region does not meet the domain")
        return 0.0
    en = DomainEnergy(problem)
    base = en.lattice(state.vartheta)
    lat = Lattice(base.x, base.y, W.node, W.wx, W.wy, base.theta_x, base.theta_y, base.free)
    k2 = problem.kappa ** 2
    return GLFunctional(lat, -k2, k2).energy(state.psi)


def order_mass(state: GLState, problem: DomainProblem, D: Region | None = None) -> float:
    """int_D |psi|^4."""
    W = _region_weights(problem, D)
    return float(np.sum(W.node * np.abs(state.psi) ** 4))


def order_mass2(state: GLState, problem: DomainProblem, D: Region | None = None) -> float:
    """int_D |psi|^2."""
    W = _region_weights(problem, D)
    return float(np.sum(W.node * np.abs(state.psi) ** 2))


class MagneticEnergy(NamedTuple):
    value: float
    fixed_A: bool


def magnetic_energy(state: GLState, problem: DomainProblem) -> MagneticEnergy:
    """(kappa H)^2 int |curl A - B0|^2; exactly 0 in fixed-potential mode."""
    if state.vartheta is None:
        return MagneticEnergy(0.0, True)
    return MagneticEnergy(DomainEnergy(problem).magnetic(state.vartheta), False)


@dataclass
class DecayProfile:
    edges: np.ndarray  # bin edges in units of kappa/H
    mass: np.ndarray  # int |psi|^2 per bin
    area: np.ndarray  # area per bin
    total: float
    m_hat: float
    band90: float  # physical distance holding 90% of the mass
    unit: float  # kappa / H

    def fraction_within(self, d_phys: float, state: GLState | None = None) -> float:
        """Mass fraction at distance <= d_phys (bin resolution)."""
        d = d_phys / self.unit
        k = np.searchsorted(self.edges, d, side="right") - 1
        return float(self.mass[:max(k, 0)].sum() / self.total) if self.total > 0 else 0.0

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "mass": self.mass.tolist(), "area": self.area.tolist(),
                "total": self.total, "m_hat": self.m_hat, "band90": self.band90, "unit": self.unit}


def node_distances(problem: DomainProblem) -> np.ndarray:
    X, Y = problem.lattice.mesh()
    return distance_to_polylines(X, Y, problem.gamma)


def mass_fraction_within(state: GLState, problem: DomainProblem, d: float,
                         dist: np.ndarray | None = None) -> float:
    dist = node_distances(problem) if dist is None else dist
    m = problem.lattice.node_w * np.abs(state.psi) ** 2
    tot = m.sum()
    return float(m[dist <= d].sum() / tot) if tot > 0 else 0.0


def decay_profile(state: GLState, problem: DomainProblem, bin_width: float = 0.25,
                  tail_start: float = 1.0, dist: np.ndarray | None = None) -> DecayProfile:
    """Mass of |psi|^2 binned by distance to the zero set, in units of kappa/H.

    The decay rate is fitted to log(mass / area) against distance over the
    bins beyond ``tail_start`` (where (H/kappa)|B0| exceeds 1 near a
    non-degenerate zero); m_hat is minus half the slope.
    """
    if not problem.gamma:
        raise ProblemError("decay profile needs a nonempty zero set")
    unit = problem.kappa / problem.H
    dist = node_distances(problem) if dist is None else dist
    w = problem.lattice.node_w
    m = w * np.abs(state.psi) ** 2
    tau = dist / unit
    nb = int(math.floor(tau[w > 0].max() / bin_width)) + 1
    edges = bin_width * np.arange(nb + 1)
    idx = np.minimum((tau / bin_width).astype(int), nb - 1)
    mass = np.bincount(idx.ravel(), weights=m.ravel(), minlength=nb)
    area = np.bincount(idx.ravel(), weights=w.ravel(), minlength=nb)
    total = float(m.sum())
    centres = 0.5 * (edges[1:] + edges[:-1])
    ok = (centres >= tail_start) & (area > 0) & (mass > 1e-300)
    m_hat = float("nan")
    if ok.sum() >= 2:
        slope = np.polyfit(centres[ok], np.log(mass[ok] / area[ok]), 1)[0]
        m_hat = float(-0.5 * slope)
    order = np.argsort(dist.ravel())
    cum = np.cumsum(m.ravel()[order])
    band90 = float(dist.ravel()[order][np.searchsorted(cum, 0.9 * total)]) if total > 0 else 0.0
    return DecayProfile(edges, mass, area, total, m_hat, band90, unit)
