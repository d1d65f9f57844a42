import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glzero import strip
from glzero.lattice import GLFunctional


def small_grid(L=0.5, R=2.0):
    return strip.StripGrid.default(L, R, h=0.25)


def test_grid_policy():
    g = strip.StripGrid.default(0.05, 4.0)
    assert g.M >= 4 * max(2, 0.05 ** (-2 / 3))
    assert g.hx > 0 and g.hy > 0
    assert g.dims == (g.x.size, g.y.size)
    with pytest.raises(ValueError):
        strip.StripGrid(1.0, 1.0, 0.0, 0.1)


def test_zero_field_and_shape_check():
    g = small_grid()
    assert strip.strip_energy(np.zeros(g.dims, complex), 0.5, g) == 0.0
    with pytest.raises(ValueError):
        strip.strip_energy(np.zeros((3, 3)), 0.5, g)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 6.283))
def test_global_phase_and_gauge_invariance(seed, phase):
    rng = np.random.default_rng(seed)
    g = small_grid()
    lat = strip.strip_lattice(g)
    u = np.where(lat.free, rng.standard_normal(g.dims) + 1j * rng.standard_normal(g.dims), 0)
    e = strip.strip_energy(u, 0.5, g)
    assert strip.strip_energy(np.exp(1j * phase) * u, 0.5, g) == pytest.approx(e, rel=1e-12)
    chi = rng.uniform(-3, 3, g.dims)
    v, lat2 = lat.gauge_transform(u, chi)
    a = strip.strength(0.5)
    assert abs(GLFunctional(lat2, -a, a).energy(v) - e) <= 1e-10 * abs(e)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    g = small_grid()
    f = strip.strip_functional(0.5, g)
    free = f.lattice.free
    u = np.where(free, rng.standard_normal(g.dims) + 1j * rng.standard_normal(g.dims), 0) * 0.5
    d = np.where(free, rng.standard_normal(g.dims) + 1j * rng.standard_normal(g.dims), 0)
    eps = 1e-6
    fd = (f.energy(u + eps * d) - f.energy(u - eps * d)) / (2 * eps)
    an = np.real(np.vdot(f.gradient(u), d))
    assert abs(fd - an) <= 1e-6 * max(abs(fd), 1.0)


def test_link_phases_have_flux_x2():
    g = small_grid()
    lat = strip.strip_lattice(g)
    flux = lat.plaquette_flux() / (lat.hx * lat.hy)
    ymid = 0.5 * (g.y[1:] + g.y[:-1])
    # circulation of (-x2^2/2, 0) around a cell equals the cell average of x2
    assert np.allclose(flux, np.broadcast_to(ymid, flux.shape), atol=1e-12)


def test_seed_quadratic_form_near_lambda0():
    # derived: Rayleigh quotient of the cut-off seed is lambda0 + O(1/R^2) + O(h^2)
    g = strip.StripGrid.default(0.2, 8.0, h=0.1)
    lat = strip.strip_lattice(g)
    X, _ = lat.mesh()
    phi, tau0, lam0, _ = strip.montgomery_seed_profile(g.y)
    u = strip.cutoff(X / g.R) * np.exp(1j * tau0 * X) * phi[None, :]
    rq = GLFunctional(lat, 0.0, 0.0).kinetic(u) / lat.integrate(np.abs(u) ** 2)
    assert lam0 < rq < lam0 + 0.12
    wrong = np.conj(u)
    assert GLFunctional(lat, 0.0, 0.0).kinetic(wrong) / lat.integrate(np.abs(wrong) ** 2) > rq + 0.3


def test_cutoff_shape():
    s = np.linspace(-1.5, 1.5, 301)
    c = strip.cutoff(s)
    assert np.all(c[np.abs(s) <= 0.5] == 1.0)
    assert np.all(c[np.abs(s) >= 1.0] == 0.0)
    assert np.all((c >= 0) & (c <= 1))


def test_trivial_above_threshold():
    g = strip.StripGrid.default(3.0, 4.0)
    m = strip.minimize_strip(3.0, g, rng=np.random.default_rng(1))
    assert abs(m.energy) / (2 * g.R) <= 1e-6
    assert m.sup_u <= 1e-3


def test_nontrivial_minimizer_invariants():
    g = strip.StripGrid.default(0.5, 4.0)
    m = strip.minimize_strip(0.5, g)
    assert m.energy < 0
    assert m.sup_u <= 1 + 1e-6
    assert m.residual < 1e-3
    assert np.all(m.u[[0, -1], :] == 0) and np.all(m.u[:, [0, -1]] == 0)


def test_tiling_doubles_energy_exactly():
    g = strip.StripGrid.default(0.5, 2.0)
    m = strip.minimize_strip(0.5, g)
    g2 = g.with_R(4.0)
    u2 = strip.tile_seed(m, g2)
    assert strip.strip_energy(u2, 0.5, g2) == pytest.approx(2 * m.energy, rel=1e-12)
    assert strip.tile_seed(m, strip.StripGrid(3.0, g.M, g.hx, g.hy)) is None


def test_quadrupled_strip_energy_bound():
    # e_gs(L; 4R) <= 4 e_gs(L; R) via the tiling chain
    p = strip.estimate_E(0.5, (2.0, 4.0, 8.0))
    e = [v * 2 * R for v, R in zip(p.per_length, p.R_list)]
    assert e[2] <= 4 * e[0] + 1e-9


def test_estimate_E_sandwich_and_validation():
    p = strip.estimate_E(0.5, (2.0, 4.0, 8.0))
    assert p.E <= min(p.per_length)
    assert p.E <= 0
    with pytest.raises(ValueError):
        strip.estimate_E(0.5, (2.0, 4.0))
    with pytest.raises(ValueError):
        strip.estimate_E(0.5, (4.0, 2.0, 8.0))


def test_observed_order_on_synthetic_data():
    R = [4.0, 8.0, 16.0]
    y = [-1.0 + 0.8 / r for r in R]
    assert strip.observed_order(R, y) == pytest.approx(1.0)
    E, c, rms = strip.fit_thermodynamic_limit(R, y, 1.0)
    assert E == pytest.approx(-1.0) and c == pytest.approx(0.8) and rms < 1e-12
    assert strip.observed_order(R, [0.0, 0.0, 0.0]) == pytest.approx(2 / 3)


def test_disc_energy_nu_discarded_and_bounded_by_strip(caplog):
    L, R = 0.5, 3.0
    g = strip.StripGrid.default(L, R)
    with caplog.at_level(logging.INFO):
        d1 = strip.disc_energy(1.3, L, R, g)
    d0 = strip.disc_energy(0.0, L, R, g)
    assert d1.energy == d0.energy
    assert "eliminated" in caplog.text
    assert d0.energy >= strip.minimize_strip(L, g).energy - 1e-9
    assert strip.disc_energy(0.0, 3.0, R).energy == pytest.approx(0.0, abs=1e-8)


def test_decay_report():
    g = strip.StripGrid.default(0.5, 4.0)
    m = strip.minimize_strip(0.5, g)
    rep = strip.decay_report(m)
    assert rep["regime"] == "L>=2^-3/2"
    assert np.isfinite(rep["grad_ratio"]) and np.isfinite(rep["mass_ratio"])
    assert rep["mass_tail"] >= 0
    zero = strip.StripMinimizer(np.zeros(g.dims, complex), 0.5, g, 0.0, 0.0, 0.0, True, 0)
    rz = strip.decay_report(zero)
    assert rz["grad_tail"] == 0 and rz["mass_tail"] == 0


def test_decay_tail_shrinks_with_larger_M():
    L, R = 1.0, 4.0
    g = strip.StripGrid.default(L, R)
    g2 = strip.StripGrid(R, 1.25 * g.M, g.hx, g.hy)
    t1 = strip.decay_report(strip.minimize_strip(L, g))["mass_tail"]
    t2 = strip.decay_report(strip.minimize_strip(L, g2))["mass_tail"]
    assert t1 > 0
    # the far tail is already negligible; enlarging M must not add mass there
    assert t2 <= 1.05 * t1


def test_conjecture_window_and_rejection():
    lo, hi = strip.conjecture_window()
    assert lo == pytest.approx(0.6679862 ** -1.5, rel=1e-5)
    assert hi == pytest.approx(0.5698203 ** -1.5, rel=1e-5)
    with pytest.raises(ValueError):
        strip.check_conjecture(1.0)
