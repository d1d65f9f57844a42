import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glzero import domain as dm

DISC = dm.Geometry.disc(1.0)


@pytest.fixture(scope="module")
def small():
    prob = dm.build_problem(DISC, "x1", 4.0, 8.0)
    return prob, dm.minimize_gl(prob, "fixed"), dm.minimize_gl(prob, "full")


def test_geometry_validation_and_roundtrip():
    with pytest.raises(ValueError):
        dm.Geometry.disc(-1.0)
    with pytest.raises(ValueError):
        dm.Geometry.rectangle(1.0, 0.0, 0.0, 1.0)
    g = dm.Geometry.rectangle(0.0, 2.0, -1.0, 1.0)
    assert dm.Geometry.from_dict(g.to_dict()) == g
    assert g.inside(np.array([1.0]), np.array([0.0]))[0]
    assert DISC.boundary_distance(np.array([0.5]), np.array([0.0]))[0] == pytest.approx(0.5)


def test_linear_zero_set_on_disc(small):
    prob, _, _ = small
    assert prob.gamma_length == pytest.approx(2.0, abs=1e-3)
    for g in prob.gamma_grad:
        assert np.allclose(g, 1.0)
    assert prob.curl_residual < 1e-8
    assert prob.sigma == pytest.approx(0.5) and prob.kH == 32.0


def test_curved_zero_set_length():
    # zero set of x1^2 + x2^2 - 1/4 is the circle of radius 1/2
    prob = dm.build_problem(DISC, "x1*x1 + x2*x2 - 0.25", 4.0, 8.0)
    assert prob.gamma_length == pytest.approx(np.pi, rel=1e-3)


def test_empty_zero_set_warns(caplog):
    with caplog.at_level(logging.WARNING):
        prob = dm.build_problem(DISC, "x1*x1 + 1", 4.0, 8.0)
    assert prob.gamma == [] and prob.flags["gamma_empty"]
    assert "empty" in caplog.text


def test_degenerate_zero_rejected():
    with pytest.raises(dm.ProblemError):
        dm.build_problem(DISC, "x1*x1", 4.0, 8.0)
    with pytest.raises(dm.ProblemError):
        dm.build_problem(DISC, "x1", 0.0, 8.0)


def test_flux_matches_B0():
    prob = dm.build_problem(dm.Geometry.rectangle(-1, 1, -1, 1), "x1 + 0.5*x2*x2", 4.0, 2.0)
    lat = prob.lattice
    X, Y = np.meshgrid(0.5 * (lat.x[1:] + lat.x[:-1]), 0.5 * (lat.y[1:] + lat.y[:-1]), indexing="ij")
    flux = lat.plaquette_flux() / (lat.hx * lat.hy * prob.kH)
    # cell average of B0 vs midpoint value differs by O(h^2)
    assert np.allclose(flux, X + 0.5 * Y * Y, atol=lat.hy ** 2)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gauge_invariance_full_energy(seed):
    prob = dm.build_problem(DISC, "x1", 2.0, 2.0, h=0.1)
    en = dm.DomainEnergy(prob)
    rng = np.random.default_rng(seed)
    lat = prob.lattice
    psi = rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape)
    vt = (0.1 * rng.standard_normal(lat.theta_x.shape), 0.1 * rng.standard_normal(lat.theta_y.shape))
    full = en.lattice(vt)
    v, lat2 = full.gauge_transform(psi, rng.uniform(-3, 3, lat.shape))
    vt2 = (lat2.theta_x - lat.theta_x, lat2.theta_y - lat.theta_y)
    e1, e2 = en.total(psi, vt), en.total(v, vt2)
    assert abs(e1 - e2) <= 1e-10 * abs(e1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_vartheta_gradient_matches_finite_differences(seed):
    prob = dm.build_problem(DISC, "x1", 2.0, 2.0, h=0.1)
    en = dm.DomainEnergy(prob)
    rng = np.random.default_rng(seed)
    lat = prob.lattice
    psi = np.where(lat.free, rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape), 0)
    vt = (0.1 * rng.standard_normal(lat.theta_x.shape), 0.1 * rng.standard_normal(lat.theta_y.shape))
    d = (rng.standard_normal(vt[0].shape), rng.standard_normal(vt[1].shape))
    eps = 1e-6
    plus = en.total(psi, (vt[0] + eps * d[0], vt[1] + eps * d[1]))
    minus = en.total(psi, (vt[0] - eps * d[0], vt[1] - eps * d[1]))
    fd = (plus - minus) / (2 * eps)
    gx, gy = en.grad_vartheta(psi, vt)
    an = np.sum(gx * d[0]) + np.sum(gy * d[1])
    assert abs(fd - an) <= 1e-5 * max(abs(fd), 1.0)


def test_minimizer_properties(small):
    prob, fixed, full = small
    assert fixed.energy_total < 0
    assert np.abs(fixed.psi).max() <= 1 + 1e-6
    assert fixed.residuals["virial"] < 1e-6
    assert full.energy_total <= fixed.energy_total + 1e-9
    assert dm.magnetic_energy(fixed, prob) == (0.0, True)
    mag = dm.magnetic_energy(full, prob)
    assert not mag.fixed_A and mag.value >= 0
    assert full.energy_parts["magnetic"] == pytest.approx(mag.value)


def test_local_energy_identities(small):
    prob, fixed, full = small
    for st_ in (fixed, full):
        whole = dm.local_energy(st_, prob)
        assert whole == pytest.approx(st_.energy_total - st_.energy_parts["magnetic"], rel=1e-10)
        left = dm.local_energy(st_, prob, lambda X, Y: X < 0.013)
        right = dm.local_energy(st_, prob, lambda X, Y: X >= 0.013)
        assert left + right == pytest.approx(whole, rel=1e-10)
    # virial identity at a critical point: E0 = -kappa^2/2 int |psi|^4
    k2 = prob.kappa ** 2
    assert dm.local_energy(fixed, prob) == pytest.approx(-0.5 * k2 * dm.order_mass(fixed, prob), rel=1e-5)
    assert dm.local_energy(fixed, prob, lambda X, Y: X > 5) == 0.0


def test_decay_profile(small):
    prob, fixed, _ = small
    prof = dm.decay_profile(fixed, prob)
    assert prof.total == pytest.approx(dm.order_mass2(fixed, prob), rel=1e-10)
    assert prof.mass.sum() == pytest.approx(prof.total, rel=1e-12)
    assert prof.m_hat > 0
    assert 0 < prof.band90 <= 1.0
    assert dm.mass_fraction_within(fixed, prob, 10.0) == pytest.approx(1.0)
    empty = dm.build_problem(DISC, "x1*x1 + 1", 4.0, 8.0)
    with pytest.raises(dm.ProblemError):
        dm.decay_profile(dm.minimize_gl(empty), empty)


def test_strong_field_collapses():
    # (H/kappa)|B0| >= 2.5 everywhere: above the surface and bulk thresholds
    prob = dm.build_problem(DISC, "x1*x1 + 1", 4.0, 10.0)
    st_ = dm.minimize_gl(prob)
    assert abs(st_.energy_total) <= 1e-6 * prob.kappa ** 2 * prob.area
    assert np.abs(st_.psi).max() < 1e-2


def test_unknown_mode():
    prob = dm.build_problem(DISC, "x1", 2.0, 2.0, h=0.1)
    with pytest.raises(ValueError):
        dm.minimize_gl(prob, "half")


def test_problem_roundtrip(small):
    prob, _, _ = small
    again = dm.DomainProblem.from_dict(prob.to_dict())
    assert again.h == prob.h and again.gamma_length == pytest.approx(prob.gamma_length)
