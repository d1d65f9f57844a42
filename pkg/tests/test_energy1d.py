import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from glzero import energy1d as e1
from glzero import montgomery as mg

G = mg.Grid1D(10.0, 801)


def test_zero_field_energy():
    assert e1.energy_1d(np.zeros(G.n), 0.0, 0.7, G) == 0.0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        e1.energy_1d(np.zeros(G.n + 1), 0.0, 0.7, G)
    with pytest.raises(ValueError):
        e1.energy_1d(np.full(G.n, np.nan), 0.0, 0.7, G)
    with pytest.raises(ValueError):
        e1.minimize_1d(0.0, -1.0, G)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1.0, 1.0), st.floats(0.1, 2.0))
def test_even_in_f(seed, alpha, b):
    f = np.random.default_rng(seed).uniform(-1, 1, G.n)
    assert e1.energy_1d(f, alpha, b, G) == pytest.approx(e1.energy_1d(-f, alpha, b, G), rel=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1.0, 1.0), st.floats(0.1, 2.0))
def test_gradient_matches_finite_differences(seed, alpha, b):
    rng = np.random.default_rng(seed)
    f = rng.uniform(-1, 1, G.n)
    d = rng.standard_normal(G.n)
    g = e1.gradient_1d(f, alpha, b, G)
    eps = 1e-5
    fd = (e1.energy_1d(f + eps * d, alpha, b, G) - e1.energy_1d(f - eps * d, alpha, b, G)) / (2 * eps)
    assert abs(fd - g @ d) <= 1e-6 * max(abs(fd), 1.0)


def test_small_amplitude_quadratic_form():
    sp = mg.eigenpair(-0.3, G)
    eps = 1e-4
    val = e1.energy_1d(eps * sp.eigenfunction, -0.3, 0.7, G)
    assert val / eps ** 2 == pytest.approx(sp.lam - 0.7, abs=1e-6)


def test_trivial_when_lambda_above_b():
    m = e1.minimize_1d(2.0, 0.7, G)
    assert m.trivial and m.energy == 0.0 and not np.any(m.f)


def test_minimizer_properties():
    m = e1.minimize_1d(-0.35, 0.7, G)
    assert m.energy < 0
    assert m.f.min() >= -1e-10
    assert m.f.max() <= 1 + 1e-6
    assert m.el_residual < 1e-8
    assert e1.energy_1d(-m.f, -0.35, 0.7, G) == pytest.approx(m.energy, rel=1e-14)


def test_newton_agrees_with_generic_optimizer():
    # independent oracle: L-BFGS on the same discrete energy from a different seed
    alpha, b = -0.35, 0.9
    m = e1.minimize_1d(alpha, b, G)
    x0 = 0.3 * np.exp(-G.nodes ** 2)
    res = minimize(lambda f: (e1.energy_1d(f, alpha, b, G), e1.gradient_1d(f, alpha, b, G)), x0,
                   jac=True, method="L-BFGS-B", options={"maxiter": 20000, "gtol": 1e-12, "ftol": 1e-15})
    assert res.fun == pytest.approx(m.energy, rel=1e-7)
    # weaker oracle: best multiple of the eigenfunction is above the true minimum
    sp = mg.eigenpair(alpha, G)
    nu = G.h * np.sum(sp.eigenfunction ** 4)
    amp_only = -(b - sp.lam) ** 2 / (2 * b * nu)
    assert m.energy <= amp_only + 1e-12


def test_z_interval_defining_property():
    z1, z2 = e1.z_interval(0.7, G)
    assert z1 < -0.3 < z2
    assert mg.lam(z1, G) == pytest.approx(0.7, abs=1e-8)
    assert mg.lam(z2, G) == pytest.approx(0.7, abs=1e-8)


def test_z2_negative_below_lambda_at_zero():
    b = 0.5 * (0.5698 + 0.668)
    z1, z2 = e1.z_interval(b, G)
    assert z2 < 0


def test_z_interval_rejects_b_below_lambda0():
    with pytest.raises(ValueError):
        e1.z_interval(0.5, G)


def test_alpha_minimum_b_07():
    am = e1.minimize_over_alpha(0.7, grid=G)
    assert am.defined and am.z1 < am.alpha0 < am.z2
    assert am.e1d < 0
    assert abs(am.fh_residual) < 1e-5
    # alpha0 beats its neighbours
    for da in (-0.01, 0.01):
        assert e1.b_energy(am.alpha0 + da, 0.7, G) > am.e1d


def test_alpha0_negative_when_b_below_lambda_at_zero():
    am = e1.minimize_over_alpha(0.62, grid=G)
    assert am.alpha0 < 0


def test_degenerate_b_below_lambda0():
    am = e1.minimize_over_alpha(0.5, grid=G)
    assert not am.defined and am.e1d == 0.0
    assert math.isnan(am.to_dict()["alpha0"])


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.5, 1.0), st.floats(0.3, 1.5))
def test_energy_nonpositive_and_sign_rule(alpha, b):
    m = e1.minimize_1d(alpha, b, G)
    assert m.energy <= 1e-14
    lam = mg.lam(alpha, G)
    if lam < b - 1e-6:
        assert m.energy < 0
    if lam >= b:
        assert m.energy == 0.0
