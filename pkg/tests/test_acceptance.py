"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Long-running (about half an hour).  Tables produced along the way are written
to ``results/acceptance`` next to the package.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from glzero import asym, cell, cli, energy1d, montgomery as mg, strip
from glzero import domain as dm
from glzero.io import TABLE_SCHEMAS, write_table

OUT = Path(__file__).resolve().parent.parent / "results" / "acceptance"
GRID = mg.Grid1D(12.0, 4801)
L_TABLE = (0.05, 0.1, 0.2, 0.5, 1.0)
B_TABLE = (0.05, 0.25, 0.5, 1.2)
KAPPAS = (8.0, 12.0, 16.0)
SIGMA = 0.5
DISC = dm.Geometry.disc(1.0)


def timed(fn, *a, **kw):
    t = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t


@pytest.fixture(scope="module")
def outdir():
    OUT.mkdir(parents=True, exist_ok=True)
    return OUT


@pytest.fixture(scope="module")
def ecurve(outdir):
    t = time.perf_counter()
    pts = [strip.estimate_E(L, (4.0, 8.0, 16.0)) for L in L_TABLE]
    secs = time.perf_counter() - t
    write_table(outdir / "ecurve.csv", TABLE_SCHEMAS["ecurve"] + ["exponent"], [p.to_dict() for p in pts])
    return pts, secs


@pytest.fixture(scope="module")
def gtable(outdir):
    rows = [cell.estimate_g(b, (8.0, 16.0, 32.0)) for b in B_TABLE]
    write_table(outdir / "gtable.csv", TABLE_SCHEMAS["gtable"],
                [{"b": r.b, "g": r.g_est, "envelope": r.envelope, "r_max": r.r_list[-1]} for r in rows])
    return cell.GTable(rows)


@pytest.fixture(scope="module")
def domain_runs():
    t = time.perf_counter()
    runs = {}
    for k in KAPPAS:
        prob = dm.build_problem(DISC, "x1", k, SIGMA * k * k)
        runs[k] = (prob, dm.minimize_gl(prob, "fixed"), dm.minimize_gl(prob, "full"))
    return runs, time.perf_counter() - t


def test_c01_montgomery_minimum(report):
    m, secs = timed(mg.minimize_lambda_extrapolated, GRID, tol=1e-6)
    ok = abs(m.lambda0 - 0.57) <= 0.01 and m.tau0 < 0 and secs < 10
    assert report(1, ok, f"lambda0={m.lambda0:.6f} tau0={m.tau0:.5f} ({secs:.1f}s)")


def test_c02_lambda_at_zero(report):
    (l0, _), secs = timed(mg.lambda_extrapolated, 0.0, GRID)
    lam0 = mg.minimize_lambda_extrapolated(GRID, tol=1e-6).lambda0
    bound = 0.75 ** (4 / 3) + 1e-3
    ok = l0 <= bound and lam0 < l0 and secs < 10
    assert report(2, ok, f"lambda(0)={l0:.6f} <= {bound:.6f}, lambda0={lam0:.6f} ({secs:.1f}s)")


def test_c03_monotone_on_positive_axis(report):
    taus = np.linspace(0.0, 5.0, 21)
    lams = np.array([mg.lambda_extrapolated(float(t), GRID)[0] for t in taus])
    d = np.diff(lams)
    ok = bool(np.all(d > 0))
    assert report(3, ok, f"21 samples, min increment {d.min():.3e}")


def test_c04_feynman_hellmann(report):
    t = time.perf_counter()
    a = energy1d.minimize_over_alpha(0.7, grid=GRID)
    b = energy1d.minimize_over_alpha(0.7, grid=GRID.refined())
    secs = time.perf_counter() - t
    ratio = abs(b.fh_residual) / abs(a.fh_residual)
    small = abs(a.fh_residual) <= 5e-3 and abs(b.fh_residual) <= 5e-3
    halves = 0.25 <= ratio <= 0.75
    ok = small and halves and secs < 60
    assert report(4, ok, f"residual {a.fh_residual:.2e} -> {b.fh_residual:.2e} on 2x grid, "
                         f"ratio {ratio:.2f} (want 0.5+-50%), bound {'ok' if small else 'violated'} ({secs:.1f}s)")


def test_c05_strip_trivial_threshold(report):
    t = time.perf_counter()
    vals = []
    for R in (4.0, 8.0):
        m = strip.minimize_strip(3.0, strip.StripGrid.default(3.0, R))
        vals.append(abs(m.energy) / (2 * R))
    secs = time.perf_counter() - t
    ok = max(vals) <= 1e-6 and secs < 120
    assert report(5, ok, f"L=3: |e|/2R = {vals[0]:.1e}, {vals[1]:.1e} ({secs:.1f}s)")


def test_c06_sandwich(report, ecurve):
    pts, _ = ecurve
    slack = [max(p.residuals, key=abs, default=0.0) for p in pts]
    viol = [p.E - min(p.per_length) - abs(s) for p, s in zip(pts, slack)]
    ok = all(v <= 0 for v in viol)
    assert report(6, ok, "E(L) - min e/2R: " + ", ".join(f"{p.L:g}:{p.E - min(p.per_length):.3g}" for p in pts))


def test_c07_band(report, ecurve):
    pts, secs = ecurve
    lam0 = mg.minimize_lambda_extrapolated(GRID, tol=1e-6).lambda0
    q = [-p.E * p.L ** (4 / 3) / (1 - lam0 * p.L ** (2 / 3)) for p in pts]
    ok = all(v > 0 for v in q) and max(q) / min(q) <= 10 and secs < 1800
    assert report(7, ok, "ratios " + ", ".join(f"{v:.3f}" for v in q)
                  + f"; max/min {max(q) / min(q):.2f} ({secs / 60:.1f} min)")


def test_c08_cell(report, gtable):
    rows = gtable.rows
    order = all(n <= d + 1e-12 for r in rows for n, d in zip(r.e_N, r.e_D))
    hi = next(r for r in rows if r.b == 1.2)
    lo = next(r for r in rows if r.b == 0.05)
    dens_hi = abs(hi.e_D[-1]) / hi.r_list[-1] ** 2
    in_range = all(-0.5 <= r.g_est <= 0 for r in rows)
    ok = order and dens_hi <= 1e-3 and in_range and lo.g_est <= -0.35
    detail = ", ".join(f"g({r.b:g})={r.g_est:.3f}+-C*{r.envelope:.3f}" for r in rows)
    assert report(8, ok, f"e_N<=e_D {order}; |e_D/r^2|(1.2,32)={dens_hi:.1e}; {detail}")


def test_c09_conjecture_report(report, outdir):
    lo, hi = strip.conjecture_window()
    Ls = (1.9, 2.0, 2.1)
    assert all(lo < L < hi for L in Ls)
    rows = [strip.check_conjecture(L, (8.0, 16.0, 32.0)) for L in Ls]
    (outdir / "conjecture.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    ok = all(math.isfinite(r["abs_gap"]) and math.isfinite(r["rel_gap"]) for r in rows)
    assert report(9, ok, "report only: " + ", ".join(f"L={r['L']:g} |E-E1D|={r['abs_gap']:.2e} "
                                                      f"(rel {r['rel_gap']:.2f})" for r in rows))


def _fd(f, x, d, eps=1e-4):
    # fourth-order central difference
    return (-f(x + 2 * eps * d) + 8 * f(x + eps * d) - 8 * f(x - eps * d) + f(x - 2 * eps * d)) / (12 * eps)


def test_c10_domain_invariants(report, domain_runs):
    runs, _ = domain_runs
    prob, fixed, full = runs[8.0]
    en = dm.DomainEnergy(prob)
    rng = np.random.default_rng(10)
    lat = prob.lattice
    psi = np.where(lat.free, fixed.psi + 0.1 * (rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape)), 0)
    vt = full.vartheta
    e1 = en.total(psi, vt)
    v, lat2 = en.lattice(vt).gauge_transform(psi, rng.uniform(-10, 10, lat.shape))
    e2 = en.total(v, (lat2.theta_x - lat.theta_x, lat2.theta_y - lat.theta_y))
    gauge = abs(e1 - e2) / abs(e1)

    fun = en.functional(vt)
    d = np.where(lat.free, rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape), 0)
    fd = _fd(fun.energy, psi, d)
    an = float(np.real(np.vdot(fun.gradient(psi), d)))
    g_psi = abs(fd - an) / abs(fd)
    dv = (rng.standard_normal(vt[0].shape), rng.standard_normal(vt[1].shape))
    flat = np.concatenate([vt[0].ravel(), vt[1].ravel()])
    dflat = np.concatenate([dv[0].ravel(), dv[1].ravel()])
    n0 = vt[0].size

    def f_vt(x):
        return en.total(psi, (x[:n0].reshape(vt[0].shape), x[n0:].reshape(vt[1].shape)))

    fd_v = _fd(f_vt, flat, dflat)
    gx, gy = en.grad_vartheta(psi, vt)
    an_v = float(np.sum(gx * dv[0]) + np.sum(gy * dv[1]))
    g_vt = abs(fd_v - an_v) / abs(fd_v)

    states = [s for _, f, u in runs.values() for s in (f, u)]
    sup = max(float(np.abs(s.psi).max()) for s in states)
    vir = max(s.residuals["virial"] for s in states)
    ok = gauge <= 1e-10 and g_psi <= 1e-6 and g_vt <= 1e-6 and sup <= 1 + 1e-6 and vir <= 1e-6
    assert report(10, ok, f"gauge {gauge:.1e}, grad psi {g_psi:.1e}, grad A {g_vt:.1e}, "
                          f"sup|psi| {sup:.6f}, virial {vir:.1e}")


def test_c11_concentration(report, domain_runs, outdir):
    runs, secs = domain_runs
    t = time.perf_counter()
    frac, mhat, bands = [], [], []
    for k, (prob, fixed, _) in runs.items():
        unit = k / prob.H
        dist = dm.node_distances(prob)
        frac.append(dm.mass_fraction_within(fixed, prob, 4 * unit, dist))
        prof = dm.decay_profile(fixed, prob, dist=dist)
        mhat.append(prof.m_hat)
        prob2 = dm.build_problem(DISC, "x1", k, 2 * prob.H)
        prof2 = dm.decay_profile(dm.minimize_gl(prob2, "fixed"), prob2)
        bands.append((prof.band90, prof2.band90))
    secs += time.perf_counter() - t
    ok = (all(f >= 0.8 for f in frac) and all(m > 0 for m in mhat)
          and all(b2 < b1 for b1, b2 in bands) and secs < 3600)
    detail = "; ".join(f"kappa={k:g}: mass {f:.3f}, m_hat {m:.2f}, band90 {b1:.3f}->{b2:.3f}"
                       for k, f, m, (b1, b2) in zip(runs, frac, mhat, bands))
    assert report(11, ok, f"{detail} ({secs:.0f}s)")


def test_c12_asymptotic_trend(report, domain_runs, ecurve, gtable, outdir):
    runs, _ = domain_runs
    pts, _ = ecurve
    ec = asym.ECurve.from_points(pts)
    gc = asym.GCurve.from_table(gtable)
    reps = [asym.verify(prob, fixed, ec, gc) for prob, fixed, _ in runs.values()]
    gaps = asym.sweep_trend(reps)
    mags = [dm.magnetic_energy(full, prob).value / (prob.kappa ** 3 / prob.H) for prob, _, full in runs.values()]
    write_table(outdir / "verify.csv", TABLE_SCHEMAS["verify"],
                [{"kappa": r.kappa, "H": r.H, "regime": r.regime.tag, "E_computed": r.E_computed,
                  "C0": r.C0_formula, "relative_gap": r.relative_gap, "mass_gap": r.mass_gap} for r in reps])
    ok = asym.nonincreasing_with_slack(gaps) and all(b < a for a, b in zip(mags, mags[1:]))
    assert report(12, ok, "gaps " + ", ".join(f"{g:.4f}" for g in gaps)
                  + "; magnetic/(kappa^3/H) " + ", ".join(f"{m:.2e}" for m in mags))


def test_c13_determinism(report, tmp_path, monkeypatch):
    conf = tmp_path / "sweep.json"
    conf.write_text(json.dumps({"kind": "domain", "grid": {"kappa": [4.0, 6.0], "sigma": [0.5, 1.0]},
                                "fixed": {"h": 0.08}, "seed": 7}))
    outs = []
    for i, threads in enumerate(("1", "1", "2")):
        monkeypatch.setenv("GLZERO_THREADS", threads)
        out = tmp_path / f"s{i}.csv"
        assert cli.main(["sweep", "--config", str(conf), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    strip_args = ["sweep", "--kind", "strip", "--grid", "L=0.5,1.0", "--set", "R=2,4,8", "--seed", "3"]
    for i in range(2):
        out = tmp_path / f"t{i}.csv"
        assert cli.main(strip_args + ["--out", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] == outs[2] and outs[3] == outs[4]
    assert report(13, ok, "domain sweep rerun (1 and 2 workers) and strip sweep rerun byte-identical")
