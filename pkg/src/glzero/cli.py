"""Command-line entry point ``glzero``.

Exit codes: 0 success, 2 invalid input or usage, 1 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .io import ResultEnvelope, read_field, read_table, write_field, write_table, TABLE_SCHEMAS

log = logging.getLogger("glzero")


def floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return vals


def pair(text: str) -> tuple[float, float]:
    vals = floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return vals[0], vals[1]


def positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def job_seed(seed: int, index: int) -> int:
    """Per-job seed derived from the run seed and the job's grid index."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    timings: bool = True

    def __post_init__(self) -> None:
        for k, v in self.params.items():
            if k.startswith("tol") and v is not None and not v > 0:
                raise ValueError(f"{k} must be positive")


class Timer:
    def __init__(self):
        self.t0 = time.perf_counter()

    def __call__(self) -> float:
        return round(time.perf_counter() - self.t0, 3)


def envelope(cfg: RunConfig, payload: dict, seconds: float) -> ResultEnvelope:
    return ResultEnvelope(cfg.command, asdict(cfg), payload, {"wall_s": seconds} if cfg.timings else {})


# ------------------------------------------------------------------ commands


def cmd_montgomery(args, cfg) -> int:
    from . import montgomery as mg

    t = Timer()
    grid = mg.Grid1D(args.T, args.n)
    if args.minimize:
        res = mg.minimize_lambda_extrapolated(grid, tol=args.tol)
        payload = res.to_dict()
        payload["lambda_at_0"] = mg.lambda_extrapolated(0.0, grid)[0]
        envelope(cfg, payload, t()).write(args.out or "min.json")
        return 0
    lo, hi = args.tau_range
    rows = []
    for tau in np.linspace(lo, hi, args.samples):
        val, err = mg.lambda_extrapolated(float(tau), grid)
        rows.append({"tau": float(tau), "lambda": val, "err": err})
    write_table(args.out or "curve.csv", TABLE_SCHEMAS["curve"], rows)
    return 0


def e1d_row(b: float, tol: float) -> dict:
    from . import energy1d

    return energy1d.minimize_over_alpha(b, tol).to_dict()


def cmd_e1d(args, cfg) -> int:
    t = Timer()
    if args.b is not None:
        envelope(cfg, e1d_row(args.b, args.tol), t()).write(args.out or "e1d.json")
        return 0
    if args.b_range is None:
        raise ValueError("give --b or --b-range")
    rows = [e1d_row(float(b), args.tol) for b in np.linspace(*args.b_range, args.samples)]
    write_table(args.out or "e1d.csv", TABLE_SCHEMAS["e1d"], rows)
    return 0


def cmd_strip(args, cfg) -> int:
    from . import strip

    t = Timer()
    if args.conjecture:
        if args.L is None:
            raise ValueError("--conjecture needs --L")
        out = strip.check_conjecture(args.L, args.R, args.tol, h=args.h, seed=cfg.seed)
        envelope(cfg, out, t()).write(args.out or "conjecture.json")
        return 0
    if args.table:
        lo, hi = args.L_range
        if not 0 < lo < hi:
            raise ValueError("--L-range needs 0 < a < b")
        rows = []
        for L in np.geomspace(lo, hi, args.samples):
            p = strip.estimate_E(float(L), args.R, args.tol, h=args.h, seed=cfg.seed)
            rows.append(p.to_dict())
        write_table(args.out or "ecurve.csv", TABLE_SCHEMAS["ecurve"] + ["exponent"], rows)
        return 0
    if args.L is None:
        raise ValueError("give --L, --table or --conjecture")
    p = strip.estimate_E(args.L, args.R, args.tol, h=args.h, seed=cfg.seed)
    envelope(cfg, p.to_dict(), t()).write(args.out or "E.json")
    return 0


def cmd_cell(args, cfg) -> int:
    from . import cell

    bs = [args.b] if args.b is not None else list(np.linspace(*args.b_range, args.samples))
    rows = []
    for b in bs:
        row = cell.estimate_g(float(b), args.r, args.tol, seed=cfg.seed)
        rows.append({"b": row.b, "g": row.g_est, "envelope": row.envelope, "r_max": row.r_list[-1],
                     "g_fit": row.g_fit, "fit_c": row.fit_c, "e_D_max": row.e_D[-1],
                     "e_N_max": row.e_N[-1] if row.e_N else float("nan")})
    write_table(args.out or "g.csv", TABLE_SCHEMAS["gtable"] + ["g_fit", "fit_c", "e_D_max", "e_N_max"], rows)
    return 0


def _geometry(args):
    from .domain import Geometry

    if args.geometry == "disc":
        return Geometry.disc(args.radius)
    if args.rect is None:
        raise ValueError("rectangle geometry needs --rect x0,x1,y0,y1")
    return Geometry.rectangle(*args.rect)


def _H(args) -> float:
    if (args.H is None) == (args.sigma is None):
        raise ValueError("give exactly one of --H and --sigma")
    return args.H if args.H is not None else args.sigma * args.kappa ** 2


def domain_summary(problem, state, dist=None) -> dict:
    from . import domain as dm

    out = {"problem": problem.to_dict(), "state": state.to_dict(),
           "order_mass": dm.order_mass(state, problem), "order_mass2": dm.order_mass2(state, problem),
           "magnetic_energy": dm.magnetic_energy(state, problem).value,
           "sup_psi": float(np.abs(state.psi).max())}
    if problem.gamma:
        dist = dm.node_distances(problem) if dist is None else dist
        dp = dm.decay_profile(state, problem, dist=dist)
        unit = problem.kappa / problem.H
        out["decay"] = dp.to_dict()
        out["mass_fraction_4"] = dm.mass_fraction_within(state, problem, 4 * unit, dist)
        out["m_hat"] = dp.m_hat
        out["band90"] = dp.band90
    return out


def save_state(path, problem, state, seed: int) -> None:
    meta = {"geometry": problem.geometry.to_dict(), "B0": str(problem.B0), "kappa": problem.kappa,
            "H": problem.H, "h": problem.h, "mode": state.mode, "seed": seed}
    write_field(path, state.psi, meta)
    if state.vartheta is not None:
        p = Path(path)
        write_field(p.with_name(p.stem + "_ax" + p.suffix), state.vartheta[0].astype(complex), meta)
        write_field(p.with_name(p.stem + "_ay" + p.suffix), state.vartheta[1].astype(complex), meta)


def load_state(path, problem):
    from . import domain as dm

    psi, meta = read_field(path)
    if psi.shape != problem.lattice.shape:
        raise ValueError(f"state shape {psi.shape} does not match the problem mesh {problem.lattice.shape}")
    p = Path(path)
    ax = p.with_name(p.stem + "_ax" + p.suffix)
    vt = None
    if meta.get("mode") == "full" and ax.exists():
        vt = (read_field(ax)[0].real, read_field(p.with_name(p.stem + "_ay" + p.suffix))[0].real)
    en = dm.DomainEnergy(problem)
    return dm._state(en, psi, vt, meta.get("mode", "fixed_A"), True, 0)


def cmd_domain(args, cfg) -> int:
    from . import domain as dm

    t = Timer()
    problem = dm.build_problem(_geometry(args), args.B0, args.kappa, _H(args), h=args.h)
    state = dm.minimize_gl(problem, args.mode, args.tol, seed=cfg.seed)
    if args.out:
        save_state(args.out, problem, state, cfg.seed)
    summary = domain_summary(problem, state)
    envelope(cfg, summary, t()).write(args.report or "report.json")
    if args.decay_csv and "decay" in summary:
        d = summary["decay"]
        rows = [{"t_lo": a, "t_hi": b, "mass": m, "area": ar}
                for a, b, m, ar in zip(d["edges"][:-1], d["edges"][1:], d["mass"], d["area"])]
        write_table(args.decay_csv, TABLE_SCHEMAS["decay"], rows)
    if args.problem_out:
        envelope(cfg, problem.to_dict(), t()).write(args.problem_out)
    return 0


def _curves(args):
    from .asym import ECurve, GCurve

    _, erows = read_table(args.ecurve)
    _, grows = read_table(args.gtable)
    ec = ECurve(np.array([r["L"] for r in erows]), np.array([r["E"] for r in erows]))
    gc = GCurve(np.array([r["b"] for r in grows]), np.array([r["g"] for r in grows]))
    return ec, gc


def cmd_verify(args, cfg) -> int:
    from . import asym
    from . import domain as dm

    t = Timer()
    ec, gc = _curves(args)
    if args.problem:
        env = ResultEnvelope.read(args.problem)
        pd = env.payload.get("problem", env.payload)
        base = dm.DomainProblem.from_dict(pd)
    elif args.state:
        _, meta = read_field(args.state)
        base = dm.DomainProblem.from_dict(meta)
    else:
        raise ValueError("verify needs --problem or --state")
    reports = []
    if args.kappa_sweep:
        sigma = base.sigma
        for i, k in enumerate(args.kappa_sweep):
            pr = dm.build_problem(base.geometry, str(base.B0), k, sigma * k * k)
            st = dm.minimize_gl(pr, args.mode, args.tol, seed=job_seed(cfg.seed, i))
            reports.append(asym.verify(pr, st, ec, gc))
    else:
        if not args.state:
            raise ValueError("verify without --kappa-sweep needs --state")
        st = load_state(args.state, base)
        reports.append(asym.verify(base, st, ec, gc))
    gaps = asym.sweep_trend(reports)
    payload = {"reports": [r.to_dict() for r in reports], "gaps": gaps,
               "trend_ok": asym.nonincreasing_with_slack(gaps)}
    envelope(cfg, payload, t()).write(args.out or "report.json")
    if args.csv:
        rows = [{"kappa": r.kappa, "H": r.H, "regime": r.regime.tag, "E_computed": r.E_computed,
                 "C0": r.C0_formula, "relative_gap": r.relative_gap, "mass_gap": r.mass_gap} for r in reports]
        write_table(args.csv, TABLE_SCHEMAS["verify"], rows)
    return 0


# --------------------------------------------------------------------- sweep

SWEEP_KINDS = ("montgomery", "e1d", "strip", "cell", "domain")


def run_job(kind: str, params: dict, seed: int) -> dict:
    """One sweep point; returns a flat row (no timing, so reruns are identical)."""
    if kind == "montgomery":
        from . import montgomery as mg

        grid = mg.Grid1D(params.get("T", 12.0), int(params.get("n", 4801)))
        val, err = mg.lambda_extrapolated(float(params["tau"]), grid)
        return {"lambda": val, "err": err}
    if kind == "e1d":
        row = e1d_row(float(params["b"]), float(params.get("tol", 1e-8)))
        return {k: v for k, v in row.items() if k != "b"}
    if kind == "strip":
        from . import strip

        R = params.get("R", [4.0, 8.0, 16.0])
        p = strip.estimate_E(float(params["L"]), R, float(params.get("tol", 1e-3)), seed=seed)
        return {"E": p.E, "err": p.err, "fit_c": p.fit_c, "exponent": p.exponent}
    if kind == "cell":
        from . import cell

        row = cell.estimate_g(float(params["b"]), params.get("r", [8.0, 16.0, 32.0]),
                              float(params.get("tol", 1e-4)), seed=seed)
        return {"g": row.g_est, "envelope": row.envelope, "r_max": row.r_list[-1]}
    if kind == "domain":
        from . import domain as dm

        k = float(params["kappa"])
        H = float(params["H"]) if "H" in params else float(params.get("sigma", 0.5)) * k * k
        geom = dm.Geometry.disc(float(params.get("radius", 1.0)))
        pr = dm.build_problem(geom, str(params.get("B0", "x1")), k, H, h=params.get("h"))
        st = dm.minimize_gl(pr, str(params.get("mode", "fixed")), float(params.get("tol", 1e-4)), seed=seed)
        s = domain_summary(pr, st)
        return {"H": H, "energy": st.energy_total, "magnetic": s["magnetic_energy"],
                "virial": st.residuals["virial"], "psi_eq": st.residuals["psi_eq"],
                "sup_psi": s["sup_psi"], "mass_fraction_4": s.get("mass_fraction_4", float("nan")),
                "m_hat": s.get("m_hat", float("nan")), "band90": s.get("band90", float("nan"))}
    raise ValueError(f"unknown sweep kind {kind!r}")


def _job(arg):
    kind, params, seed = arg
    try:
        return run_job(kind, params, seed), "ok"
    except Exception as exc:  # recorded per row; the sweep exits 1
        return {}, f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")


def expand_grid(grid: dict) -> list[dict]:
    if not grid:
        return []
    keys = sorted(grid)
    points = [{}]
    for k in keys:
        vals = grid[k] if isinstance(grid[k], list) else [grid[k]]
        points = [dict(p, **{k: v}) for p in points for v in vals]
    return sorted(points, key=lambda p: tuple(p[k] for k in keys))


def sweep(kind: str, grid: dict, fixed: dict, seed: int, threads: int = 1) -> tuple[list[str], list[dict], bool]:
    if kind not in SWEEP_KINDS:
        raise ValueError(f"sweep kind must be one of {SWEEP_KINDS}")
    points = expand_grid(grid)
    if not points:
        raise ValueError("sweep grid is empty")
    jobs = [(kind, dict(fixed, **p), job_seed(seed, i)) for i, p in enumerate(points)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    keys = sorted(grid)
    extra: list[str] = []
    rows = []
    for p, (res, status) in zip(points, results):
        for k in res:
            if k not in extra and k not in keys:
                extra.append(k)
        rows.append(dict(p, **res, status=status))
    columns = keys + extra + ["status"]
    return columns, rows, all(r["status"] == "ok" for r in rows)


def parse_assignments(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            vals = [float(x) for x in v.split(",")]
            out[k] = vals if len(vals) > 1 else vals[0]
        except ValueError:
            out[k] = v
    return out


def cmd_sweep(args, cfg) -> int:
    if args.config:
        conf = json.loads(Path(args.config).read_text())
        kind, grid, fixed = conf["kind"], conf.get("grid", {}), conf.get("fixed", {})
        seed = int(conf.get("seed", cfg.seed))
    else:
        kind, seed = args.kind, cfg.seed
        grid = {k: (v if isinstance(v, list) else [v]) for k, v in parse_assignments(args.grid).items()}
        fixed = parse_assignments(args.set)
    if not kind:
        raise ValueError("sweep needs --kind or --config")
    threads = max(1, int(os.environ.get("GLZERO_THREADS", "1")))
    columns, rows, ok = sweep(kind, grid, fixed, seed, threads)
    write_table(args.out or "sweep.csv", columns, rows)
    if not ok:
        log.error("some sweep points failed; see the status column")
    return 0 if ok else 1


def cmd_plot(args, cfg) -> int:
    from .plot import render

    header, rows = read_table(args.csv)
    Path(args.out or Path(args.csv).with_suffix(".svg")).write_text(render(header, rows, args.kind))
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glzero", description="Ginzburg-Landau energies near a vanishing field")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--no-timings", action="store_true", help="omit wall times from JSON outputs")
    common.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("montgomery", parents=[common], help="lowest eigenvalue of the Montgomery family")
    p.add_argument("--tau-range", type=pair, default=(-2.0, 2.0))
    p.add_argument("--samples", type=int, default=41)
    p.add_argument("--minimize", action="store_true")
    p.add_argument("--tol", type=positive, default=1e-6)
    p.add_argument("--T", type=positive, default=12.0)
    p.add_argument("--n", type=int, default=4801)
    p.set_defaults(func=cmd_montgomery)

    p = sub.add_parser("e1d", parents=[common], help="1D reduced energy and alpha0")
    p.add_argument("--b", type=positive)
    p.add_argument("--b-range", type=pair)
    p.add_argument("--samples", type=int, default=11)
    p.add_argument("--tol", type=positive, default=1e-8)
    p.set_defaults(func=cmd_e1d)

    p = sub.add_parser("strip", parents=[common], help="strip energy E(L)")
    p.add_argument("--L", type=positive)
    p.add_argument("--R", type=floats, default=[4.0, 8.0, 16.0])
    p.add_argument("--table", action="store_true")
    p.add_argument("--L-range", type=pair, default=(0.05, 3.0))
    p.add_argument("--samples", type=int, default=24)
    p.add_argument("--conjecture", action="store_true")
    p.add_argument("--tol", type=positive, default=1e-3)
    p.add_argument("--h", type=positive)
    p.set_defaults(func=cmd_strip)

    p = sub.add_parser("cell", parents=[common], help="cell energy g(b)")
    p.add_argument("--b", type=positive)
    p.add_argument("--b-range", type=pair, default=(0.05, 1.3))
    p.add_argument("--samples", type=int, default=26)
    p.add_argument("--r", type=floats, default=[8.0, 16.0, 32.0])
    p.add_argument("--tol", type=positive, default=1e-4)
    p.set_defaults(func=cmd_cell)

    p = sub.add_parser("domain", parents=[common], help="ground state on a disc or rectangle")
    p.add_argument("--geometry", choices=["disc", "rectangle"], default="disc")
    p.add_argument("--radius", type=positive, default=1.0)
    p.add_argument("--rect", type=floats)
    p.add_argument("--B0", default="x1")
    p.add_argument("--kappa", type=positive, required=True)
    p.add_argument("--sigma", type=positive)
    p.add_argument("--H", type=positive)
    p.add_argument("--h", type=positive)
    p.add_argument("--mode", choices=["fixed", "full"], default="fixed")
    p.add_argument("--tol", type=positive, default=1e-4)
    p.add_argument("--report")
    p.add_argument("--decay-csv")
    p.add_argument("--problem-out")
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("verify", parents=[common], help="compare solves with the leading-order formulas")
    p.add_argument("--problem")
    p.add_argument("--state")
    p.add_argument("--ecurve", required=True)
    p.add_argument("--gtable", required=True)
    p.add_argument("--kappa-sweep", type=floats)
    p.add_argument("--mode", choices=["fixed", "full"], default="fixed")
    p.add_argument("--tol", type=positive, default=1e-4)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="parameter grid over one model")
    p.add_argument("--config", help="JSON {kind, grid: {name: [values]}, fixed: {...}, seed}")
    p.add_argument("--kind", choices=SWEEP_KINDS)
    p.add_argument("--grid", nargs="*", help="name=v1,v2,...")
    p.add_argument("--set", nargs="*", help="name=value held fixed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", parents=[common], help="SVG figure from a CSV table")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", choices=sorted(TABLE_SCHEMAS))
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    from .domain import ProblemError
    from .lattice import ConvergenceError

    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "command", "seed", "out", "no_timings", "log_level")}
    try:
        cfg = RunConfig(args.command, params, {"out": args.out}, args.seed, not args.no_timings)
        return args.func(args, cfg)
    except (ValueError, ProblemError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"glzero {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, RuntimeError, ArithmeticError) as exc:
        print(f"glzero {args.command}: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
