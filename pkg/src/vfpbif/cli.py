"""Command-line front end.

Subcommands: jn, dispersion {solve,scan,invert}, c3 {compute,sweep},
simulate, mellin check, regimes map.  Every command writes a RunManifest into
--out; grid commands write CSV plus a rendered figure next to it (disable
figures with --no-plot).  VFP_NUM_THREADS caps the sweep worker pool.

Exit codes: 0 ok, 2 domain/config error or stable bracket, 3 precision
failure, 4 complex branch, 5 no saturation, 6 under-resolved run.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .asymptotics import (
    classify_regime,
    dirichlet_phi,
    fit_power_law,
    mellin_prediction,
)
from .dispersion import (
    ModelParams,
    c_for_growth_rate,
    eval_dispersion,
    find_root,
)
from .errors import (
    ComplexBranch,
    DegenerateInput,
    DomainError,
    NoSaturation,
    NoSignChange,
    NotARoot,
    PrecisionError,
    SingularSystem,
    UnderResolved,
)
from .manifold import amplitude_balance, landau_breakdown
from .reporting import (
    ManifestWriter,
    json17,
    render_mellin,
    render_regime_map,
    render_scan,
    render_sweep,
    render_timeseries,
    write_csv,
    write_json,
)
from .simulator import SimConfig, run, stable_dt
from .special import eval_jn

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_PRECISION = 3
EXIT_COMPLEX_BRANCH = 4
EXIT_NO_SATURATION = 5
EXIT_UNDER_RESOLVED = 6


def _workers():
    env = os.environ.get("VFP_NUM_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _grid(spec3):
    lo, hi, n = float(spec3[0]), float(spec3[1]), int(spec3[2])
    if n < 1 or lo <= 0 or hi <= 0:
        raise DomainError("grid must be LO HI N with positive bounds")
    return np.geomspace(lo, hi, n) if n > 1 else np.array([lo])


def _print(obj):
    sys.stdout.write(json17(obj) + "\n")


# ---------------------------------------------------------------- jn


def cmd_jn(args):
    if args.mu is not None:
        mu = args.mu
        y = args.y
    elif args.gamma is not None and args.lam is not None:
        y = 1.0 / args.gamma
        mu = -args.lam / args.gamma
    else:
        raise DomainError("provide --mu with --y, or the --gamma/--lambda pair")
    ev = eval_jn(args.n, y, mu, tol=args.tol)
    out = {
        "n": ev.n,
        "y": ev.y,
        "mu": ev.mu,
        "log_value": ev.log_value,
        "value_if_representable": ev.value if np.isfinite(ev.value) else None,
        "error_estimate": ev.quadrature_error,
    }
    _print(out)
    mw = ManifestWriter("jn", {"n": args.n, "y": y, "mu": mu, "tol": args.tol},
                        args.out)
    write_json(mw.path(f"jn_{mw.hash}.json"), out)
    mw.finalize()
    return EXIT_OK


# ---------------------------------------------------------- dispersion


def cmd_dispersion(args):
    if args.mode == "invert":
        c = c_for_growth_rate(args.gamma, args.lam, k=args.k)
        _print({"gamma": args.gamma, "lam": args.lam, "k": args.k, "c": c})
        mw = ManifestWriter(
            "dispersion-invert",
            {"gamma": args.gamma, "lam": args.lam, "k": args.k}, args.out)
        write_json(mw.path(f"invert_{mw.hash}.json"), {"c": c})
        mw.finalize()
        return EXIT_OK

    params = ModelParams(c=args.c, gamma=args.gamma, k=args.k)
    if args.mode == "solve":
        root = find_root(params, tuple(args.bracket))
        out = {
            "lam": root.lam,
            "residual": root.residual,
            "d_lambda": root.d_lambda,
            "bracket": list(root.bracket),
        }
        _print(out)
        mw = ManifestWriter(
            "dispersion-solve",
            {"c": args.c, "gamma": args.gamma, "k": args.k,
             "bracket": list(args.bracket)}, args.out)
        write_json(mw.path(f"root_{mw.hash}.json"), out)
        mw.finalize()
        return EXIT_OK

    # scan
    lams = _grid(args.lambda_grid)
    vals = [eval_dispersion(params, l) for l in lams]
    mw = ManifestWriter(
        "dispersion-scan",
        {"c": args.c, "gamma": args.gamma, "k": args.k,
         "lambda_grid": [float(x) for x in args.lambda_grid]}, args.out)
    write_csv(mw.path(f"scan_{mw.hash}.csv"), ["lambda", "Lambda_value"],
              list(zip(lams, vals)))
    if not args.no_plot:
        render_scan(mw.path(f"scan_{mw.hash}.png"), lams, vals)
    mw.finalize()
    return EXIT_OK


# ------------------------------------------------------------------ c3


def _c3_point(task):
    gamma, lam, n_cap = task
    bd = landau_breakdown(gamma, lam=lam, N=n_cap)
    c = c_for_growth_rate(gamma, lam)
    return (
        gamma, lam, c,
        bd.c3_1.real, bd.c3_2.real, bd.c3_3.real, bd.c3.real,
        bd.c5_partial.real, bd.regime, bd.n_max_used, bd.tail_bound,
    )


def _breakdown_dict(bd, gamma, lam, c):
    return {
        "gamma": gamma,
        "lam": lam,
        "c": c,
        "c3_1_re": bd.c3_1.real, "c3_1_im": bd.c3_1.imag,
        "c3_2_re": bd.c3_2.real, "c3_2_im": bd.c3_2.imag,
        "c3_3_re": bd.c3_3.real, "c3_3_im": bd.c3_3.imag,
        "c3_re": bd.c3.real, "c3_im": bd.c3.imag,
        "c5_partial_re": bd.c5_partial.real, "c5_partial_im": bd.c5_partial.imag,
        "regime": bd.regime,
        "n_max_used": bd.n_max_used,
        "tail_bound": bd.tail_bound,
        "a_sat_balance": amplitude_balance(lam, bd.c3),
    }


def cmd_c3(args):
    if args.mode == "compute":
        if args.c is not None and args.c <= 0.0:
            raise DegenerateInput(
                "c = 0 carries no mean field and no instability; "
                "coupling must be positive"
            )
        if args.lam is None and args.c is None:
            raise DomainError("provide --lambda (c inferred) or --c")
        bd = landau_breakdown(args.gamma, lam=args.lam, c=args.c, N=args.N)
        if args.lam is not None:
            c = args.c if args.c is not None else c_for_growth_rate(
                args.gamma, args.lam)
            lam = args.lam
        else:
            root = find_root(ModelParams(c=args.c, gamma=args.gamma),
                             (1e-8, 1.0))
            c, lam = args.c, root.lam
        out = _breakdown_dict(bd, args.gamma, lam, c)
        _print(out)
        mw = ManifestWriter(
            "c3-compute",
            {"gamma": args.gamma, "lam": args.lam, "c": args.c}, args.out)
        write_json(mw.path(f"c3_{mw.hash}.json"), out)
        mw.finalize()
        return EXIT_OK

    # sweep
    gammas = _grid(args.gamma_grid) if args.gamma_grid else [args.gamma]
    lams = _grid(args.lambda_grid) if args.lambda_grid else [args.lam]
    if gammas[0] is None or lams[0] is None:
        raise DomainError("sweep needs --gamma-grid/--gamma and --lambda-grid/--lambda")
    tasks = sorted((float(g), float(l), args.N) for g in gammas for l in lams)
    failures = []
    rows = []
    workers = _workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for task, result in zip(tasks, pool.map(_c3_point_safe, tasks)):
                if isinstance(result, str):
                    failures.append((task[0], task[1], result))
                else:
                    rows.append(result)
    else:
        for task in tasks:
            result = _c3_point_safe(task)
            if isinstance(result, str):
                failures.append((task[0], task[1], result))
            else:
                rows.append(result)
    rows.sort(key=lambda r: (r[0], r[1]))
    mw = ManifestWriter(
        "c3-sweep",
        {
            "gamma_grid": [float(g) for g in gammas],
            "lambda_grid": [float(l) for l in lams],
            "N": args.N,
        },
        args.out,
    )
    header = ["gamma", "lambda", "c", "c3_1", "c3_2", "c3_3", "c3",
              "c5_partial", "regime", "n_max_used", "tail_bound"]
    write_csv(mw.path(f"c3_sweep_{mw.hash}.csv"), header, rows)

    slopes = {}
    if len(gammas) >= 4:
        for lam in lams:
            pts = [r for r in rows if r[1] == float(lam)]
            if len(pts) >= 4:
                fit = fit_power_law([(r[0], abs(r[3])) for r in pts])
                slopes[f"c3_1_vs_gamma_at_lam_{lam:g}"] = {
                    "exponent": fit.exponent, "r_squared": fit.r_squared}
    if len(lams) >= 4:
        for g in gammas:
            pts = [r for r in rows if r[0] == float(g)]
            if len(pts) >= 4:
                fit = fit_power_law([(r[1], abs(r[3])) for r in pts])
                slopes[f"c3_1_vs_lambda_at_gamma_{g:g}"] = {
                    "exponent": fit.exponent, "r_squared": fit.r_squared}
    if slopes:
        write_json(mw.path(f"c3_sweep_slopes_{mw.hash}.json"), slopes)
    if not args.no_plot and rows:
        axis = "gamma" if len(gammas) > 1 else "lambda"
        render_sweep(mw.path(f"c3_sweep_{mw.hash}.png"), rows, axis)
    mw.finalize()
    if failures:
        for g, l, msg in failures:
            sys.stderr.write(f"precision failure at gamma={g:g}, lam={l:g}: {msg}\n")
        return EXIT_PRECISION
    return EXIT_OK


def _c3_point_safe(task):
    try:
        return _c3_point(task)
    except (PrecisionError, SingularSystem) as exc:
        return str(exc)


# ------------------------------------------------------------ simulate


def _sim_config(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    for key in ("gamma", "lam", "c", "K", "N", "dt", "t_end", "eps0",
                "record_every"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    missing = [k for k in ("gamma",) if k not in cfg]
    if missing:
        raise DomainError(f"simulate config missing fields: {missing}")
    if "lam" not in cfg and "c" not in cfg:
        raise DomainError("simulate config needs lam (c inferred) or c")
    return cfg


def cmd_simulate(args):
    from .eigensystem import solve_eigensystem, suggested_truncation

    cfg = _sim_config(args)
    gamma = float(cfg["gamma"])
    if "lam" in cfg:
        c = float(cfg.get("c") or c_for_growth_rate(gamma, float(cfg["lam"])))
        lam = float(cfg["lam"])
    else:
        c = float(cfg["c"])
        lam = None
    params = ModelParams(c=c, gamma=gamma)
    K = int(cfg.get("K", 8))

    lam_known = lam
    if lam_known is None:
        try:
            lam_known = find_root(params, (1e-8, 1.0)).lam
        except NoSignChange:
            lam_known = None  # stable: simulate the decay and report

    if "N" in cfg:
        N = int(cfg["N"])
    elif lam_known is not None:
        N = suggested_truncation(gamma, lam_known, k_max=K)
    else:
        N = 96
    dt = float(cfg.get("dt") or stable_dt(K, N))
    eps0 = float(cfg.get("eps0", 0.0)) or None

    bd = None
    if lam_known is not None:
        try:
            bd = landau_breakdown(gamma, lam=lam_known, c=c, series_check=False)
        except Exception:
            bd = None
    if eps0 is None:
        if bd is not None:
            eps0 = 1e-4 * amplitude_balance(lam_known, bd.c3)
        else:
            eps0 = 1e-8
    t_end = float(cfg.get("t_end") or (
        (np.log(1e5) / lam_known) * 1.5 if lam_known else 50.0))

    sim = SimConfig(params=params, K=K, N=N, dt=dt, t_end=t_end, eps0=eps0,
                    record_every=int(cfg.get("record_every", 1)))
    mw = ManifestWriter(
        "simulate",
        {"gamma": gamma, "c": c, "lam": lam, "K": K, "N": N, "dt": dt,
         "t_end": t_end, "eps0": eps0,
         "record_every": sim.record_every},
        args.out,
    )

    def _write_outputs(report, code):
        hist = report.history
        write_csv(
            mw.path(f"timeseries_{mw.hash}.csv"),
            ["t", "re_phi1", "im_phi1", "abs_phi1", "abs_phi2", "tail_ratio"],
            [tuple(row) for row in hist],
        )
        rep = {
            "fitted_growth_rate": report.fitted_growth_rate,
            "fitted_c3": report.fitted_c3,
            "A_sat": report.A_sat,
            "method_flags": report.method_flags,
            "exit_code": code,
        }
        if bd is not None:
            rep["module_c3_re"] = bd.c3.real
            rep["predicted_a_sat"] = amplitude_balance(lam_known, bd.c3)
        write_json(mw.path(f"report_{mw.hash}.json"), rep)
        if not args.no_plot:
            render_timeseries(mw.path(f"timeseries_{mw.hash}.png"), hist,
                              lam=report.fitted_growth_rate, a_sat=report.A_sat)
        mw.finalize()
        _print(rep)

    if lam_known is not None:
        eig = solve_eigensystem(params, lam=lam_known, N=N, check=False)
        G = eig.G
    else:
        from .eigensystem import SpectralVector

        seed = np.zeros(N + 1, dtype=complex)
        seed[0] = 1.0
        G = SpectralVector(seed)
    try:
        report = run(sim, G=G, lam_hint=lam_known)
    except NoSaturation as exc:
        _write_outputs(exc.report, EXIT_NO_SATURATION)
        return EXIT_NO_SATURATION
    except UnderResolved as exc:
        _write_outputs(exc.report, EXIT_UNDER_RESOLVED)
        return EXIT_UNDER_RESOLVED
    _write_outputs(report, EXIT_OK)
    return EXIT_OK


# -------------------------------------------------------------- mellin


def cmd_mellin(args):
    lams = _grid(args.lambda_grid)
    exponent, coeff = mellin_prediction(args.alpha)
    rows = []
    scaled = []
    tol = args.tol
    for lam in lams:
        plus = dirichlet_phi(args.alpha, "plus", lam, tol=tol)
        minus = dirichlet_phi(args.alpha, "minus", lam, tol=max(tol, 1e-8))
        s = lam**exponent * plus
        scaled.append(s)
        rows.append((lam, plus, minus, s, coeff))
    mw = ManifestWriter(
        "mellin-check",
        {"alpha": args.alpha, "lambda_grid": [float(x) for x in args.lambda_grid],
         "tol": tol},
        args.out,
    )
    write_csv(
        mw.path(f"mellin_{mw.hash}.csv"),
        ["lambda", "phi_plus", "phi_minus", "scaled_plus", "prediction"],
        rows,
    )
    if not args.no_plot:
        render_mellin(mw.path(f"mellin_{mw.hash}.png"), lams, scaled, coeff)
    mw.finalize()
    final_dev = abs(scaled[-1] / coeff - 1.0)
    verdict = "converged" if final_dev < 0.02 else "not-converged"
    _print({
        "alpha": args.alpha,
        "exponent": exponent,
        "prediction": coeff,
        "scaled_at_smallest_lambda": scaled[int(np.argmin(lams))],
        "relative_deviation": abs(scaled[int(np.argmin(lams))] / coeff - 1.0),
        "verdict": verdict,
    })
    return EXIT_OK


# -------------------------------------------------------------- regimes


def cmd_regimes(args):
    gammas = _grid(args.gamma_grid)
    lams = _grid(args.lambda_grid)
    rows = []
    labels = {}
    for g in gammas:
        for l in lams:
            lab = classify_regime(g, l)
            labels[(g, l)] = lab.regime
            rows.append((
                g, l, lab.regime, lab.ratios[0], lab.ratios[1],
                lab.cutoffs["N1"], lab.cutoffs["N2"], lab.cutoffs["N3"],
                lab.cutoffs["N4"],
            ))
    mw = ManifestWriter(
        "regimes-map",
        {"gamma_grid": [float(x) for x in args.gamma_grid],
         "lambda_grid": [float(x) for x in args.lambda_grid]},
        args.out,
    )
    write_csv(
        mw.path(f"regimes_{mw.hash}.csv"),
        ["gamma", "lambda", "regime", "gamma_over_lam3", "gamma_over_lam34",
         "N1", "N2", "N3", "N4"],
        rows,
    )
    if not args.no_plot:
        render_regime_map(mw.path(f"regimes_{mw.hash}.png"), gammas, lams, labels)
    mw.finalize()
    return EXIT_OK


# ---------------------------------------------------------------- main


def _build_parser():
    p = argparse.ArgumentParser(
        prog="vfpbif",
        description="Kinetic bifurcation toolkit: dispersion, eigensystem, "
                    "Landau coefficients, Fourier-Hermite simulation",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def _common(q):
        q.add_argument("--out", default=".", help="output directory")
        q.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")

    q = sub.add_parser("jn", help="evaluate one J_n value")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--y", type=float)
    q.add_argument("--mu", type=float)
    q.add_argument("--gamma", type=float)
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--tol", type=float, default=1e-10)
    _common(q)
    q.set_defaults(fn=cmd_jn)

    q = sub.add_parser("dispersion", help="dispersion relation operations")
    q.add_argument("mode", choices=["solve", "scan", "invert"])
    q.add_argument("--c", type=float)
    q.add_argument("--gamma", type=float, required=True)
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--bracket", nargs=2, type=float, default=[1e-8, 1.0])
    q.add_argument("--lambda-grid", nargs=3, metavar=("LO", "HI", "N"))
    _common(q)
    q.set_defaults(fn=cmd_dispersion)

    q = sub.add_parser("c3", help="Landau-coefficient breakdown")
    q.add_argument("mode", choices=["compute", "sweep"])
    q.add_argument("--gamma", type=float)
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--c", type=float)
    q.add_argument("--N", type=int)
    q.add_argument("--gamma-grid", nargs=3, metavar=("LO", "HI", "N"))
    q.add_argument("--lambda-grid", nargs=3, metavar=("LO", "HI", "N"))
    _common(q)
    q.set_defaults(fn=cmd_c3)

    q = sub.add_parser("simulate", help="nonlinear Fourier-Hermite run")
    q.add_argument("--config", help="JSON config file (flags override)")
    q.add_argument("--gamma", type=float)
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--c", type=float)
    q.add_argument("--K", type=int)
    q.add_argument("--N", type=int)
    q.add_argument("--dt", type=float)
    q.add_argument("--t-end", dest="t_end", type=float)
    q.add_argument("--eps0", type=float)
    q.add_argument("--record-every", dest="record_every", type=int)
    _common(q)
    q.set_defaults(fn=cmd_simulate)

    q = sub.add_parser("mellin", help="Dirichlet-series asymptotics check")
    q.add_argument("mode", choices=["check"])
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--lambda-grid", nargs=3, metavar=("LO", "HI", "N"),
                   required=True)
    q.add_argument("--tol", type=float, default=1e-10)
    _common(q)
    q.set_defaults(fn=cmd_mellin)

    q = sub.add_parser("regimes", help="regime classification map")
    q.add_argument("mode", choices=["map"])
    q.add_argument("--gamma-grid", nargs=3, metavar=("LO", "HI", "N"),
                   required=True)
    q.add_argument("--lambda-grid", nargs=3, metavar=("LO", "HI", "N"),
                   required=True)
    _common(q)
    q.set_defaults(fn=cmd_regimes)

    return p


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (DomainError, DegenerateInput, NoSignChange, NotARoot) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except (PrecisionError, SingularSystem) as exc:
        sys.stderr.write(f"precision error: {exc}\n")
        return EXIT_PRECISION
    except ComplexBranch as exc:
        sys.stderr.write(f"complex branch: {exc}\n")
        return EXIT_COMPLEX_BRANCH
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
