"""Command-line interface: simulate, fit, select, benchmark, roc, preprocess.

Exit codes: 0 success, 1 compute failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmConfig
from .edges import edge_list
from .evaluation import (
    SELECTIONS,
    monte_carlo,
    roc_experiment,
    run_rngs,
    truth_report,
)
from .flipflop import FlipFlopConfig, extract_edges, fit
from .io import (
    InputError,
    complex_matrix,
    load_config,
    read_series,
    real_matrix,
    save_truth,
    write_edge_dots,
    write_json,
    write_series,
)
from .linalg import NotPositiveDefiniteError
from .model_select import default_grid, grid_search
from .preprocess import preprocess, read_raw
from .spectral import dft, plan_windows
from .synth import NOISE_FAMILIES, generate_series, make_truth

log = logging.getLogger("kpgraph")

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2


def _flipflop_config(cfg):
    admm = AdmmConfig(cfg.rho0, cfg.tau_abs, cfg.tau_rel, cfg.mu_bar, cfg.i_max)
    return FlipFlopConfig(alpha=cfg.alpha, m_max=cfg.m_max, tau_ff=cfg.tau_ff, admm=admm)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _overrides(args, names):
    return {k: getattr(args, k, None) for k in names}


# ------------------------------------------------------------------ commands


def cmd_simulate(args):
    cfg = load_config(args.config, _overrides(args, ("n", "p", "q", "noise", "seed")))
    out = _outdir(args.out)
    rng_truth, rng_data = run_rngs(cfg.seed, 0)
    truth = make_truth(rng_truth, p=cfg.p, q=cfg.q)
    series = generate_series(truth, cfg.n, rng_data, cfg.noise)
    write_series(out / "series.csv", series)
    save_truth(out / "truth.npz", truth)
    rep = truth_report(truth)
    write_json(
        out / "truth_edges.json",
        {"omega": edge_list(rep.omega_adj), "gamma": edge_list(rep.gamma_adj), "p": cfg.p, "q": cfg.q},
    )
    write_json(out / "manifest.json", {"command": "simulate", "config": asdict(cfg), "version": __version__})
    log.info("wrote %s (n=%d, p=%d, q=%d)", out / "series.csv", cfg.n, cfg.p, cfg.q)
    return EXIT_OK


def _run_fit(args, force_auto=False):
    over = _overrides(args, ("M", "alpha", "seed"))
    if force_auto:
        over["lambda_p"] = over["lambda_q"] = "auto"
    elif getattr(args, "lambda_", None) is not None:
        over["lambda_p"] = over["lambda_q"] = args.lambda_
    for k in ("lambda_p", "lambda_q"):
        if not force_auto and getattr(args, k, None) is not None:
            over[k] = getattr(args, k)
    cfg = load_config(args.config, over)
    series = read_series(args.series)
    plan = plan_windows(series.n, cfg.M)
    dfts = dft(series)
    ff = _flipflop_config(cfg)
    t0 = time.perf_counter()
    bundle = {
        "n": series.n,
        "p": series.p,
        "q": series.q,
        "M": plan.M,
        "K": plan.K,
        "m_t": plan.m_t,
        "alpha": cfg.alpha,
        "config": asdict(cfg),
    }
    if cfg.auto:
        grid = default_grid(dfts, plan, ff, cfg.grid_points)
        gs = grid_search(dfts, plan, cfg.alpha, grid, ff, workers=args.threads)
        res = gs.fit
        bundle["bic_table"] = [
            {**asdict(s), "selected": s.lambda_p == gs.lambda_p and s.lambda_q == gs.lambda_q}
            for s in gs.scores
        ]
    else:
        res = fit(dfts, plan, ff.with_lambdas(cfg.lambda_p, cfg.lambda_q))
    elapsed = time.perf_counter() - t0
    rep = extract_edges(res)
    bundle.update(
        lambda_p=res.config.lambda_p,
        lambda_q=res.config.lambda_q,
        omega=real_matrix(res.omega.omega),
        phi=complex_matrix(res.gamma.phi),
        gamma_frobenius_norm=res.gamma.norm(),
        omega_edges=edge_list(rep.omega_adj),
        gamma_edges=edge_list(rep.gamma_adj),
        n_combined_edges=int(rep.combined_adj.sum() // 2),
        diagnostics={
            "outer_iterations": len(res.trace),
            "converged": res.converged,
            "inner_converged": res.inner_converged,
            "max_root_residual": res.max_root_residual,
            "objective": [s.L for s in res.trace],
        },
    )
    out = _outdir(args.out)
    write_json(out / "estimate.json", bundle)
    write_edge_dots(out, rep)
    # timing lives apart so the estimate is reproducible byte for byte
    write_json(out / "timing.json", {"seconds": elapsed, "fit_seconds": res.elapsed})
    log.info("wrote %s: %d p-edges, %d q-edges", out, len(bundle["omega_edges"]), len(bundle["gamma_edges"]))
    return EXIT_OK


def cmd_fit(args):
    return _run_fit(args)


def cmd_select(args):
    return _run_fit(args, force_auto=True)


def cmd_benchmark(args):
    cfg = load_config(args.config, _overrides(args, ("n", "M", "runs", "noise", "seed")))
    sel = args.select or ("oracle_f1" if args.estimator == "baseline" else "bic")
    if args.estimator == "baseline" and sel == "bic":
        raise InputError("BIC selection is available for the proposed estimator only")
    mc = monte_carlo(
        n=cfg.n, M=cfg.M, runs=cfg.runs, estimator=args.estimator, selection=sel, seed=cfg.seed,
        noise=cfg.noise, config=_flipflop_config(cfg), n_points=cfg.grid_points, p=cfg.p, q=cfg.q,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cols = ["run", "selection", "f1", "tpr", "fpr", "lambda_p", "lambda_q", "failed", "error"]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in mc.records:
            d = asdict(r)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
    s = mc.summary(sel)
    summary = s.as_dict()
    timing = {"fit_seconds_mean": summary.pop("fit_seconds_mean"),
              "total_seconds_mean": summary.pop("total_seconds_mean")}
    write_json(out.with_suffix(".json"), summary)
    write_json(out.with_name(out.stem + "_timing.json"), timing)
    print(f"{args.estimator} {sel} n={cfg.n} M={cfg.M}: F1 {s.f1_mean:.4f} +/- {s.f1_std:.4f}, "
          f"TPR {s.tpr_mean:.4f}, 1-TNR {s.fpr_mean:.4f}, failures {s.failures}/{s.runs}")
    return EXIT_OK if s.failures < s.runs else EXIT_COMPUTE


def cmd_roc(args):
    cfg = load_config(args.config, _overrides(args, ("n", "M", "runs", "noise", "seed")))
    curves = roc_experiment(n=cfg.n, M=cfg.M, runs=cfg.runs, seed=cfg.seed, noise=cfg.noise,
                            config=_flipflop_config(cfg), p=cfg.p, q=cfg.q)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimator", "scope", "factor", "fpr", "tpr"])
        for c in curves:
            order = np.lexsort((c.tpr, c.fpr))
            for i in order:
                w.writerow([c.estimator, c.scope, repr(float(c.factors[i])),
                            repr(float(c.fpr[i])), repr(float(c.tpr[i]))])
    write_json(out.with_suffix(".json"),
               {"auc": [{"estimator": c.estimator, "scope": c.scope, "auc": c.area} for c in curves]})
    for c in curves:
        print(f"{c.estimator:9s} {c.scope:9s} AUC {c.area:.4f}")
    return EXIT_OK


def cmd_preprocess(args):
    X, feats = read_raw(args.raw, kelvin=tuple(args.kelvin or ()))
    Y = preprocess(X)
    write_series(args.out, Y)
    write_json(Path(args.out).with_suffix(".json"), {"features": feats, "n": Y.shape[0],
                                                     "p": Y.shape[1], "q": Y.shape[2]})
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _nonneg_or_auto(s):
    if s.strip().lower() == "auto":
        return "auto"
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {s!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("penalties must be nonnegative")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="kpgraph", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key: value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=1, help="worker cap for grid cells")

    p = sub.add_parser("simulate", help="draw a ground truth and a series")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--noise", choices=NOISE_FAMILIES)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    for name, func, hlp in (("fit", cmd_fit, "fit at given penalties"),
                            ("select", cmd_select, "fit with BIC-selected penalties")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("series", help="series CSV (t,row,col,value)")
        p.add_argument("--M", type=int)
        p.add_argument("--alpha", type=float)
        if name == "fit":
            p.add_argument("--lambda", dest="lambda_", type=_nonneg_or_auto,
                           help="both penalties, or 'auto' for the BIC grid")
            p.add_argument("--lambda-p", dest="lambda_p", type=_nonneg_or_auto)
            p.add_argument("--lambda-q", dest="lambda_q", type=_nonneg_or_auto)
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)

    p = sub.add_parser("benchmark", help="Monte-Carlo F1 table")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--noise", choices=NOISE_FAMILIES)
    p.add_argument("--estimator", choices=("proposed", "iid"), default="proposed")
    p.add_argument("--select", choices=SELECTIONS)
    p.add_argument("--out", default="benchmark.csv")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("roc", help="mean ROC curves of both estimators")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--noise", choices=NOISE_FAMILIES)
    p.add_argument("--out", default="roc.csv")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("preprocess", help="log-ratio, detrend and scale a raw CSV")
    p.add_argument("raw", help="wide CSV: t,row,<feature columns>")
    p.add_argument("--kelvin", action="append", metavar="COL",
                   help="add 273.15 to this column first (repeatable)")
    p.add_argument("--out", required=True, help="output series CSV")
    p.set_defaults(func=cmd_preprocess)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "estimator", None) == "iid":
        args.estimator = "baseline"
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotPositiveDefiniteError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
