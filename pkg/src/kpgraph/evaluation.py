"""Edge-recovery metrics, ROC sweeps, Monte-Carlo tables and property harnesses."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .admm import AdmmConfig
from .baseline_iid import default_grid_iid, fit_iid
from .edges import SCOPES, EdgeReport, kpg_edges
from .flipflop import FlipFlopConfig, extract_edges, fit, fit_statistics
from .linalg import hermitian, inv_pd, symmetric
from .model_select import GridCell, bic, default_grid, evaluate_grid, select_cell
from .spectral import dft, plan_windows
from .synth import GroundTruth, generate_series, make_truth, true_edge_sets

__all__ = [
    "Confusion",
    "EdgeReport",
    "RocCurve",
    "RocPoint",
    "auc",
    "confusion",
    "kpg_edges",
    "monte_carlo",
    "rate_check",
    "roc_experiment",
    "roc_sweep",
    "roc_sweep_iid",
    "population_check",
    "truth_report",
]

ESTIMATORS = ("proposed", "baseline")
SELECTIONS = ("bic", "oracle_f1")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n_pairs(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self):
        # 0/0 -> 0 so an empty estimate always sits at the ROC origin
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0

    @property
    def tnr(self):
        neg = self.tn + self.fp
        return self.tn / neg if neg else 1.0

    @property
    def fpr(self):
        return 1.0 - self.tnr

    @property
    def f1(self):
        den = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / den if den else 1.0


def truth_report(truth, n_grid=256, rel_tol=1e-8):
    """True edge sets of a :class:`GroundTruth` as an :class:`EdgeReport`."""
    S_p, S_q = true_edge_sets(truth, n_grid, rel_tol)
    return EdgeReport.from_supports(S_p, S_q)


def _adjacency(x, scope):
    if isinstance(x, EdgeReport):
        return x.adjacency(scope)
    if isinstance(x, GroundTruth):
        return truth_report(x).adjacency(scope)
    return np.asarray(x, dtype=bool)


def confusion(est, truth, scope="combined"):
    """Counts over unordered off-diagonal node pairs of ``scope``."""
    E = _adjacency(est, scope)
    T = _adjacency(truth, scope)
    if E.shape != T.shape:
        raise ValueError(f"dimension mismatch: {E.shape} vs {T.shape}")
    iu = np.triu_indices(E.shape[0], 1)
    e, t = E[iu], T[iu]
    return Confusion(
        tp=int(np.sum(e & t)),
        fp=int(np.sum(e & ~t)),
        tn=int(np.sum(~e & ~t)),
        fn=int(np.sum(~e & t)),
    )


# ----------------------------------------------------------------------- ROC


@dataclass(frozen=True)
class RocPoint:
    lambda_p: float
    lambda_q: float
    scope: str
    fpr: float
    tpr: float


def _pairs(lambda_p_grid, lambda_q_grid, pairing):
    lp = [float(x) for x in np.atleast_1d(lambda_p_grid)]
    lq = [float(x) for x in np.atleast_1d(lambda_q_grid)]
    if pairing == "zip":
        if len(lp) != len(lq):
            raise ValueError("zipped grids need equal lengths")
        return list(zip(lp, lq))
    if pairing == "product":
        return [(a, b) for a in lp for b in lq]
    raise ValueError(f"unknown pairing {pairing!r}")


def _sweep(fitter, pairs, truth, scopes):
    T = truth if isinstance(truth, EdgeReport) else truth_report(truth)
    out = {s: [] for s in scopes}
    for lp, lq in pairs:
        try:
            rep = fitter(lp, lq)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"ROC cell ({lp:.3g}, {lq:.3g}) failed: {exc}", RuntimeWarning)
            continue
        for s in scopes:
            c = confusion(rep, T, s)
            out[s].append(RocPoint(lp, lq, s, c.fpr, c.tpr))
    return {s: sorted(v, key=lambda r: (r.fpr, r.tpr)) for s, v in out.items()}


def roc_sweep(dfts, plan, lambda_p_grid, lambda_q_grid, truth, config=None,
              pairing="product", scopes=SCOPES):
    """One proposed-method fit per cell; ``{scope: [RocPoint]}`` sorted by FPR."""
    config = config or FlipFlopConfig()

    def fitter(lp, lq):
        return extract_edges(fit(dfts, plan, config.with_lambdas(lp, lq)))

    return _sweep(fitter, _pairs(lambda_p_grid, lambda_q_grid, pairing), truth, scopes)


def roc_sweep_iid(series, lambda_p_grid, lambda_q_grid, truth, config=None,
                  pairing="product", scopes=SCOPES):
    """Same sweep for the i.i.d. comparator."""

    def fitter(lp, lq):
        return fit_iid(series, lp, lq, config).edges()

    return _sweep(fitter, _pairs(lambda_p_grid, lambda_q_grid, pairing), truth, scopes)


def auc(fpr, tpr):
    """Trapezoid area under computed ROC points with ``(0,0)``/``(1,1)`` anchors."""
    x = np.concatenate([[0.0], np.asarray(fpr, float), [1.0]])
    y = np.concatenate([[0.0], np.asarray(tpr, float), [1.0]])
    order = np.lexsort((y, x))
    return float(np.trapezoid(y[order], x[order]))


# ---------------------------------------------------------------- Monte Carlo


def run_rngs(seed, r):
    """Independent generators for the truth and the data of run ``r``."""
    ss = np.random.SeedSequence([int(seed), int(r)])
    a, b = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(a)), np.random.Generator(np.random.PCG64(b))


@dataclass
class RunRecord:
    run: int
    selection: str
    f1: float = math.nan
    tpr: float = math.nan
    fpr: float = math.nan
    lambda_p: float = math.nan
    lambda_q: float = math.nan
    fit_seconds: float = math.nan
    total_seconds: float = math.nan
    failed: bool = False
    error: str = ""


@dataclass
class Summary:
    estimator: str
    selection: str
    n: int
    M: int
    noise: str
    runs: int
    failures: int
    f1_mean: float
    f1_std: float
    tpr_mean: float
    tpr_std: float
    fpr_mean: float
    fpr_std: float
    fit_seconds_mean: float
    total_seconds_mean: float

    def as_dict(self):
        return asdict(self)


@dataclass
class MonteCarloResult:
    records: List[RunRecord]
    summaries: Dict[str, Summary]

    def summary(self, selection="bic"):
        return self.summaries[selection]


def _summarize(records, estimator, selection, n, M, noise):
    ok = [r for r in records if not r.failed]

    def ms(attr):
        v = np.array([getattr(r, attr) for r in ok], dtype=float)
        if v.size == 0:
            return math.nan, math.nan
        return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0

    f1, tpr, fpr = ms("f1"), ms("tpr"), ms("fpr")
    return Summary(
        estimator=estimator,
        selection=selection,
        n=n,
        M=M,
        noise=noise,
        runs=len(records),
        failures=len(records) - len(ok),
        f1_mean=f1[0],
        f1_std=f1[1],
        tpr_mean=tpr[0],
        tpr_std=tpr[1],
        fpr_mean=fpr[0],
        fpr_std=fpr[1],
        fit_seconds_mean=ms("fit_seconds")[0],
        total_seconds_mean=ms("total_seconds")[0],
    )


def _one_run(r, seed, n, M, estimator, selections, noise, config, n_points, scope, p, q):
    t0 = time.perf_counter()
    rng_truth, rng_data = run_rngs(seed, r)
    truth = make_truth(rng_truth, p=p, q=q)
    series = generate_series(truth, n, rng_data, noise)
    T = truth_report(truth)

    def metrics(rep):
        c = confusion(rep, T, scope)
        return c.f1, c.tpr, c.fpr

    if estimator == "proposed":
        dfts = dft(series)
        plan = plan_windows(series.n, M)
        grid = default_grid(dfts, plan, config, n_points)
        cells = evaluate_grid(
            dfts, plan, grid, config, keep_fits=False,
            on_fit=lambda res: (metrics(extract_edges(res)), res.elapsed),
        )
    else:
        grid = default_grid_iid(series, config, n_points)
        cells = []
        for lp, lq in grid.cells():
            try:
                res = fit_iid(series, lp, lq, config)
            except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                warnings.warn(f"baseline cell ({lp:.3g}, {lq:.3g}) failed: {exc}", RuntimeWarning)
                continue
            cells.append(GridCell(lp, lq, None, None, extra=(metrics(res.edges()), res.elapsed)))
    total = time.perf_counter() - t0

    out = []
    for sel in selections:
        if sel == "bic":
            i = select_cell(cells)
        else:
            # max F1; ties toward the sparser (earlier) cell
            ok = [j for j, c in enumerate(cells) if c.extra is not None]
            if not ok:
                raise RuntimeError("every grid cell failed")
            i = max(ok, key=lambda j: (cells[j].extra[0][0], -j))
        c = cells[i]
        (f1, tpr, fpr), fit_s = c.extra
        out.append(RunRecord(r, sel, f1, tpr, fpr, c.lambda_p, c.lambda_q, fit_s, total))
    return out


def monte_carlo(n=256, M=4, runs=20, estimator="proposed", selection="bic", seed=0,
                noise="gaussian", config=None, n_points=10, scope="combined", p=15, q=15):
    """Fresh truth and data per run; one grid scan serves every selection rule.

    ``selection`` is ``"bic"``, ``"oracle_f1"`` or a sequence of both. BIC
    selection is only defined for the proposed estimator. Run ``r`` uses the
    seed pair ``(seed, r)`` so results do not depend on execution order and
    both estimators see the same data for the same ``(seed, r)``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    sels = (selection,) if isinstance(selection, str) else tuple(selection)
    for s in sels:
        if s not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
    if estimator == "baseline" and "bic" in sels:
        raise ValueError("BIC selection is defined for the proposed estimator only")
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    config = config or FlipFlopConfig()
    records = []
    for r in range(int(runs)):
        try:
            records.extend(
                _one_run(r, seed, n, M, estimator, sels, noise, config, n_points, scope, p, q)
            )
        except (RuntimeError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            records.extend(RunRecord(r, s, failed=True, error=str(exc)) for s in sels)
    summaries = {
        s: _summarize([x for x in records if x.selection == s], estimator, s, n, M, noise)
        for s in sels
    }
    return MonteCarloResult(records, summaries)


# ---------------------------------------------------------------- rates


def population_psd(truth, plan):
    """Window-averaged PSD ``Sbar_k`` at the DFT frequencies of ``plan``."""
    f = plan.members / plan.n
    S = truth.psd(f.ravel()).reshape(plan.M, plan.K, truth.q, truth.q)
    return hermitian(S.mean(axis=1))


def scaled_error(phi_hat, omega_hat, phi_true, omega_true):
    """``min_c ||c X_hat - X||_F / ||X||_F`` for ``X = [Phi_k kron Omega]_k``."""
    Xh = np.stack([np.kron(a, omega_hat) for a in phi_hat])
    X = np.stack([np.kron(a, omega_true) for a in phi_true])
    c = np.vdot(Xh, X) / np.vdot(Xh, Xh)
    return float(np.linalg.norm(c * Xh - X) / np.linalg.norm(X))


def default_m_rule(n):
    return max(2, int(round(n ** 0.25)))


@dataclass
class RateRow:
    seed: int
    n: int
    M: int
    K: int
    lambda_p: float
    lambda_q: float
    error: float


@dataclass
class RateResult:
    rows: List[RateRow]
    n_list: tuple
    seeds: int

    def errors(self):
        """``(seeds, len(n_list))`` array."""
        E = np.full((self.seeds, len(self.n_list)), np.nan)
        for row in self.rows:
            E[row.seed, self.n_list.index(row.n)] = row.error
        return E

    def decreasing_fraction(self):
        E = self.errors()
        return float(np.mean(np.all(np.diff(E, axis=1) < 0, axis=1)))

    def slope(self):
        """Least-squares slope of log mean error against log n."""
        E = self.errors().mean(axis=0)
        return float(np.polyfit(np.log(self.n_list), np.log(E), 1)[0])


def rate_check(n_list=(128, 512, 2048), seeds=10, m_rule=default_m_rule, c_p=0.03, c_q=0.03,
               seed=0, p=15, q=15, config=None):
    """Scaled estimation error against the window-averaged truth as ``n`` grows.

    Penalties follow ``c_p sqrt(ln p / (M K q))`` and ``c_q sqrt(ln q / (K p))``.
    """
    config = config or FlipFlopConfig()
    n_list = tuple(int(n) for n in n_list)
    rows = []
    for s in range(int(seeds)):
        rng_truth, rng_data = run_rngs(seed, s)
        truth = make_truth(rng_truth, p=p, q=q)
        series = generate_series(truth, max(n_list), rng_data)
        for n in n_list:
            M = int(m_rule(n))
            plan = plan_windows(n, M)
            sub = type(series)(series.data[:n])
            lp = c_p * math.sqrt(math.log(p) / (M * plan.K * q))
            lq = c_q * math.sqrt(math.log(q) / (plan.K * p))
            res = fit(dft(sub), plan, config.with_lambdas(lp, lq))
            phi_true = inv_pd(population_psd(truth, plan))
            err = scaled_error(res.gamma.phi, res.omega.omega, phi_true, truth.omega)
            rows.append(RateRow(s, n, M, plan.K, lp, lq, err))
    return RateResult(rows, n_list, int(seeds))


# ----------------------------------------------------------- population check


@dataclass
class PopulationReport:
    phi_residuals: np.ndarray
    omega_residual: float
    product_residual: float
    outer_iterations: int
    elapsed: float

    @property
    def max_residual(self):
        return float(max(np.max(self.phi_residuals), self.omega_residual, self.product_residual))


def proportionality_residual(est, true):
    """``min_c ||est - c true||_F / ||true||_F``."""
    est = np.asarray(est)
    true = np.asarray(true)
    c = np.vdot(true, est) / np.vdot(true, true)
    return float(np.linalg.norm(est - c * true) / np.linalg.norm(true))


TIGHT_ADMM = AdmmConfig(tau_abs=1e-13, tau_rel=1e-13, i_max=5000)


def population_check(truth, M=2, n=256, config=None):
    """Unpenalized flip-flop on exact expected statistics.

    ``E{Theta~_k} = (1/p) tr(Omega Sigma) Sbar_k`` and
    ``E{Theta-check} = (1/Mq) sum_k tr(Sbar_k Phi_k) Sigma`` with ``Sbar_k`` the
    window-averaged PSD; the minimizers should equal the truth up to scale.
    """
    config = config or FlipFlopConfig(tau_ff=1e-12, admm=TIGHT_ADMM)
    if config.lambda_p or config.lambda_q:
        raise ValueError("the population check is unpenalized")
    plan = plan_windows(n, M)
    S = population_psd(truth, plan)
    Sigma = symmetric(truth.sigma)
    p, q = truth.p, truth.q

    def tilde(omega):
        return hermitian(np.trace(omega @ Sigma) / p * S)

    def check(phi):
        w = np.einsum("kij,kji->", S, phi).real / (M * q)
        return symmetric(w * Sigma)

    res = fit_statistics(tilde, check, M, p, q, config)
    phi_true = inv_pd(S)
    # one scalar shared by every Phi_k
    c = np.vdot(phi_true, res.gamma.phi) / np.vdot(phi_true, phi_true)
    phi_res = np.linalg.norm(res.gamma.phi - c * phi_true, axis=(1, 2)) / np.linalg.norm(
        phi_true, axis=(1, 2)
    )
    om_res = proportionality_residual(res.omega.omega, truth.omega)
    prod = scaled_error(res.gamma.phi, res.omega.omega, phi_true, truth.omega)
    return PopulationReport(phi_res, om_res, prod, len(res.trace), res.elapsed)


# ------------------------------------------------------------ ROC experiment


@dataclass
class RocCurve:
    estimator: str
    scope: str
    factors: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def area(self):
        return auc(self.fpr, self.tpr)


def roc_factors(n_points=12, span=1e3):
    """Penalty multipliers from the no-edge value down to ``1/span``, then 0."""
    return np.concatenate([np.geomspace(1.0, 1.0 / span, int(n_points)), [0.0]])


def roc_experiment(n=256, M=2, runs=5, seed=0, scopes=SCOPES, n_points=12, span=1e3,
                   noise="gaussian", config=None, p=15, q=15, estimators=ESTIMATORS):
    """Mean ROC curves per estimator and scope over ``runs`` paired datasets.

    Each method sweeps a zipped path ``(f lambda_p_sm, f lambda_q_sm)`` over
    the multipliers ``f`` of :func:`roc_factors`, anchored at its own no-edge
    penalties, and points are averaged over runs per multiplier.
    """
    config = config or FlipFlopConfig()
    factors = roc_factors(n_points, span)
    acc = {(e, s): np.zeros((2, factors.size)) for e in estimators for s in scopes}
    for r in range(int(runs)):
        rng_truth, rng_data = run_rngs(seed, r)
        truth = make_truth(rng_truth, p=p, q=q)
        series = generate_series(truth, n, rng_data, noise)
        T = truth_report(truth)
        for est in estimators:
            if est == "proposed":
                dfts = dft(series)
                plan = plan_windows(series.n, M)
                g = default_grid(dfts, plan, config, n_points=1)
                lp_sm, lq_sm = 2 * g.lambda_p_range[1], 2 * g.lambda_q_range[1]
                curves = roc_sweep(dfts, plan, factors * lp_sm, factors * lq_sm, T, config,
                                   pairing="zip", scopes=scopes)
            else:
                g = default_grid_iid(series, config, n_points=1)
                lp_sm, lq_sm = 2 * g.lambda_p_range[1], 2 * g.lambda_q_range[1]
                curves = roc_sweep_iid(series, factors * lp_sm, factors * lq_sm, T, config,
                                       pairing="zip", scopes=scopes)
            keys = list(zip((factors * lp_sm).tolist(), (factors * lq_sm).tolist()))
            for s in scopes:
                pts = {(pt.lambda_p, pt.lambda_q): pt for pt in curves[s]}
                for i, key in enumerate(keys):
                    if key not in pts:
                        raise RuntimeError(f"ROC cell {key} failed")
                    acc[(est, s)][:, i] += (pts[key].fpr, pts[key].tpr)
    return [
        RocCurve(e, s, factors, acc[(e, s)][0] / runs, acc[(e, s)][1] / runs)
        for e in estimators
        for s in scopes
    ]
