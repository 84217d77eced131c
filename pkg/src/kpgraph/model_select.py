"""BIC scoring and the two-axis penalty grid search."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .flipflop import FitResult, FlipFlopConfig, fit
from .linalg import log_det_pd
from .spectral import a_traces, theta_check, theta_tilde

AXES = ("p", "q")
N_BISECT = 10
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class BicScore:
    value: float
    omega_nnz: int
    phi_nnz: int
    lambda_p: float
    lambda_q: float
    converged: bool = True


def _counts(result):
    om = result.omega.w if result.omega.w is not None else result.omega.omega
    ph = result.gamma.w if result.gamma.w is not None else result.gamma.phi
    return int(np.count_nonzero(om)), int(np.count_nonzero(ph))


def bic(result: FitResult, dfts, plan, trace_weight="likelihood"):
    """BIC of a fit.

    ``-2KMq ln|Omega| + 2Kp sum_k (-ln|Phi_k| + c Re tr A_k)
    + ln(2KM) (|Omega|_0 / 2 + sum_k |Phi_k|_0)``

    with ``c = 1/p`` for ``trace_weight="literal"`` and ``c = 1`` for
    ``"likelihood"`` (the weighting under which the first two terms equal
    ``2KMpq G``). Nonzero counts come from the split variables, diagonals
    included.
    """
    if trace_weight not in ("literal", "likelihood"):
        raise ValueError(f"unknown trace_weight {trace_weight!r}")
    om = np.asarray(result.omega.omega, dtype=float)
    phi = np.asarray(result.gamma.phi)
    K, M = plan.K, plan.M
    p, q = om.shape[0], phi.shape[1]
    ld_om = log_det_pd(om)
    ld_phi = log_det_pd(phi)
    tr = a_traces(dfts, plan, om, phi)
    c = 1.0 / p if trace_weight == "literal" else 1.0
    n_om, n_phi = _counts(result)
    value = (
        -2.0 * K * M * q * ld_om
        + 2.0 * K * p * float(np.sum(-ld_phi + c * tr))
        + math.log(2.0 * K * M) * (n_om / 2.0 + n_phi)
    )
    if not np.isfinite(value):
        raise FloatingPointError("BIC is not finite")
    return BicScore(
        value=float(value),
        omega_nnz=n_om,
        phi_nnz=n_phi,
        lambda_p=result.config.lambda_p,
        lambda_q=result.config.lambda_q,
        converged=result.inner_converged,
    )


@dataclass(frozen=True)
class LambdaGrid:
    """Log-spaced ``lambda_p`` x ``lambda_q`` grid."""

    lambda_p_range: tuple
    lambda_q_range: tuple
    n_points: int = 10

    def __post_init__(self):
        if int(self.n_points) < 1:
            raise ValueError("n_points must be at least 1")
        for lo, hi in (self.lambda_p_range, self.lambda_q_range):
            if not 0 < lo <= hi or (lo == hi and self.n_points > 1):
                raise ValueError(f"need 0 < lower < upper, got ({lo}, {hi})")

    @classmethod
    def from_no_edge(cls, lambda_p_sm, lambda_q_sm, n_points=10, upper_frac=0.5, span=10.0):
        """Upper end ``upper_frac * lambda_sm``, lower end ``upper / span``."""
        lp_hi = upper_frac * lambda_p_sm
        lq_hi = upper_frac * lambda_q_sm
        return cls((lp_hi / span, lp_hi), (lq_hi / span, lq_hi), n_points)

    def _axis(self, rng):
        lo, hi = rng
        if self.n_points == 1:
            return np.array([hi])
        return np.geomspace(lo, hi, int(self.n_points))

    @property
    def lambda_p_values(self):
        return self._axis(self.lambda_p_range)

    @property
    def lambda_q_values(self):
        return self._axis(self.lambda_q_range)

    def cells(self):
        """``(lambda_p, lambda_q)`` pairs, sparsest (largest) first."""
        lp = self.lambda_p_values[::-1]
        lq = self.lambda_q_values[::-1]
        return [(float(a), float(b)) for a in lp for b in lq]


def bracket_no_edge(has_edges: Callable[[float], bool], seed: float, n_bisect=N_BISECT):
    """Smallest ``lam`` with ``has_edges(lam)`` false, by doubling then bisection.

    The returned value has no edges; ``lam / 2`` or below may have edges.
    """
    if not seed > 0:
        raise ValueError("seed must be positive")
    lam = float(seed)
    if has_edges(lam):
        lo = lam
        for _ in range(MAX_DOUBLINGS):
            lam *= 2.0
            if not has_edges(lam):
                break
            lo = lam
        else:
            raise RuntimeError(f"no edge-free model after {MAX_DOUBLINGS} doublings")
        hi = lam
    else:
        hi = lam
        for _ in range(MAX_DOUBLINGS):
            lam *= 0.5
            if has_edges(lam):
                break
            hi = lam
        else:
            return hi
        lo = lam
    for _ in range(int(n_bisect)):
        mid = math.sqrt(lo * hi)
        if has_edges(mid):
            lo = mid
        else:
            hi = mid
    return hi


def _seed(dfts, plan, axis, alpha):
    M, q, p = plan.M, dfts.q, dfts.p
    if axis == "p":
        tc = theta_check(dfts, plan, np.broadcast_to(np.eye(q), (M, q, q)))
        off = tc[~np.eye(p, dtype=bool)]
        scale = 2.0 * np.max(np.abs(off)) / p if off.size else 1.0
    else:
        tt = theta_tilde(dfts, plan, np.eye(p))
        off = np.sqrt(np.sum(np.abs(tt) ** 2, axis=0))[~np.eye(q, dtype=bool)]
        scale = 2.0 * np.max(off) / (M * q * np.sqrt(M)) if off.size else 1.0
    return 0.25 * scale if scale > 0 else 1e-6


def find_no_edge_lambda(dfts, plan, axis, other_lambda=0.0, config=None, seed=None):
    """Smallest penalty on ``axis`` (``"p"`` or ``"q"``) giving an edge-free graph.

    The other penalty is held at ``other_lambda``.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    config = config or FlipFlopConfig()

    def has_edges(lam):
        if axis == "p":
            res = fit(dfts, plan, config.with_lambdas(lam, other_lambda))
            return bool(res.omega.support().any())
        res = fit(dfts, plan, config.with_lambdas(other_lambda, lam))
        return bool(res.gamma.support().any())

    s = seed if seed is not None else _seed(dfts, plan, axis, config.alpha)
    return bracket_no_edge(has_edges, s)


def default_grid(dfts, plan, config=None, n_points=10):
    """Grid anchored at the no-edge penalties of both axes."""
    lp = find_no_edge_lambda(dfts, plan, "p", config=config)
    lq = find_no_edge_lambda(dfts, plan, "q", config=config)
    return LambdaGrid.from_no_edge(lp, lq, n_points)


@dataclass
class GridCell:
    lambda_p: float
    lambda_q: float
    result: Optional[FitResult]
    score: Optional[BicScore]
    error: Optional[str] = None
    extra: object = None


@dataclass
class GridSearchResult:
    lambda_p: float
    lambda_q: float
    fit: FitResult
    scores: List[BicScore]
    cells: List[GridCell] = field(repr=False, default_factory=list)

    @property
    def best_score(self):
        return min(self.scores, key=lambda s: s.value) if self.scores else None


def select_cell(cells):
    """Index of the BIC-minimizing cell.

    Cells are expected sparsest first, so strict comparison breaks ties
    toward larger penalties. Cells with inner non-convergence only count
    when no converged cell exists.
    """
    ok = [i for i, c in enumerate(cells) if c.score is not None]
    if not ok:
        raise RuntimeError("every grid cell failed")
    conv = [i for i in ok if cells[i].score.converged]
    pool = conv or ok
    best = pool[0]
    for i in pool[1:]:
        if cells[i].score.value < cells[best].score.value:
            best = i
    return best


def evaluate_grid(dfts, plan, grid, config=None, keep_fits=True, workers=1,
                  trace_weight="likelihood", on_fit=None):
    """Fit and score every cell; returns the list of :class:`GridCell`."""
    config = config or FlipFlopConfig()

    def run(cell):
        lp, lq = cell
        try:
            res = fit(dfts, plan, config.with_lambdas(lp, lq))
            score = bic(res, dfts, plan, trace_weight)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"grid cell ({lp:.3g}, {lq:.3g}) failed: {exc}", RuntimeWarning)
            return GridCell(lp, lq, None, None, str(exc))
        extra = on_fit(res) if on_fit is not None else None
        return GridCell(lp, lq, res if keep_fits else None, score, extra=extra)

    cells = grid.cells()
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as ex:
            return list(ex.map(run, cells))
    return [run(c) for c in cells]


def grid_search(dfts, plan, alpha=0.05, grid=None, config=None, workers=1,
                trace_weight="likelihood"):
    """Fit every grid cell and return the BIC minimizer.

    Without ``grid`` the default no-edge-anchored grid is built first.
    """
    config = config or FlipFlopConfig()
    if alpha != config.alpha:
        config = FlipFlopConfig(config.lambda_p, config.lambda_q, alpha, config.m_max,
                                config.tau_ff, config.admm)
    if grid is None:
        grid = default_grid(dfts, plan, config)
    cells = evaluate_grid(dfts, plan, grid, config, workers=workers, trace_weight=trace_weight)
    best = select_cell(cells)
    c = cells[best]
    return GridSearchResult(
        lambda_p=c.lambda_p,
        lambda_q=c.lambda_q,
        fit=c.result,
        scores=[x.score for x in cells if x.score is not None],
        cells=cells,
    )
