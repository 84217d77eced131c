"""Reconstructed i.i.d. comparator: penalized matrix-normal flip-flop.

Treats ``Z(t)`` as independent draws with ``E{vec Z vec Z^T} = Psi kron Sigma``
and alternates two lasso-penalized log-det solves on the time-domain
statistics

    S_Omega   = (1/nq) sum_t Z(t) Upsilon Z(t)^T,
    S_Upsilon = (1/np) sum_t Z(t)^T Omega Z(t),

with ``Omega = Sigma^{-1}``, ``Upsilon = Psi^{-1}`` and ``||Upsilon||_F = 1``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .admm import AdmmDiagnostics
from .admm_omega import OmegaEstimate, solve_omega
from .edges import EdgeReport
from .flipflop import FlipFlopConfig
from .linalg import symmetric
from .model_select import LambdaGrid, bracket_no_edge


@dataclass
class IidStep:
    m: int
    upsilon_change: float
    omega_change: float
    upsilon_diag: AdmmDiagnostics
    omega_diag: AdmmDiagnostics


@dataclass
class IidFit:
    omega: OmegaEstimate
    upsilon: OmegaEstimate
    trace: List[IidStep] = field(default_factory=list)
    converged: bool = False
    elapsed: float = 0.0

    @property
    def inner_converged(self):
        return all(s.upsilon_diag.converged and s.omega_diag.converged for s in self.trace)

    def edges(self):
        return EdgeReport(
            omega_adj=self.omega.support(),
            gamma_adj=self.upsilon.support(),
            omega_weights=np.abs(self.omega.omega),
            gamma_weights=np.abs(self.upsilon.omega),
        )


def _data(series):
    Z = np.asarray(getattr(series, "data", series), dtype=float)
    if Z.ndim != 3 or Z.shape[0] < 2:
        raise ValueError("need a series of shape (n, p, q) with n >= 2")
    return Z


def stat_omega(Z, upsilon):
    n, p, q = Z.shape
    S = np.einsum("tij,jk,tlk->il", Z, upsilon, Z, optimize=True) / (n * q)
    return symmetric(S)


def stat_upsilon(Z, omega):
    n, p, q = Z.shape
    S = np.einsum("tji,jk,tkl->il", Z, omega, Z, optimize=True) / (n * p)
    return symmetric(S)


def fit_iid(series, lambda_p=0.0, lambda_q=0.0, config=None):
    """Alternate ``Upsilon`` and ``Omega`` solves from ``Omega = I``.

    Stopping mirrors :func:`kpgraph.flipflop.fit` (``tau_ff``, ``m_max``).
    """
    config = config or FlipFlopConfig()
    if lambda_p < 0 or lambda_q < 0:
        raise ValueError("penalties must be nonnegative")
    t0 = time.perf_counter()
    Z = _data(series)
    n, p, q = Z.shape
    omega = OmegaEstimate(np.eye(p))
    ups = OmegaEstimate(np.eye(q) / np.sqrt(q))
    trace = []
    converged = False
    for m in range(1, int(config.m_max) + 1):
        u_new, u_diag = solve_omega(stat_upsilon(Z, omega.omega), lambda_q, config.admm, warm=ups)
        c = 1.0 / np.linalg.norm(u_new.omega)
        u_new = OmegaEstimate(c * u_new.omega, c * u_new.w)
        o_new, o_diag = solve_omega(stat_omega(Z, u_new.omega), lambda_p, config.admm, warm=omega)
        du = np.linalg.norm(u_new.omega - ups.omega) / np.linalg.norm(ups.omega)
        do = np.linalg.norm(o_new.omega - omega.omega) / np.linalg.norm(omega.omega)
        ups, omega = u_new, o_new
        trace.append(IidStep(m, float(du), float(do), u_diag, o_diag))
        if du <= config.tau_ff and do <= config.tau_ff:
            converged = True
            break
    return IidFit(omega, ups, trace, converged, time.perf_counter() - t0)


def find_no_edge_lambda_iid(series, axis, other_lambda=0.0, config=None, seed=None):
    """Smallest penalty on ``axis`` giving an edge-free factor graph."""
    if axis not in ("p", "q"):
        raise ValueError("axis must be 'p' or 'q'")
    Z = _data(series)
    n, p, q = Z.shape

    def has_edges(lam):
        if axis == "p":
            return bool(fit_iid(Z, lam, other_lambda, config).omega.support().any())
        return bool(fit_iid(Z, other_lambda, lam, config).upsilon.support().any())

    if seed is None:
        S = stat_omega(Z, np.eye(q)) if axis == "p" else stat_upsilon(Z, np.eye(p))
        d = S.shape[0]
        off = np.abs(S[~np.eye(d, dtype=bool)])
        seed = 0.5 * off.max() / d if off.size and off.max() > 0 else 1e-6
    return bracket_no_edge(has_edges, seed)


def default_grid_iid(series, config=None, n_points=10):
    lp = find_no_edge_lambda_iid(series, "p", config=config)
    lq = find_no_edge_lambda_iid(series, "q", config=config)
    return LambdaGrid.from_no_edge(lp, lq, n_points)
