"""Alternating (flip-flop) minimization over ``Gamma`` and ``Omega``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .admm import AdmmConfig, AdmmDiagnostics
from .admm_gamma import GammaEstimate, identity_gamma, objective_gamma, penalty_gamma, solve_gamma
from .admm_omega import OmegaEstimate, objective_omega, solve_omega
from .edges import EdgeReport
from .linalg import log_det_pd
from .spectral import neg_log_like, theta_check, theta_tilde, window_dfts


@dataclass(frozen=True)
class FlipFlopConfig:
    lambda_p: float = 0.0
    lambda_q: float = 0.0
    alpha: float = 0.05
    m_max: int = 20
    tau_ff: float = 1e-5
    admm: AdmmConfig = field(default_factory=AdmmConfig)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.lambda_p < 0 or self.lambda_q < 0:
            raise ValueError("penalties must be nonnegative")
        if not self.tau_ff > 0 or int(self.m_max) < 1:
            raise ValueError("tau_ff must be positive and m_max at least 1")

    def with_lambdas(self, lambda_p, lambda_q):
        return FlipFlopConfig(
            lambda_p=float(lambda_p),
            lambda_q=float(lambda_q),
            alpha=self.alpha,
            m_max=self.m_max,
            tau_ff=self.tau_ff,
            admm=self.admm,
        )


@dataclass
class OuterStep:
    m: int
    G: float
    L: float
    gamma_change: float
    omega_change: float
    gamma_diag: AdmmDiagnostics
    omega_diag: AdmmDiagnostics
    # inner objectives at the returned iterate and at its warm start
    gamma_obj: float = np.nan
    gamma_obj_start: float = np.nan
    omega_obj: float = np.nan
    omega_obj_start: float = np.nan


@dataclass
class FitResult:
    omega: OmegaEstimate
    gamma: GammaEstimate
    trace: List[OuterStep]
    converged: bool
    elapsed: float
    config: FlipFlopConfig

    @property
    def inner_converged(self):
        return all(s.gamma_diag.converged and s.omega_diag.converged for s in self.trace)

    @property
    def max_root_residual(self):
        return max(
            max(s.gamma_diag.max_root_residual, s.omega_diag.max_root_residual)
            for s in self.trace
        )


def _penalties(omega, gamma, config):
    om = np.asarray(getattr(omega, "omega", omega))
    phi = np.asarray(getattr(gamma, "phi", gamma))
    off = ~np.eye(om.shape[0], dtype=bool)
    return config.lambda_p * float(np.sum(np.abs(om[off]))) + penalty_gamma(
        phi, config.lambda_q, config.alpha
    )


def penalized_objective(dfts, plan, omega, gamma, config):
    """Full ``L = G + P_p + P_q`` at the given factors."""
    return neg_log_like(dfts, plan, omega, gamma) + _penalties(omega, gamma, config)


def fit(dfts, plan, config=None, record_objectives=False):
    """Run the flip-flop from ``Omega = I``, ``Phi_k = I``.

    Each outer step solves for ``Gamma`` at the current ``Omega``, normalizes
    ``||Gamma||_F = 1``, then solves for ``Omega`` at the new ``Gamma``. Stops
    once both relative changes are at most ``tau_ff`` or after ``m_max``
    steps. Inner non-convergence is recorded in the trace.
    """
    window_dfts(dfts, plan)  # size check
    return fit_statistics(
        lambda om: theta_tilde(dfts, plan, om),
        lambda g: theta_check(dfts, plan, g),
        plan.M,
        dfts.p,
        dfts.q,
        config,
        record_objectives,
    )


def fit_statistics(tilde, check, M, p, q, config=None, record_objectives=False):
    """Flip-flop driven by statistic maps ``tilde(Omega)`` and ``check(Phi)``.

    ``tilde`` returns the ``(M, q, q)`` stack and ``check`` the ``p x p``
    matrix; :func:`fit` passes the periodogram statistics, while exact
    expectations give the population version.
    """
    config = config or FlipFlopConfig()
    t0 = time.perf_counter()
    omega = OmegaEstimate(np.eye(p))
    gamma = identity_gamma(M, q)
    trace = []
    converged = False
    tt = tilde(omega.omega)
    for m in range(1, int(config.m_max) + 1):
        g_new, g_diag = solve_gamma(tt, config.lambda_q, config.alpha, config.admm, warm=gamma)
        if record_objectives:
            g_obj = objective_gamma(g_new.phi, tt, config.lambda_q, config.alpha)
            g_start = objective_gamma(gamma.phi, tt, config.lambda_q, config.alpha)
        g_new = g_new.scaled(1.0 / g_new.norm())

        tc = check(g_new.phi)
        o_new, o_diag = solve_omega(tc, config.lambda_p, config.admm, warm=omega)
        if record_objectives:
            o_obj = objective_omega(o_new.omega, tc, config.lambda_p)
            o_start = objective_omega(omega.omega, tc, config.lambda_p)

        dg = np.linalg.norm(g_new.phi - gamma.phi) / np.linalg.norm(gamma.phi)
        do = np.linalg.norm(o_new.omega - omega.omega) / np.linalg.norm(omega.omega)
        gamma, omega = g_new, o_new
        # Theta~ at the new Omega serves both the likelihood and the next step
        tt = tilde(omega.omega)
        G = _likelihood(omega.omega, gamma.phi, tt)
        step = OuterStep(
            m=m,
            G=G,
            L=G + _penalties(omega, gamma, config),
            gamma_change=float(dg),
            omega_change=float(do),
            gamma_diag=g_diag,
            omega_diag=o_diag,
        )
        if record_objectives:
            step.gamma_obj, step.gamma_obj_start = g_obj, g_start
            step.omega_obj, step.omega_obj_start = o_obj, o_start
        trace.append(step)
        if dg <= config.tau_ff and do <= config.tau_ff:
            converged = True
            break

    return FitResult(
        omega=omega,
        gamma=gamma,
        trace=trace,
        converged=converged,
        elapsed=time.perf_counter() - t0,
        config=config,
    )


def _likelihood(omega, phi, tt):
    M, q = phi.shape[0], phi.shape[1]
    p = omega.shape[0]
    tr = np.einsum("kij,kji->k", tt, phi).real
    return float(-log_det_pd(omega) / p + np.sum(tr - log_det_pd(phi)) / (M * q))


def extract_edges(result):
    """Edge sets from the split-variable supports of a fit.

    The q-graph has ``{i, j}`` when the group ``W^{(ij)}`` is nonzero, the
    p-graph when ``Wbar_ij != 0``; weights are ``||Phi^{(ij)}||`` and
    ``|Omega_ij|`` respectively.
    """
    return EdgeReport(
        omega_adj=result.omega.support(),
        gamma_adj=result.gamma.support(),
        omega_weights=np.abs(result.omega.omega),
        gamma_weights=result.gamma.group_norms(),
    )
