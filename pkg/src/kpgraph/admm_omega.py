"""Lasso ADMM for the real row-precision factor ``Omega``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .admm import AdmmConfig, eigen_update, run_admm
from .linalg import log_det_pd, soft_threshold


@dataclass
class OmegaEstimate:
    """Symmetric PD ``omega``; ``w`` is the sparse split variable."""

    omega: np.ndarray
    w: Optional[np.ndarray] = None

    @property
    def p(self):
        return self.omega.shape[0]

    def support(self):
        src = self.w if self.w is not None else self.omega
        S = src != 0
        np.fill_diagonal(S, False)
        return S


def omega_eigen_update(theta_check, Wbar, Ubar, rho, p=None):
    """Eigen step; returns ``(Omega, root_residual)``."""
    theta = np.asarray(theta_check, dtype=float)
    p = theta.shape[-1] if p is None else p
    return eigen_update(theta, Wbar, Ubar, rho, p)


def omega_w_update(Omega_new, Ubar, lambda_p, rho):
    """Soft-threshold the off-diagonal of ``Omega_new + Ubar`` at ``lambda_p/rho``."""
    G = np.asarray(Omega_new, dtype=float) + np.asarray(Ubar, dtype=float)
    W = soft_threshold(G, lambda_p / rho)
    np.fill_diagonal(W, np.diag(G))
    return 0.5 * (W + W.T)


def objective_omega(omega, theta_check, lambda_p):
    """``L_1 = (1/p)(tr(Omega Theta) - ln|Omega|) + lambda_p ||Omega^-||_1``."""
    omega = np.asarray(omega, dtype=float)
    p = omega.shape[0]
    off = ~np.eye(p, dtype=bool)
    smooth = (np.sum(omega * theta_check) - log_det_pd(omega)) / p
    return float(smooth + lambda_p * np.sum(np.abs(omega[off])))


def solve_omega(theta_check, lambda_p, config=None, warm=None):
    """Minimize ``L_1`` over symmetric PD ``Omega``."""
    config = config or AdmmConfig()
    theta = np.asarray(theta_check, dtype=float)
    if lambda_p < 0:
        raise ValueError("lambda_p must be nonnegative")
    p = theta.shape[0]
    start = None if warm is None else np.asarray(getattr(warm, "omega", warm), float)

    def prox(G, rho):
        return omega_w_update(G, 0.0, lambda_p, rho)

    omega, W, _, diag = run_admm(theta, p, prox, p, config, warm=start)
    return OmegaEstimate(omega, W), diag
