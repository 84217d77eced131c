"""ADMM loop shared by the Gamma and Omega subproblem solvers.

Both subproblems have the form

    minimize  c0 * sum_k [ Re tr(Theta_k X_k) - ln|X_k| ] + P(X)

whose augmented-Lagrangian ``X`` step is a closed-form eigenvalue map and
whose split-variable step is the proximal operator of ``P``. The two solvers
differ only in ``c0``, the proximal operator and the absolute-tolerance scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import herm_eig, hermitian, logdet_root, sym_eig, symmetric


@dataclass(frozen=True)
class AdmmConfig:
    rho0: float = 2.0
    tau_abs: float = 1e-4
    tau_rel: float = 1e-4
    mu_bar: float = 10.0
    i_max: int = 100

    def __post_init__(self):
        for name in ("rho0", "tau_abs", "tau_rel", "mu_bar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mu_bar <= 1:
            raise ValueError("mu_bar must exceed 1")
        if int(self.i_max) < 1:
            raise ValueError("i_max must be at least 1")


@dataclass
class AdmmDiagnostics:
    iterations: int
    primal_residual: float
    dual_residual: float
    rho: float
    converged: bool
    # largest |c x^2 + delta x - 1| over every eigen-update of the solve
    max_root_residual: float = 0.0


def eigen_update(theta, W, U, rho, coef):
    """Minimizer of ``tr(Theta X) - ln|X| + (coef rho / 2) ||X - W + U||_F^2``.

    Works on a single matrix or a stack; real inputs give a real symmetric
    result, complex inputs a Hermitian one. Returns ``(X, root_residual)``.
    """
    c = coef * rho
    B = theta - c * (W - U)
    if np.iscomplexobj(B):
        delta, P = herm_eig(B)
        Ph = np.conj(np.swapaxes(P, -1, -2))
    else:
        delta, P = sym_eig(B)
        Ph = np.swapaxes(P, -1, -2)
    x = logdet_root(delta, c)
    resid = float(np.max(np.abs(c * x * x + delta * x - 1.0)))
    X = (P * x[..., None, :]) @ Ph
    X = hermitian(X) if np.iscomplexobj(X) else symmetric(X)
    return X, resid


def update_rho(rho, r_pri, r_dual, mu_bar):
    """Residual balancing; returns ``(new_rho, factor applied to scaled dual)``."""
    if r_pri > mu_bar * r_dual:
        return 2.0 * rho, 0.5
    if r_dual > mu_bar * r_pri:
        return 0.5 * rho, 2.0
    return rho, 1.0


def run_admm(
    theta: np.ndarray,
    coef: float,
    prox: Callable[[np.ndarray, float], np.ndarray],
    abs_scale: float,
    config: AdmmConfig,
    warm: Optional[np.ndarray] = None,
):
    """Generic loop; returns ``(X, W, U, diagnostics)``.

    ``warm`` initializes the split variable (``W = warm``, ``U = 0``);
    the default start is the identity.
    """
    theta = np.asarray(theta)
    d = theta.shape[-1]
    if warm is None:
        W = np.broadcast_to(np.eye(d), theta.shape).astype(theta.dtype)
    else:
        W = np.array(warm, dtype=theta.dtype)
    U = np.zeros_like(W)
    rho = float(config.rho0)
    max_root = 0.0
    converged = False
    r_pri = r_dual = np.inf
    it = 0
    for it in range(1, int(config.i_max) + 1):
        X, root = eigen_update(theta, W, U, rho, coef)
        max_root = max(max_root, root)
        W_old = W
        W = prox(X + U, rho)
        U = U + (X - W)

        r_pri = float(np.linalg.norm(X - W))
        r_dual = rho * float(np.linalg.norm(W - W_old))
        e1 = float(np.linalg.norm(X))
        e2 = float(np.linalg.norm(W))
        e3 = float(np.linalg.norm(U))
        tau_pri = abs_scale * config.tau_abs + config.tau_rel * max(e1, e2)
        tau_dual = abs_scale * config.tau_abs + config.tau_rel * e3 / rho
        if r_pri <= tau_pri and r_dual <= tau_dual:
            converged = True
            break
        rho, u_scale = update_rho(rho, r_pri, r_dual, config.mu_bar)
        if u_scale != 1.0:
            U = u_scale * U
    diag = AdmmDiagnostics(
        iterations=it,
        primal_residual=r_pri,
        dual_residual=r_dual,
        rho=rho,
        converged=converged,
        max_root_residual=max_root,
    )
    return X, W, U, diag
