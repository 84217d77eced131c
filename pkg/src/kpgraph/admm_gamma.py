"""Sparse-group-lasso ADMM for the ``M`` inverse-PSD factors ``Phi_k``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .admm import AdmmConfig, AdmmDiagnostics, eigen_update, run_admm
from .linalg import log_det_pd, soft_threshold


@dataclass
class GammaEstimate:
    """Stack ``phi`` of shape ``(M, q, q)``; ``w`` is the sparse split variable."""

    phi: np.ndarray
    w: Optional[np.ndarray] = None

    @property
    def M(self):
        return self.phi.shape[0]

    @property
    def q(self):
        return self.phi.shape[1]

    @property
    def gamma(self):
        """Concatenation ``[Phi_1 ... Phi_M]`` of shape ``(q, M q)``."""
        return np.concatenate(list(self.phi), axis=1)

    def norm(self):
        return float(np.linalg.norm(self.phi))

    def scaled(self, c):
        w = None if self.w is None else c * self.w
        return GammaEstimate(c * self.phi, w)

    def support(self):
        """Boolean ``q x q`` group support (nonzero across any ``k``), off-diagonal."""
        src = self.w if self.w is not None else self.phi
        S = np.any(src != 0, axis=0)
        np.fill_diagonal(S, False)
        return S

    def group_norms(self):
        """``||Phi^{(ij)}||`` over ``k`` for every pair."""
        return np.sqrt(np.sum(np.abs(self.phi) ** 2, axis=0))


def identity_gamma(M, q):
    return GammaEstimate(np.broadcast_to(np.eye(q, dtype=complex), (M, q, q)).copy())


def phi_update(theta, W, U, rho, M=None, q=None):
    """Eigen step for all ``k`` at once; returns ``(Phi, root_residual)``."""
    theta = np.asarray(theta, dtype=complex)
    if M is None:
        M = theta.shape[0] if theta.ndim == 3 else 1
    if q is None:
        q = theta.shape[-1]
    return eigen_update(theta, W, U, rho, M * q)


def w_update(G, U=None, lambda_q=0.0, alpha=0.05, rho=1.0):
    """Sparse-group proximal step on ``G = Phi + U`` (or on ``Phi`` and ``U``).

    Diagonals pass through; each off-diagonal group ``G^{(jl)}`` in ``C^M`` is
    elementwise soft-thresholded at ``alpha lambda / rho`` and then shrunk as a
    group. The upper triangle is computed and mirrored by conjugation.
    """
    G = np.asarray(G, dtype=complex)
    if U is not None:
        G = G + U
    M, q, _ = G.shape
    iu, ju = np.triu_indices(q, 1)
    g = G[:, iu, ju]
    s = soft_threshold(g, alpha * lambda_q / rho)
    nrm = np.sqrt(np.sum(np.abs(s) ** 2, axis=0))
    shrink = (1.0 - alpha) * lambda_q * np.sqrt(M) / rho
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(nrm > shrink, 1.0 - shrink / np.where(nrm > 0, nrm, 1.0), 0.0)
    w = fac * s
    W = np.zeros_like(G)
    W[:, iu, ju] = w
    W[:, ju, iu] = np.conj(w)
    d = np.arange(q)
    W[:, d, d] = G[:, d, d].real
    return W


def penalty_gamma(phi, lambda_q, alpha):
    phi = np.asarray(phi)
    M, q, _ = phi.shape
    off = ~np.eye(q, dtype=bool)
    l1 = np.sum(np.abs(phi[:, off]))
    grp = np.sum(np.sqrt(np.sum(np.abs(phi[:, off]) ** 2, axis=0)))
    return alpha * lambda_q * l1 + (1.0 - alpha) * np.sqrt(M) * lambda_q * grp


def objective_gamma(phi, theta, lambda_q, alpha):
    """Penalized ``L_2``: ``(1/Mq) sum_k [Re tr(Theta_k Phi_k) - ln|Phi_k|] + P_q``."""
    phi = np.asarray(phi)
    M, q, _ = phi.shape
    tr = np.trace(np.asarray(theta) @ phi, axis1=-2, axis2=-1).real
    smooth = np.sum(tr - log_det_pd(phi)) / (M * q)
    return float(smooth + penalty_gamma(phi, lambda_q, alpha))


def solve_gamma(theta_tilde, lambda_q, alpha=0.05, config=None, warm=None):
    """Minimize ``L_2`` over Hermitian PD ``Phi_k``.

    Returns ``(GammaEstimate, AdmmDiagnostics)``; the estimate carries the
    eigen-step iterate ``phi`` and the split variable ``w`` (exact zeros).
    """
    config = config or AdmmConfig()
    theta = np.asarray(theta_tilde, dtype=complex)
    if theta.ndim == 2:
        theta = theta[None]
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if lambda_q < 0:
        raise ValueError("lambda_q must be nonnegative")
    M, q, _ = theta.shape
    start = None if warm is None else np.asarray(getattr(warm, "phi", warm))

    def prox(G, rho):
        return w_update(G, None, lambda_q, alpha, rho)

    phi, W, _, diag = run_admm(
        theta, M * q, prox, q * np.sqrt(M), config, warm=start
    )
    return GammaEstimate(phi, W), diag
