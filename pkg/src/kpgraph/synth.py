"""Synthetic ground truths and data from the finite MA generative model

    z(t) = sum_{i=0}^{L} (B_i kron F) e(t - i),   i.e.   Z(t) = sum_i F E(t-i) B_i^T,

with block-diagonal ``B_i`` built from three sparse stable VAR(3) impulse
responses and ``F F^T = Omega^{-1}`` for an Erdos-Renyi precision ``Omega``.

Random numbers come from numpy's PCG64 generator; replicate ``r`` of a
master seed ``s`` uses ``SeedSequence([s, r])`` so replicates do not depend
on execution order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hermitian, inv_pd, sqrt_pd, sym_eig
from .spectral import MatrixSeries

NOISE_FAMILIES = ("gaussian", "exponential", "uniform")


def make_rng(seed, replicate=None):
    """PCG64 generator for ``seed`` (optionally replicate ``replicate``)."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] if replicate is None else [int(seed), int(replicate)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def companion(A):
    """Companion matrix of VAR coefficients ``A`` with shape ``(order, d, d)``."""
    A = np.asarray(A, dtype=float)
    order, d, _ = A.shape
    C = np.zeros((order * d, order * d))
    C[:d] = np.concatenate(list(A), axis=1)
    if order > 1:
        C[d:, :-d] = np.eye((order - 1) * d)
    return C


def spectral_radius(A):
    return float(np.max(np.abs(np.linalg.eigvals(companion(A)))))


def draw_var(rng, d=5, order=3, density=0.05, scale=0.8, max_radius=0.95, max_tries=1000):
    """Sparse VAR coefficients, redrawn until the companion radius <= ``max_radius``."""
    for _ in range(max_tries):
        mask = rng.random((order, d, d)) < density
        vals = rng.uniform(-scale, scale, size=(order, d, d))
        A = np.where(mask, vals, 0.0)
        if spectral_radius(A) <= max_radius:
            return A
    raise RuntimeError(f"no stable VAR draw in {max_tries} attempts")


def gen_var_blocks(rng, n_blocks=3, d=5, order=3, density=0.05):
    """List of ``n_blocks`` coefficient arrays, each ``(order, d, d)``."""
    rng = make_rng(rng)
    return [draw_var(rng, d, order, density) for _ in range(n_blocks)]


def impulse_response(A, L=40):
    """``H_i = sum_k A_k H_{i-k} + I delta_i`` for ``i = 0..L``.

    ``A`` is one ``(order, d, d)`` array or a list of them; a list gives the
    block-diagonal response, shape ``(L + 1, q, q)``.
    """
    if isinstance(A, (list, tuple)):
        blocks = [impulse_response(a, L) for a in A]
        q = sum(b.shape[1] for b in blocks)
        B = np.zeros((L + 1, q, q))
        o = 0
        for b in blocks:
            d = b.shape[1]
            B[:, o : o + d, o : o + d] = b
            o += d
        return B
    A = np.asarray(A, dtype=float)
    order, d, _ = A.shape
    H = np.zeros((L + 1, d, d))
    H[0] = np.eye(d)
    for i in range(1, L + 1):
        for k in range(1, min(order, i) + 1):
            H[i] += A[k - 1] @ H[i - k]
    return H


def gen_omega(rng, p=15, p_er=0.05, low=0.1, high=0.4, diag=0.5, min_eig=0.5):
    """Erdos-Renyi precision with min eigenvalue ``min_eig``; returns ``(Omega, F)``.

    ``F`` is the inverse of the symmetric square root of ``Omega``.
    """
    rng = make_rng(rng)
    iu, ju = np.triu_indices(p, 1)
    edges = rng.random(iu.size) < p_er
    mag = rng.uniform(low, high, size=iu.size)
    sign = np.where(rng.random(iu.size) < 0.5, -1.0, 1.0)
    Ob = np.diag(np.full(p, diag))
    Ob[iu, ju] = np.where(edges, sign * mag, 0.0)
    Ob[ju, iu] = Ob[iu, ju]
    kappa = min_eig - sym_eig(Ob).values[0]
    Omega = Ob + kappa * np.eye(p)
    _, F = sqrt_pd(Omega, return_inverse=True)
    return Omega, F


@dataclass
class GroundTruth:
    """Model ``E{z(t+tau) z(t)^T} = Psi(tau) kron Sigma``."""

    B: np.ndarray
    F: np.ndarray
    omega: np.ndarray

    @property
    def p(self):
        return self.F.shape[0]

    @property
    def q(self):
        return self.B.shape[1]

    @property
    def L(self):
        return self.B.shape[0] - 1

    @property
    def sigma(self):
        return self.F @ self.F.T

    def psi(self, tau):
        """``Psi(tau) = sum_i B_i B_{i-tau}^T``."""
        tau = int(tau)
        out = np.zeros((self.q, self.q))
        for i in range(max(0, tau), self.L + 1):
            j = i - tau
            if 0 <= j <= self.L:
                out += self.B[i] @ self.B[j].T
        return out

    def transfer(self, f):
        """``H(f) = sum_i B_i exp(-i 2 pi f i)`` for an array of frequencies."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        E = np.exp(-2j * np.pi * np.outer(f, np.arange(self.L + 1)))
        return np.tensordot(E, self.B, axes=(1, 0))

    def psd(self, f):
        """``Sbar(f) = sum_tau Psi(tau) exp(-i 2 pi f tau) = H(f) H(f)^H``."""
        H = self.transfer(f)
        return hermitian(H @ np.conj(np.swapaxes(H, -1, -2)))

    def inverse_psd(self, f):
        return inv_pd(self.psd(f))


def make_truth(rng, p=15, q=15, L=40, p_er=0.05, block=5):
    """Ground truth following the block-VAR / Erdos-Renyi recipe."""
    rng = make_rng(rng)
    if q % block:
        raise ValueError(f"q={q} is not a multiple of the block size {block}")
    A = gen_var_blocks(rng, n_blocks=q // block, d=block)
    B = impulse_response(A, L)
    omega, F = gen_omega(rng, p=p, p_er=p_er)
    return GroundTruth(B=B, F=F, omega=omega)


def draw_noise(rng, shape, family="gaussian"):
    """Zero-mean, unit-variance i.i.d. noise."""
    if family == "gaussian":
        return rng.standard_normal(shape)
    if family == "exponential":
        return rng.standard_exponential(shape) - 1.0
    if family == "uniform":
        r = np.sqrt(3.0)
        return rng.uniform(-r, r, size=shape)
    raise ValueError(f"unknown noise family {family!r}; expected one of {NOISE_FAMILIES}")


def generate_series(truth, n, rng, noise="gaussian"):
    """``n`` samples ``Z(0..n-1)``; noise drawn for ``t = -L..n-1``."""
    rng = make_rng(rng)
    L = truth.L
    E = draw_noise(rng, (n + L, truth.p, truth.q), noise)
    Y = truth.F @ E
    Z = np.zeros((n, truth.p, truth.q))
    for i in range(L + 1):
        Z += Y[L - i : L - i + n] @ truth.B[i].T
    return MatrixSeries(Z)


def true_edge_sets(truth, n_grid=256, rel_tol=1e-8):
    """``(S_p, S_q)`` boolean adjacencies of the true graphs.

    ``S_q`` marks ``{i, j}`` when ``max_f |[Sbar^{-1}(f)]_ij|`` exceeds
    ``rel_tol`` times the largest entry over the grid ``f in [0, 0.5]``.
    """
    S_p = truth.omega != 0
    np.fill_diagonal(S_p, False)
    f = np.linspace(0.0, 0.5, n_grid)
    Sinv = np.abs(truth.inverse_psd(f))
    peak = Sinv.max(axis=0)
    S_q = peak > rel_tol * peak.max()
    np.fill_diagonal(S_q, False)
    return S_p, S_q
