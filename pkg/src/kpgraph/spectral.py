"""Normalized DFTs, window geometry and frequency-domain statistics.

Conventions: a series is stored as an array of shape ``(n, p, q)``; the
vectorization ``vec(Z)`` stacks columns, so cell ``(i, j)`` of ``Z`` is node
``j * p + i`` of the ``pq``-node graph.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import hermitian, log_det_pd, symmetric


@dataclass(frozen=True)
class MatrixSeries:
    """Length-``n`` sequence of real ``p x q`` matrices (``n`` even)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 3:
            raise ValueError(f"series must have shape (n, p, q), got {data.shape}")
        if data.shape[0] % 2:
            raise ValueError(f"series length must be even, got n={data.shape[0]}")
        if data.shape[0] == 0 or data.shape[1] == 0 or data.shape[2] == 0:
            raise ValueError("empty series")
        if not np.all(np.isfinite(data)):
            raise ValueError("series has non-finite entries")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, data, truncate_odd=True):
        """Build a series, dropping the last sample when ``n`` is odd."""
        data = np.asarray(data, dtype=float)
        if data.ndim == 3 and data.shape[0] % 2 and truncate_odd:
            warnings.warn(
                f"odd series length n={data.shape[0]}; dropping the last sample",
                stacklevel=2,
            )
            data = data[:-1]
        return cls(data)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p(self):
        return self.data.shape[1]

    @property
    def q(self):
        return self.data.shape[2]


@dataclass(frozen=True)
class DftStack:
    """``D_z(f_m)`` for ``m = 0..n-1``, shape ``(n, p, q)``."""

    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def q(self):
        return self.values.shape[2]


@dataclass(frozen=True)
class SpectralPlan:
    """Geometry of ``M`` windows of ``K = 2 m_t + 1`` adjacent DFT bins."""

    n: int
    K: int
    m_t: int
    M: int

    def __post_init__(self):
        if self.K != 2 * self.m_t + 1 or self.K < 1 or self.M < 1:
            raise ValueError(f"inconsistent window plan {self}")
        if self.M * self.K > self.n // 2 - 1:
            raise ValueError(f"windows exceed (0, n/2): {self}")

    @property
    def centers(self):
        """1-based DFT indices of the window centers."""
        k = np.arange(1, self.M + 1)
        return (k - 1) * self.K + self.m_t + 1

    @property
    def center_frequencies(self):
        return self.centers / self.n

    @property
    def members(self):
        """DFT indices of every window, shape ``(M, K)``."""
        ell = np.arange(-self.m_t, self.m_t + 1)
        return self.centers[:, None] + ell[None, :]


def plan_windows(n, M):
    """Largest odd ``K`` with ``M K <= n/2 - 1``, and the resulting plan."""
    n = int(n)
    M = int(M)
    if n % 2 or n <= 0:
        raise ValueError(f"n must be a positive even integer, got {n}")
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    K = (n // 2 - 1) // M
    if K % 2 == 0:
        K -= 1
    if K < 1:
        raise ValueError(f"no window of odd width fits: n={n}, M={M}")
    return SpectralPlan(n=n, K=K, m_t=(K - 1) // 2, M=M)


def dft(series, method="fft"):
    """Normalized DFT ``n^{-1/2} sum_t Z(t) exp(-i 2 pi m t / n)``."""
    data = series.data if isinstance(series, MatrixSeries) else np.asarray(series, float)
    n = data.shape[0]
    if n % 2:
        raise ValueError(f"series length must be even, got n={n}")
    if method == "fft":
        values = np.fft.fft(data, axis=0) / np.sqrt(n)
    elif method == "direct":
        t = np.arange(n)
        E = np.exp(-2j * np.pi * np.outer(t, t) / n)
        values = np.tensordot(E, data, axes=(1, 0)) / np.sqrt(n)
    else:
        raise ValueError(f"unknown DFT method {method!r}")
    return DftStack(values)


def window_dfts(dfts, plan):
    """DFT matrices grouped by window, shape ``(M, K, p, q)``."""
    if dfts.n != plan.n:
        raise ValueError(f"plan is for n={plan.n} but DFT stack has n={dfts.n}")
    return dfts.values[plan.members]


def _phi_stack(gamma):
    return np.asarray(getattr(gamma, "phi", gamma))


def _omega_matrix(omega):
    return np.asarray(getattr(omega, "omega", omega), dtype=float)


def theta_check(dfts, plan, gamma):
    """Real ``p x p`` statistic ``(1/MKq) sum Re{D conj(Phi_k) D^H}``."""
    X = window_dfts(dfts, plan)
    phi = _phi_stack(gamma)
    M, K, p, q = X.shape
    if phi.shape != (M, q, q):
        raise ValueError(f"expected Phi stack of shape {(M, q, q)}, got {phi.shape}")
    Y = X @ np.conj(phi)[:, None]
    Yr = Y.transpose(2, 0, 1, 3).reshape(p, -1)
    Xr = X.transpose(2, 0, 1, 3).reshape(p, -1)
    return symmetric((Yr @ np.conj(Xr).T).real / (M * K * q))


def theta_tilde(dfts, plan, omega):
    """Hermitian ``q x q`` statistics ``(1/Kp) sum_l D^T Omega conj(D)``."""
    X = window_dfts(dfts, plan)
    Om = _omega_matrix(omega)
    M, K, p, q = X.shape
    if Om.shape != (p, p):
        raise ValueError(f"expected Omega of shape {(p, p)}, got {Om.shape}")
    V = (Om @ np.conj(X)).reshape(M, K * p, q)
    Xt = X.transpose(0, 3, 1, 2).reshape(M, q, K * p)
    return hermitian((Xt @ V) / (K * p))


def a_traces(dfts, plan, omega, gamma):
    """``Re tr(A_k)`` with ``A_k = (1/Kp) sum_l D^H Omega D conj(Phi_k)``.

    Uses ``Re tr(A_k) = Re tr(Theta~_k Phi_k)`` (trace of a conjugate).
    """
    phi = _phi_stack(gamma)
    tt = theta_tilde(dfts, plan, omega)
    if phi.shape != tt.shape:
        raise ValueError(f"expected Phi stack of shape {tt.shape}, got {phi.shape}")
    return np.einsum("kij,kji->k", tt, phi).real


def neg_log_like(dfts, plan, omega, gamma):
    """Whittle negative log-likelihood ``G(Omega, Gamma)`` up to constants."""
    Om = _omega_matrix(omega)
    phi = _phi_stack(gamma)
    p = Om.shape[0]
    M, q = phi.shape[0], phi.shape[1]
    data = np.sum(a_traces(dfts, plan, Om, phi))
    return float(
        -log_det_pd(Om) / p - np.sum(log_det_pd(phi)) / (M * q) + data / (M * q)
    )
