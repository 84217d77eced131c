"""Dense linear-algebra kernels shared by the solvers.

All routines accept a single matrix or a stack ``(..., d, d)`` and are pure
functions of their inputs.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

# PD tolerance, relative to the largest eigenvalue
PD_RTOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix required to be positive definite is not."""


class EigenPair(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _check_square(A):
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrix (stack), got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def hermitian(A):
    """Return ``(A + A^H) / 2`` with an exactly real diagonal."""
    A = np.asarray(A)
    H = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    if np.iscomplexobj(H):
        d = np.arange(H.shape[-1])
        H[..., d, d] = H[..., d, d].real
    return H


def symmetric(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def herm_eig(A) -> EigenPair:
    """Eigendecomposition of a Hermitian matrix (or stack), ascending values."""
    A = _check_square(A)
    w, V = np.linalg.eigh(hermitian(A).astype(complex))
    return EigenPair(w, V)


def sym_eig(A) -> EigenPair:
    """Eigendecomposition of a real symmetric matrix (or stack)."""
    A = _check_square(A)
    if np.iscomplexobj(A):
        if np.any(A.imag != 0):
            raise ValueError("sym_eig expects a real matrix")
        A = A.real
    w, V = np.linalg.eigh(symmetric(A))
    return EigenPair(w, V)


def _pd_eigvalsh(A):
    A = _check_square(A)
    A = hermitian(A) if np.iscomplexobj(A) else symmetric(A)
    w = np.linalg.eigvalsh(A)
    top = np.max(w, axis=-1, keepdims=True)
    bad = (w[..., :1] <= PD_RTOL * np.maximum(top, 0.0)) | (top <= 0)
    if np.any(bad):
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite: minimum eigenvalue {np.min(w):.6g}"
        )
    return w


def log_det_pd(A):
    """Log-determinant of a symmetric/Hermitian positive definite matrix.

    Computed as the sum of log-eigenvalues; always real. Stacks return an
    array of log-determinants.
    """
    w = _pd_eigvalsh(A)
    return np.sum(np.log(w), axis=-1)


def soft_threshold(b, beta):
    """Complex soft-thresholding ``(1 - beta/|b|)_+ b``, elementwise.

    ``b = 0`` maps to 0.
    """
    if np.any(np.asarray(beta) < 0):
        raise ValueError("threshold must be nonnegative")
    b = np.asarray(b)
    mag = np.abs(b)
    keep = mag > beta
    # (mag - beta) / mag lies in (0, 1], so no overflow for tiny magnitudes
    scale = np.where(keep, (mag - beta) / np.where(keep, mag, 1.0), 0.0)
    out = scale * b
    return out if out.ndim else out[()]


def sqrt_pd(A, return_inverse=False):
    """Symmetric square root ``R`` with ``R @ R == A`` for PD ``A``.

    With ``return_inverse=True`` returns ``(R, R^{-1})``.
    """
    _pd_eigvalsh(A)
    w, V = sym_eig(A)
    s = np.sqrt(w)
    R = symmetric((V * s[..., None, :]) @ np.swapaxes(V, -1, -2))
    if not return_inverse:
        return R
    Rinv = symmetric((V / s[..., None, :]) @ np.swapaxes(V, -1, -2))
    return R, Rinv


def inv_pd(A):
    """Inverse of a symmetric/Hermitian PD matrix (or stack) via eigh."""
    _pd_eigvalsh(A)
    if np.iscomplexobj(A):
        w, V = herm_eig(A)
        return hermitian((V / w[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2)))
    w, V = sym_eig(A)
    return symmetric((V / w[..., None, :]) @ np.swapaxes(V, -1, -2))


def logdet_root(delta, c):
    """Positive root ``x`` of ``c x^2 + delta x - 1 = 0`` (elementwise).

    Both closed forms are algebraically equal; the branch avoids
    cancellation for large positive ``delta``.
    """
    delta = np.asarray(delta, dtype=float)
    disc = np.sqrt(delta * delta + 4.0 * c)
    with np.errstate(divide="ignore"):
        return np.where(delta >= 0, 2.0 / (delta + disc), (disc - delta) / (2.0 * c))
