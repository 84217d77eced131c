"""Per-cell log-ratio, detrend and unit mean-square scaling of positive series."""
from __future__ import annotations

import csv
import warnings

import numpy as np

from .io import InputError

KELVIN_OFFSET = 273.15
BUMP_FRACTION = 1e-6


def read_raw(path, kelvin=()):
    """Wide CSV ``t,row,<features...>`` into ``(array (n, p, q), feature names)``.

    Columns named in ``kelvin`` get ``273.15`` added (Celsius to Kelvin).
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path}: no records")
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[:2] != ["t", "row"]:
        raise InputError(f"{path}: header must start with t,row followed by feature columns")
    feats = header[2:]
    missing = [k for k in kelvin if k not in feats]
    if missing:
        raise InputError(f"unknown --kelvin column(s): {', '.join(missing)}")
    try:
        t = np.array([int(r[0]) for r in rows[1:]])
        i = np.array([int(r[1]) for r in rows[1:]])
        v = np.array([[float(x) for x in r[2:]] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: bad record ({exc})") from exc
    if v.shape[1] != len(feats):
        raise InputError(f"{path}: ragged rows")
    n, p = int(t.max()) + 1, int(i.max()) + 1
    if len(t) != n * p or t.min() < 0 or i.min() < 0:
        raise InputError(f"{path}: expected one record per (t, row) with n={n}, p={p}")
    X = np.full((n, p, len(feats)), np.nan)
    X[t, i] = v
    if np.isnan(X).any():
        raise InputError(f"{path}: duplicate or missing (t, row) records")
    for k in kelvin:
        X[:, :, feats.index(k)] += KELVIN_OFFSET
    return X, feats


def bump_zeros(X, fraction=BUMP_FRACTION):
    """Replace exact zeros by ``fraction`` times the cell's positive median."""
    X = np.array(X, dtype=float)
    n, p, q = X.shape
    for i in range(p):
        for j in range(q):
            x = X[:, i, j]
            zero = x == 0
            if zero.any():
                pos = x[x > 0]
                if pos.size:
                    x[zero] = fraction * np.median(pos)
    return X


def log_ratio_detrend_scale(X):
    """Pipeline for an ``(n, p, q)`` positive array; returns ``(n - 1, p, q)``.

    Per cell: ``y(t) = ln(x(t) / x(t-1))``, minus its least-squares line,
    scaled to unit mean square. Zero-variance cells become zeros with a warning.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[0] < 3:
        raise InputError("need an (n, p, q) array with n >= 3")
    bad = np.argwhere(np.any(~(X > 0), axis=0))
    if bad.size:
        cells = ", ".join(f"({i},{j})" for i, j in bad.tolist())
        raise InputError(f"non-positive values remain after the zero bump in cells {cells}")
    Y = np.diff(np.log(X), axis=0)
    m = Y.shape[0]
    tt = np.arange(m, dtype=float)
    V = np.vander(tt, 2)
    coef, *_ = np.linalg.lstsq(V, Y.reshape(m, -1), rcond=None)
    R = Y.reshape(m, -1) - V @ coef
    ms = np.mean(R * R, axis=0)
    scale = np.mean(Y.reshape(m, -1) ** 2, axis=0)
    degenerate = ms <= 1e-24 * np.maximum(scale, 1.0)
    out = np.zeros_like(R)
    ok = ~degenerate
    out[:, ok] = R[:, ok] / np.sqrt(ms[ok])
    if degenerate.any():
        p, q = X.shape[1:]
        cells = ", ".join(f"({k // q},{k % q})" for k in np.flatnonzero(degenerate))
        warnings.warn(f"zero-variance cells set to zero: {cells}", RuntimeWarning)
    return out.reshape(m, *X.shape[1:])


def preprocess(X):
    return log_ratio_detrend_scale(bump_zeros(X))
