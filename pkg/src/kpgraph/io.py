"""File formats: long-format series CSV, truth archives, JSON bundles, DOT graphs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .edges import EdgeReport, edge_list
from .spectral import MatrixSeries
from .synth import GroundTruth

SERIES_HEADER = ("t", "row", "col", "value")


class InputError(ValueError):
    """Malformed user input (exit code 2)."""


# ------------------------------------------------------------------ series


def write_series(path, series):
    """Long CSV ``t,row,col,value``; values written with ``repr`` (round-trip exact)."""
    Z = np.asarray(getattr(series, "data", series), dtype=float)
    n, p, q = Z.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for t in range(n):
            for i in range(p):
                for j in range(q):
                    w.writerow((t, i, j, repr(float(Z[t, i, j]))))


def read_series_array(path):
    """Parse a series CSV into an ``(n, p, q)`` array, checking the grid is complete."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(h.strip() for h in rows[0]) != SERIES_HEADER:
        raise InputError(f"{path}: header must be {','.join(SERIES_HEADER)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise InputError(f"{path}: no records")
    try:
        idx = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in body])
        val = np.array([float(r[3]) for r in body])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: bad record ({exc})") from exc
    if np.any(idx < 0):
        raise InputError(f"{path}: negative index")
    n, p, q = (idx.max(axis=0) + 1).tolist()
    if len(body) != n * p * q:
        raise InputError(f"{path}: expected {n * p * q} records for n={n}, p={p}, q={q}, got {len(body)}")
    Z = np.full((n, p, q), np.nan)
    seen = np.zeros((n, p, q), dtype=bool)
    seen[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    if not seen.all():
        raise InputError(f"{path}: duplicate or missing records")
    Z[idx[:, 0], idx[:, 1], idx[:, 2]] = val
    if not np.all(np.isfinite(Z)):
        raise InputError(f"{path}: non-finite values")
    return Z


def read_series(path):
    """:class:`MatrixSeries` from a CSV; an odd length drops the last sample with a warning."""
    return MatrixSeries.from_array(read_series_array(path), truncate_odd=True)


# ------------------------------------------------------------------- truth


def save_truth(path, truth):
    np.savez(path, B=truth.B, F=truth.F, omega=truth.omega)


def load_truth(path):
    with np.load(path) as z:
        return GroundTruth(B=z["B"], F=z["F"], omega=z["omega"])


# -------------------------------------------------------------------- JSON


def real_matrix(A):
    A = np.asarray(A, dtype=float)
    return {"dims": list(A.shape), "data": A.ravel().tolist()}


def complex_matrix(A):
    A = np.asarray(A, dtype=complex)
    return {"dims": list(A.shape), "real": A.real.ravel().tolist(), "imag": A.imag.ravel().tolist()}


def decode_matrix(obj):
    dims = obj["dims"]
    if "data" in obj:
        return np.asarray(obj["data"], dtype=float).reshape(dims)
    return (np.asarray(obj["real"]) + 1j * np.asarray(obj["imag"])).reshape(dims)


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------- DOT


def write_dot(path, name, A, W=None):
    """Undirected DOT graph; every node is listed, edges carry ``weight``."""
    A = np.asarray(A, dtype=bool)
    lines = [f"graph {name} {{"]
    lines += [f"  {i};" for i in range(A.shape[0])]
    for i, j in edge_list(A):
        w = 1.0 if W is None else float(W[i, j])
        lines.append(f"  {i} -- {j} [weight={w!r}];")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_edge_dots(outdir, report: EdgeReport, prefix=""):
    outdir = Path(outdir)
    paths = []
    for scope in ("omega", "gamma"):
        p = outdir / f"{prefix}{scope}.dot"
        write_dot(p, scope, report.adjacency(scope), report.normalized_weights(scope))
        paths.append(p)
    p = outdir / f"{prefix}combined.dot"
    write_dot(p, "combined", report.combined_adj, report.combined_weights())
    paths.append(p)
    return paths


# ------------------------------------------------------------------ config


@dataclass
class RunConfig:
    n: int = 256
    p: int = 15
    q: int = 15
    M: int = 4
    alpha: float = 0.05
    lambda_p: object = "auto"
    lambda_q: object = "auto"
    grid_points: int = 10
    noise: str = "gaussian"
    seed: int = 0
    runs: int = 20
    rho0: float = 2.0
    tau_abs: float = 1e-4
    tau_rel: float = 1e-4
    mu_bar: float = 10.0
    i_max: int = 100
    m_max: int = 20
    tau_ff: float = 1e-5

    @property
    def auto(self):
        return self.lambda_p == "auto" or self.lambda_q == "auto"


_INTS = {"n", "p", "q", "M", "grid_points", "seed", "runs", "i_max", "m_max"}
_POSITIVE = {"n", "p", "q", "M", "grid_points", "runs", "rho0", "tau_abs", "tau_rel", "i_max",
             "m_max", "tau_ff"}


def _coerce(key, value):
    if key in ("lambda_p", "lambda_q"):
        if isinstance(value, str) and value.strip().lower() == "auto":
            return "auto"
        v = float(value)
        if not v >= 0:
            raise InputError(f"{key} must be 'auto' or a nonnegative number")
        return v
    if key == "noise":
        from .synth import NOISE_FAMILIES

        if value not in NOISE_FAMILIES:
            raise InputError(f"noise must be one of {NOISE_FAMILIES}")
        return value
    if key in _INTS:
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise InputError(f"{key} must be an integer")
        v = int(float(value))
    else:
        v = float(value)
    if key in _POSITIVE and not v > 0:
        raise InputError(f"{key} must be positive")
    return v


def validate_config(raw):
    """:class:`RunConfig` from a mapping; unknown keys and bad values raise :class:`InputError`."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise InputError("config must be a mapping of key: value pairs")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(map(str, unknown))}")
    kw = {}
    for k, v in raw.items():
        try:
            kw[k] = _coerce(k, v)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad value for {k}: {v!r}") from exc
    cfg = RunConfig(**kw)
    if not 0 <= cfg.alpha <= 1:
        raise InputError("alpha must lie in [0, 1]")
    if cfg.mu_bar <= 1:
        raise InputError("mu_bar must exceed 1")
    if cfg.n % 2:
        raise InputError("n must be even")
    return cfg


def load_config(path=None, overrides=None):
    """Read a YAML / ``key: value`` file, apply overrides, validate."""
    raw = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"config {path} is not valid key: value text: {exc}") from exc
        if not isinstance(raw, dict):
            raise InputError(f"config {path} must be a mapping of key: value pairs")
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    return validate_config(raw)
