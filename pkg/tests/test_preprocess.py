import warnings

import numpy as np
import pytest

from kpgraph.io import InputError
from kpgraph.preprocess import KELVIN_OFFSET, bump_zeros, log_ratio_detrend_scale, preprocess, read_raw


def test_unit_mean_square(rng):
    X = np.exp(rng.standard_normal((50, 3, 2)).cumsum(axis=0) * 0.1) + 1.0
    Y = preprocess(X)
    assert Y.shape == (49, 3, 2)
    np.testing.assert_allclose(np.mean(Y ** 2, axis=0), 1.0, rtol=0, atol=1e-10)


def test_residual_orthogonal_to_line(rng):
    X = rng.uniform(1, 2, size=(40, 2, 2))
    Y = log_ratio_detrend_scale(X)
    t = np.arange(39.0)
    for i in range(2):
        for j in range(2):
            assert abs(Y[:, i, j].sum()) < 1e-10 and abs((t * Y[:, i, j]).sum()) < 1e-9


def test_loop_oracle(rng):
    X = rng.uniform(1, 3, size=(30, 1, 2))
    Y = log_ratio_detrend_scale(X)
    for j in range(2):
        y = [np.log(X[t, 0, j] / X[t - 1, 0, j]) for t in range(1, 30)]
        tt = np.arange(29.0)
        b, a = np.polyfit(tt, y, 1)
        r = np.array(y) - (a + b * tt)
        np.testing.assert_allclose(Y[:, 0, j], r / np.sqrt(np.mean(r ** 2)), atol=1e-10)


def test_constant_series_warns_zero():
    X = np.full((10, 1, 2), 3.0)
    X[:, 0, 1] = np.linspace(1, 5, 10)
    with pytest.warns(RuntimeWarning, match=r"\(0,0\)"):
        Y = log_ratio_detrend_scale(X)
    assert np.all(Y[:, 0, 0] == 0)


def test_linear_in_log_removed():
    t = np.arange(20.0)
    X = np.exp(0.3 * t ** 2 / 2)[:, None, None]  # log-ratio is linear in t
    with pytest.warns(RuntimeWarning):
        Y = log_ratio_detrend_scale(X)
    assert np.max(np.abs(Y)) <= 1e-10


def test_zero_bump():
    X = np.array([[[0.0]], [[2.0]], [[4.0]]])
    B = bump_zeros(X)
    assert B[0, 0, 0] == pytest.approx(1e-6 * 3.0)


def test_nonpositive_cells_listed():
    X = np.ones((5, 2, 2))
    X[2, 1, 0] = -1.0
    X[:, 0, 1] = 0.0  # all zeros: nothing to bump from
    with pytest.raises(InputError, match=r"\(0,1\), \(1,0\)"):
        preprocess(X)


def test_read_raw(tmp_path):
    f = tmp_path / "raw.csv"
    f.write_text("t,row,temp,pm\n0,0,10,5\n0,1,11,6\n1,0,12,7\n1,1,13,8\n")
    X, feats = read_raw(f, kelvin=("temp",))
    assert feats == ["temp", "pm"] and X.shape == (2, 2, 2)
    assert X[1, 0, 0] == 12 + KELVIN_OFFSET and X[1, 1, 1] == 8
    with pytest.raises(InputError):
        read_raw(f, kelvin=("nope",))
    f.write_text("t,row,temp\n0,0,1\n0,0,2\n")
    with pytest.raises(InputError):
        read_raw(f)
