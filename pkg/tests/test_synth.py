import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpgraph.synth import (
    GroundTruth, NOISE_FAMILIES, companion, draw_noise, draw_var, gen_omega, generate_series,
    impulse_response, make_rng, make_truth, spectral_radius, true_edge_sets,
)


class TestVar:
    def test_companion_layout(self):
        A = np.arange(2 * 2 * 2, dtype=float).reshape(2, 2, 2)
        C = companion(A)
        np.testing.assert_array_equal(C[:2], np.hstack([A[0], A[1]]))
        np.testing.assert_array_equal(C[2:], np.hstack([np.eye(2), np.zeros((2, 2))]))

    @pytest.mark.parametrize("seed", range(5))
    def test_draws_are_stable(self, seed):
        A = draw_var(make_rng(seed))
        assert A.shape == (3, 5, 5)
        assert spectral_radius(A) <= 0.95

    def test_scalar_impulse_is_geometric(self):
        H = impulse_response(np.array([[[0.7]]]), L=10)
        np.testing.assert_allclose(H[:, 0, 0], 0.7 ** np.arange(11), rtol=1e-14)

    def test_impulse_recursion(self, rng):
        A = 0.3 * rng.standard_normal((3, 4, 4))
        H = impulse_response(A, L=12)
        for i in range(3, 13):
            np.testing.assert_allclose(H[i], A[0] @ H[i - 1] + A[1] @ H[i - 2] + A[2] @ H[i - 3],
                                       atol=1e-12)

    def test_block_structure(self):
        truth = make_truth(make_rng(3))
        off = np.ones((15, 15), bool)
        for b in range(3):
            off[5 * b:5 * b + 5, 5 * b:5 * b + 5] = False
        assert np.all(truth.B[:, off] == 0)
        np.testing.assert_array_equal(truth.B[0], np.eye(15))


class TestOmega:
    @pytest.mark.parametrize("seed", range(5))
    def test_min_eig_and_factor(self, seed):
        om, F = gen_omega(make_rng(seed), p_er=0.3)
        assert np.linalg.eigvalsh(om)[0] == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(F @ F.T @ om, np.eye(15), atol=1e-10)
        np.testing.assert_array_equal(om, om.T)

    def test_offdiagonal_magnitudes(self):
        om, _ = gen_omega(make_rng(1), p_er=0.5)
        vals = np.abs(om[~np.eye(15, dtype=bool)])
        vals = vals[vals > 0]
        assert vals.size and np.all((vals >= 0.1) & (vals <= 0.4))


class TestTruth:
    def test_white_truth_has_no_q_edges(self):
        B = np.zeros((3, 4, 4))
        B[0] = np.eye(4)
        truth = GroundTruth(B=B, F=np.eye(3), omega=np.eye(3))
        S_p, S_q = true_edge_sets(truth)
        assert not S_p.any() and not S_q.any()

    def test_psd_is_transfer_square(self):
        truth = make_truth(make_rng(2))
        f = np.array([0.0, 0.13, 0.5])
        S = truth.psd(f)
        for fi, Si in zip(f, S):
            direct = sum(truth.psi(t) * np.exp(-2j * np.pi * fi * t) for t in range(-truth.L, truth.L + 1))
            np.testing.assert_allclose(Si, direct, atol=1e-10)

    def test_edge_set_grid_stable(self):
        truth = make_truth(make_rng(4))
        a = true_edge_sets(truth, n_grid=256)
        b = true_edge_sets(truth, n_grid=1024)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_block_edges_only(self):
        _, S_q = true_edge_sets(make_truth(make_rng(6)))
        assert not S_q[:5, 5:].any() and not S_q[5:10, 10:].any()


class TestSeries:
    def test_autocovariance(self):
        """Sample lag covariances approach ``Psi(tau) kron Sigma``."""
        rng = make_rng(11)
        A = [np.array([[[0.5, 0.0], [0.2, 0.3]]])]
        B = impulse_response(A, L=30)
        om, F = gen_omega(rng, p=2, p_er=1.0)
        truth = GroundTruth(B=B, F=F, omega=om)
        Z = generate_series(truth, 200_000, rng).data
        z = Z.transpose(0, 2, 1).reshape(Z.shape[0], -1)  # column-stacked vec
        for tau in (0, 1, 2):
            emp = z[tau:].T @ z[: z.shape[0] - tau] / z.shape[0]
            ref = np.kron(truth.psi(tau), truth.sigma)
            assert np.max(np.abs(emp - ref)) < 0.05 * np.max(np.abs(np.kron(truth.psi(0), truth.sigma)))

    @pytest.mark.parametrize("family", NOISE_FAMILIES)
    def test_noise_moments(self, family):
        e = draw_noise(make_rng(0), (200_000,), family)
        assert abs(e.mean()) < 0.01 and abs(e.var() - 1) < 0.02

    def test_unknown_noise(self):
        with pytest.raises(ValueError):
            draw_noise(make_rng(0), (3,), "cauchy")

    def test_determinism(self):
        t1, t2 = make_truth(make_rng(9, 2)), make_truth(make_rng(9, 2))
        np.testing.assert_array_equal(t1.B, t2.B)
        z1 = generate_series(t1, 64, make_rng(9, 3)).data
        z2 = generate_series(t2, 64, make_rng(9, 3)).data
        np.testing.assert_array_equal(z1, z2)

    def test_q_not_multiple_of_block(self):
        with pytest.raises(ValueError):
            make_truth(make_rng(0), q=7)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gen_omega_invariants(seed):
    om, F = gen_omega(make_rng(seed), p=6, p_er=0.4)
    assert np.linalg.eigvalsh(om)[0] == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(np.linalg.inv(om), F @ F.T, atol=1e-9)
