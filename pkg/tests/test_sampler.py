import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from orthokernel.sampler import (
    DegenerateDrawError,
    MatrixShape,
    Scheme,
    WeightMatrix,
    _inverse_sqrt_orthonormalize,
    make_rng,
    sample,
    sample_gaussian_fanin,
    sample_haar_rect,
    sample_haar_square,
    sample_suo,
    sample_suo_reference,
)

shapes = st.tuples(st.integers(1, 12), st.integers(1, 12)).map(lambda t: MatrixShape(*t))


class TestMatrixShape:
    def test_n_is_max(self):
        assert MatrixShape(3, 7).n == 7
        assert MatrixShape(9, 2).n == 9

    @pytest.mark.parametrize("m,k", [(0, 3), (3, 0), (-1, 2), (2.5, 2)])
    def test_invalid(self, m, k):
        with pytest.raises(ValueError):
            MatrixShape(m, k)


class TestGaussianFanin:
    def test_scalar_variance(self):
        draws = np.array([sample_gaussian_fanin(MatrixShape(1, 1), s).data[0, 0] for s in range(100_000)])
        assert 0.97 <= draws.var() <= 1.03

    def test_row_norm(self):
        sq = [np.sum(sample_gaussian_fanin(MatrixShape(3, 100), s).data ** 2, axis=1)
              for s in range(10_000)]
        assert 0.98 <= np.mean(sq) <= 1.02

    def test_deterministic(self):
        a = sample_gaussian_fanin(MatrixShape(4, 5), 123).data
        b = sample_gaussian_fanin(MatrixShape(4, 5), 123).data
        assert a.tobytes() == b.tobytes()


class TestHaarSquare:
    def test_n1_sign_balanced(self):
        vals = np.array([sample_haar_square(1, "O", s).data[0, 0] for s in range(10_000)])
        assert set(np.unique(vals)) == {-1.0, 1.0}
        assert stats.binomtest(int(np.sum(vals > 0)), vals.size).pvalue > 0.01

    def test_so_det_plus_one(self):
        for s in range(200):
            assert sample_haar_square(5, "SO", s).det() == pytest.approx(1.0, abs=1e-8)

    def test_so_minus_det(self):
        for s in range(200):
            assert sample_haar_square(5, "SOMinus", s).det() == pytest.approx(-1.0, abs=1e-8)
        assert sample_haar_square(1, "SOMinus", 0).data[0, 0] == -1.0

    def test_orthogonal(self):
        for s in range(200):
            M = sample_haar_square(4, "O", s).data
            assert np.linalg.norm(M.T @ M - np.eye(4)) <= 1e-10

    def test_so_shares_stream_with_o(self):
        # T-multiplication only touches the last column
        for s in range(50):
            O = sample_haar_square(6, "O", s).data
            S = sample_haar_square(6, "SO", s).data
            np.testing.assert_array_equal(O[:, :-1], S[:, :-1])

    def test_bad_component(self):
        with pytest.raises(ValueError):
            sample_haar_square(3, "U", 0)


class TestHaarRect:
    def test_square_matches_haar_o(self):
        a = np.array([sample_haar_rect(MatrixShape(3, 3), (1, i)).data[0, 0] for i in range(5000)])
        b = np.array([sample_haar_square(3, "O", (2, i)).data[0, 0] for i in range(5000)])
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_single_row_symmetric(self):
        first = np.array([sample_haar_rect(MatrixShape(1, 10), s).data[0, 0] for s in range(100_000)])
        assert -0.01 <= first.mean() <= 0.01

    def test_rows_orthonormal(self):
        W = sample_haar_rect(MatrixShape(2, 10), 4).data
        assert np.linalg.norm(W @ W.T - np.eye(2)) <= 1e-10

    def test_single_row_uniform_on_sphere(self):
        # (sqrt(n) u_1)^2 / n ~ Beta(1/2, (n-1)/2) for u uniform on S^{n-1}
        n = 10
        u1 = np.array([sample_haar_rect(MatrixShape(1, n), s).data[0, 0] for s in range(5000)])
        assert stats.kstest(u1**2, stats.beta(0.5, (n - 1) / 2).cdf).pvalue > 1e-3


class TestSUO:
    @given(shape=shapes, seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, shape, seed):
        W = sample_suo(shape, seed)
        assert W.residual() <= 1e-9
        m, k = shape.m, shape.k
        if m <= k:
            np.testing.assert_array_equal(W.data, sample_haar_rect(shape, seed).data)

    def test_tall_scaling(self):
        W = sample_suo(MatrixShape(8, 2), 3).data
        assert np.linalg.norm(W.T @ W - 4 * np.eye(2)) <= 1e-9

    def test_isometry(self):
        rng = np.random.default_rng(0)
        W = sample_suo(MatrixShape(7, 7), 9).data
        for _ in range(10):
            z = rng.standard_normal(7)
            assert np.linalg.norm(W @ z) == pytest.approx(np.linalg.norm(z), abs=1e-9)


class TestSUOReference:
    def test_wide_orthonormal(self):
        W = sample_suo_reference(MatrixShape(2, 5), 0).data
        assert np.linalg.norm(W @ W.T - np.eye(2)) <= 1e-8

    def test_tall(self):
        W = sample_suo_reference(MatrixShape(6, 3), 0).data
        assert np.linalg.norm(W.T @ W - 2 * np.eye(3)) <= 1e-8

    def test_scalar_is_sign(self):
        for s in range(50):
            x = sample_suo_reference(MatrixShape(1, 1), s).data[0, 0]
            assert abs(x) == pytest.approx(1.0, abs=1e-15)

    def test_matches_qr_route(self):
        a = np.array([sample_suo(MatrixShape(3, 3), (5, i)).data[0, 0] for i in range(10_000)])
        b = np.array([sample_suo_reference(MatrixShape(3, 3), (6, i)).data[0, 0] for i in range(10_000)])
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_ill_conditioned_input(self):
        rng = np.random.default_rng(0)
        U, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        V, _ = np.linalg.qr(rng.standard_normal((9, 6)))
        X = U @ np.diag(np.logspace(0, -5, 6)) @ V.T
        W = _inverse_sqrt_orthonormalize(X)
        assert np.linalg.norm(W @ W.T - np.eye(6)) <= 1e-12
        # polar factor of X
        np.testing.assert_allclose(W, U @ V.T, atol=1e-9)

    def test_degenerate_detected(self):
        X = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        with pytest.raises(DegenerateDrawError):
            _inverse_sqrt_orthonormalize(X)


class TestRotationInvariance:
    def test_right_rotation(self):
        shape = MatrixShape(3, 5)
        R = sample_haar_square(5, "O", 999).data
        a = np.array([sample_suo(shape, (1, i)).data[0, 0] for i in range(10_000)])
        b = np.array([(sample_suo(shape, (2, i)).data @ R)[0, 0] for i in range(10_000)])
        assert stats.ks_2samp(a, b).pvalue > 1e-3


class TestSeeding:
    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_bit_identical(self, scheme):
        shape = MatrixShape(4, 4)
        assert sample(scheme, shape, 42).to_bytes() == sample(scheme, shape, 42).to_bytes()

    def test_spawned_streams_independent_of_order(self):
        fwd = [make_rng((7, i)).standard_normal() for i in range(5)]
        rev = [make_rng((7, i)).standard_normal() for i in reversed(range(5))]
        assert fwd == rev[::-1]
        assert len(set(fwd)) == 5

    def test_square_scheme_needs_square(self):
        with pytest.raises(ValueError):
            sample(Scheme.HAAR_SO, MatrixShape(2, 3), 0)


class TestSerialisation:
    def test_binary_roundtrip(self):
        W = sample_suo(MatrixShape(3, 4), 1)
        raw = W.to_bytes()
        assert len(raw) == 3 * 4 * 8
        np.testing.assert_array_equal(WeightMatrix.array_from_bytes(raw, 3, 4), W.data)
        # little-endian row-major
        assert np.frombuffer(raw[:8], "<f8")[0] == W.data[0, 0]
        assert np.frombuffer(raw[8:16], "<f8")[0] == W.data[0, 1]

    def test_csv_roundtrip(self):
        W = sample_haar_rect(MatrixShape(2, 3), 5)
        back = np.array([[float(x) for x in line.split(",")] for line in W.to_csv().splitlines()])
        np.testing.assert_array_equal(back, W.data)
