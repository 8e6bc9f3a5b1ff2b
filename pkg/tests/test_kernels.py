import numpy as np
import pytest

from weaklearn.core import SeededRng
from weaklearn.kernels import (
    GaussianKernel,
    derivative_cross,
    fit_weights,
    jittered_cholesky,
    kernel_eval,
    kernel_partial,
    kernel_partial2,
    select_anchors,
    weights_at,
)


def central_diff_x(k, i, x, y, h=1e-5):
    """Oracle: central finite difference in x_i."""
    xp = x.copy()
    xm = x.copy()
    xp[i] += h
    xm[i] -= h
    return (kernel_eval(k, xp, y) - kernel_eval(k, xm, y)) / (2 * h)


def nested_diff(k, i, j, x, y, h=1e-4):
    """Oracle: nested central differences for d/dx_i d/dy_j."""
    yp = y.copy()
    ym = y.copy()
    yp[j] += h
    ym[j] -= h
    return (central_diff_x(k, i, x, yp, h) - central_diff_x(k, i, x, ym, h)) / (2 * h)


class TestKernelEval:
    def test_self_is_one(self):
        k = GaussianKernel(1.3)
        x = np.array([0.4, -2.0])
        assert kernel_eval(k, x, x) == 1.0

    def test_plugin_value(self):
        k = GaussianKernel(1.0)
        x = np.array([0.0, 0.0])
        y = np.array([1.0, 1.0])  # ||x-y||^2 = 2
        assert kernel_eval(k, x, y) == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_matches_distance_identity(self):
        rng = SeededRng(11)
        k = GaussianKernel(0.7)
        for _ in range(20):
            x = rng.normal(size=4)
            y = rng.normal(size=4)
            d2 = float(np.sum((x - y) ** 2))
            assert kernel_eval(k, x, y) == pytest.approx(
                np.exp(-d2 / (2 * 0.7**2)), rel=1e-14
            )

    def test_symmetric_and_bounded(self):
        rng = SeededRng(3)
        k = GaussianKernel(2.0)
        x, y = rng.normal(size=3), rng.normal(size=3)
        assert kernel_eval(k, x, y) == kernel_eval(k, y, x)
        assert 0 < kernel_eval(k, x, y) <= 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            kernel_eval(GaussianKernel(1.0), np.zeros(2), np.zeros(3))


class TestDerivatives:
    def test_partial_zero_at_equal(self):
        k = GaussianKernel(1.0)
        x = np.array([1.0, 2.0])
        assert kernel_partial(k, 0, x, x) == 0.0

    def test_partial_plugin(self):
        k = GaussianKernel(1.0)
        x = np.array([1.0, 0.0])
        y = np.array([0.0, 0.0])  # x - y = e_0
        assert kernel_partial(k, 0, x, y) == pytest.approx(-np.exp(-0.5), rel=1e-14)

    def test_partial_antisymmetric(self):
        rng = SeededRng(5)
        k = GaussianKernel(0.9)
        x, y = rng.normal(size=3), rng.normal(size=3)
        for i in range(3):
            assert kernel_partial(k, i, x, y) == pytest.approx(
                -kernel_partial(k, i, y, x), rel=1e-12
            )

    def test_partial_finite_differences(self):
        rng = SeededRng(17)
        k = GaussianKernel(1.1)
        for _ in range(100):
            x = rng.normal(size=3)
            y = rng.normal(size=3)
            i = int(rng.integers(0, 3))
            assert abs(kernel_partial(k, i, x, y) - central_diff_x(k, i, x, y)) <= 1e-6

    def test_partial2_at_equal(self):
        k = GaussianKernel(0.5)
        x = np.array([0.3, -0.1])
        assert kernel_partial2(k, 0, 0, x, x) == pytest.approx(4.0)
        assert kernel_partial2(k, 0, 1, x, x) == 0.0

    def test_partial2_finite_differences(self):
        rng = SeededRng(23)
        k = GaussianKernel(1.0)
        for _ in range(100):
            x = rng.normal(size=2)
            y = rng.normal(size=2)
            i, j = int(rng.integers(0, 2)), int(rng.integers(0, 2))
            a = kernel_partial2(k, i, j, x, y)
            b = nested_diff(k, i, j, x, y)
            assert abs(a - b) <= 1e-4

    def test_index_out_of_range(self):
        k = GaussianKernel(1.0)
        with pytest.raises(IndexError):
            kernel_partial(k, 5, np.zeros(2), np.zeros(2))

    def test_derivative_cross_matches_pointwise(self):
        rng = SeededRng(2)
        k = GaussianKernel(0.8)
        X = rng.normal(size=(4, 3))
        A = X[:2]
        Z = derivative_cross(k, X, A)
        assert Z.shape == (12, 2)
        for l in range(4):
            for j in range(3):
                for i in range(2):
                    assert Z[l * 3 + j, i] == pytest.approx(
                        kernel_partial(k, j, X[l], A[i]), rel=1e-12, abs=1e-15
                    )


class TestGram:
    def test_psd_random_sets(self):
        rng = SeededRng(31)
        k = GaussianKernel(1.0)
        for _ in range(5):
            X = rng.normal(size=(20, 4))
            K = k.gram(X)
            assert np.allclose(K, K.T)
            assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.trace(K)

    def test_jitter_recovers_singular(self):
        X = np.zeros((3, 2))  # identical points: rank-1 Gram
        K = GaussianKernel(1.0).gram(X)
        factor = jittered_cholesky(K)
        assert factor is not None

    def test_jitter_gives_up(self):
        M = -np.eye(3)
        with pytest.raises(np.linalg.LinAlgError):
            jittered_cholesky(M)


class TestWeightingSchemes:
    def test_kernel_ridge_n1_lam0(self):
        w = fit_weights("kernelRidge", np.array([[0.0]]), kernel=GaussianKernel(1.0), lam=0.0)
        assert weights_at(w, np.array([0.0])) == pytest.approx([1.0])

    def test_kernel_ridge_matches_dense_solve(self):
        # oracle: explicit 3x3 inverse
        rng = SeededRng(41)
        X = rng.normal(size=(3, 2))
        k = GaussianKernel(1.0)
        lam = 0.1
        w = fit_weights("kernelRidge", X, kernel=k, lam=lam)
        K = k.gram(X)
        x = rng.normal(size=2)
        v = np.array([kernel_eval(k, x, xi) for xi in X])
        expected = np.linalg.inv(K + 3 * lam * np.eye(3)) @ v
        assert np.allclose(weights_at(w, x), expected, atol=1e-8)

    def test_kernel_ridge_reproduces_ridge_prediction(self):
        rng = SeededRng(43)
        X = rng.normal(size=(12, 2))
        y = rng.normal(size=12)
        k = GaussianKernel(1.0)
        lam = 0.05
        w = fit_weights("kernelRidge", X, kernel=k, lam=lam)
        K = k.gram(X)
        coef = np.linalg.solve(K + 12 * lam * np.eye(12), y)
        for x in rng.normal(size=(5, 2)):
            v = k.gram(x[None, :], X)[0]
            direct = float(v @ coef)
            via_weights = float(weights_at(w, x) @ y)
            assert via_weights == pytest.approx(direct, rel=1e-8, abs=1e-10)

    def test_knn_uniform_when_k_equals_n(self):
        X = np.arange(5.0)[:, None]
        w = fit_weights("knn", X, k=5)
        assert np.allclose(weights_at(w, np.array([2.2])), np.full(5, 0.2))

    def test_knn_indicator(self):
        X = np.array([[0.0], [1.0], [2.0]])
        w = fit_weights("knn", X, k=1)
        assert np.allclose(weights_at(w, np.array([1.0])), [0.0, 1.0, 0.0])

    def test_knn_tie_splitting(self):
        # x=0 with neighbors at distances 1,1 and k=1: each tied point gets 1/(pk), p=2
        X = np.array([[-1.0], [1.0], [5.0]])
        w = fit_weights("knn", X, k=1)
        got = weights_at(w, np.array([0.0]))
        assert np.allclose(got, [0.5, 0.5, 0.0])

    def test_knn_k_nonzero_entries_and_sum(self):
        rng = SeededRng(53)
        X = rng.normal(size=(30, 3))
        w = fit_weights("knn", X, k=7)
        for x in rng.normal(size=(10, 3)):
            a = weights_at(w, x)
            assert np.count_nonzero(a) == 7  # no ties a.s.
            assert a.sum() == pytest.approx(1.0)
            assert np.all(a >= 0)

    def test_knn_permutation_invariance(self):
        rng = SeededRng(59)
        X = rng.normal(size=(15, 2))
        perm = rng.permutation(15)
        w1 = fit_weights("knn", X, k=4)
        w2 = fit_weights("knn", X[perm], k=4)
        x = rng.normal(size=2)
        a1 = weights_at(w1, x)
        a2 = weights_at(w2, x)
        assert np.allclose(a1[perm], a2)

    def test_nadaraya_watson_normalized(self):
        rng = SeededRng(61)
        X = rng.normal(size=(10, 2))
        w = fit_weights("nadarayaWatson", X, h=0.5)
        a = weights_at(w, rng.normal(size=2))
        assert np.all(a >= 0) and a.sum() == pytest.approx(1.0)

    def test_weights_matrix_consistent(self):
        rng = SeededRng(67)
        X = rng.normal(size=(8, 2))
        Q = rng.normal(size=(3, 2))
        for kind, kw in [
            ("kernelRidge", dict(kernel=GaussianKernel(1.0), lam=0.1)),
            ("knn", dict(k=3)),
            ("nadarayaWatson", dict(h=1.0)),
        ]:
            w = fit_weights(kind, X, **kw)
            M = w.weights_matrix(Q)
            for r, x in enumerate(Q):
                assert np.allclose(M[r], weights_at(w, x), atol=1e-12)


class TestAnchors:
    def test_p_equals_n_identity(self):
        X = SeededRng(71).normal(size=(6, 2))
        k = GaussianKernel(1.0)
        a = select_anchors(k, X, 6)
        assert np.array_equal(a.indices, np.arange(6))

    def test_seed_determinism(self):
        X = SeededRng(73).normal(size=(20, 2))
        k = GaussianKernel(1.0)
        a1 = select_anchors(k, X, 5, SeededRng(9))
        a2 = select_anchors(k, X, 5, SeededRng(9))
        assert np.array_equal(a1.indices, a2.indices)

    def test_kpp_principal_submatrix(self):
        X = SeededRng(79).normal(size=(10, 3))
        k = GaussianKernel(0.9)
        a = select_anchors(k, X, 4, SeededRng(1))
        K = k.gram(X)
        assert np.allclose(a.K_pp, K[np.ix_(a.indices, a.indices)])
        assert np.allclose(a.K_np, K[:, a.indices])
        assert np.allclose(a.K_pp, a.K_pp.T)
        assert len(set(a.indices.tolist())) == 4

    def test_p_too_large(self):
        with pytest.raises(ValueError):
            select_anchors(GaussianKernel(1.0), np.zeros((3, 1)), 4, SeededRng(0))
