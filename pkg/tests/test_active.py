import math

import numpy as np
import pytest

from weaklearn import accel, _accel_np
from weaklearn.active import (
    ActiveModel,
    WeakQuery,
    c1_closed_form,
    c2_closed_form,
    directional_constants,
    generic_weak_gradient,
    leastsquares_sgd_step,
    median_sgd_run,
    median_sgd_step,
    median_surrogate_classify,
    passive_classification_step,
    passive_regression_step,
)
from weaklearn.core import SeededRng, constraint_contains
from weaklearn.kernels import GaussianKernel, select_anchors


def make_model(m=2, p=3, d=2, seed=0, **kw):
    k = GaussianKernel(1.0)
    X = SeededRng(seed).normal(size=(max(p, 4), d))
    anchors = select_anchors(k, X, p, SeededRng(seed + 1))
    return ActiveModel(k, anchors, m, **kw)


def simulated_halfspace(y):
    y = np.atleast_1d(np.asarray(y, dtype=float))

    def answer(q: WeakQuery) -> float:
        inner = float((y - q.z) @ q.u)
        return 1.0 if inner >= 0.0 else -1.0

    return answer


def weiszfeld(points, iters=500):
    """Fixed-point iteration for the geometric median (independent oracle)."""
    z = points.mean(axis=0)
    for _ in range(iters):
        d = np.maximum(np.linalg.norm(points - z, axis=1), 1e-12)
        w = 1.0 / d
        z_new = (w[:, None] * points).sum(axis=0) / w.sum()
        if np.linalg.norm(z_new - z) < 1e-12:
            return z_new
        z = z_new
    return z


class TestDirectionalConstants:
    @pytest.mark.parametrize("m", [1, 2, 3, 5, 10, 50])
    def test_c2_mc_matches_closed_form(self, m):
        dc = directional_constants(m, 1.0, SeededRng(100 + m), samples=200_000)
        assert abs(dc.c2 - dc.c2_closed) <= 3 * dc.c2_se

    def test_c2_known_values(self):
        assert c2_closed_form(1) == pytest.approx(1.0)
        assert c2_closed_form(2) == pytest.approx(2 / math.pi)
        assert c2_closed_form(3) == pytest.approx(0.5)

    @pytest.mark.parametrize("m,M", [(1, 0.5), (2, 1.0), (5, 2.0)])
    def test_c1_mc_matches_closed_form(self, m, M):
        dc = directional_constants(m, M, SeededRng(7 * m), samples=400_000)
        assert dc.c1_closed == pytest.approx(c1_closed_form(m, M))
        assert abs(dc.c1 - dc.c1_closed) <= 4 * dc.c1_se

    def test_c2_decreases_with_dimension(self):
        vals = [c2_closed_form(m) for m in range(1, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_sample_floor_enforced(self):
        with pytest.raises(ValueError):
            directional_constants(2, 1.0, SeededRng(0), samples=10)


class TestGenericWeakGradient:
    def test_unbiased_for_fixed_gradient(self):
        grad = np.array([0.6, -0.3, 0.2])
        M_theta = 1.0
        rng = SeededRng(11)

        def bit(u, v):
            return 1.0 if float(grad @ u) >= v else 0.0

        n = 200_000
        acc = np.zeros(3)
        for _ in range(n):
            acc += generic_weak_gradient(bit, M_theta, 3, rng)
        est = acc / n
        # variance per coordinate is O((d M)^2 / n)
        assert np.linalg.norm(est - grad) < 0.05

    def test_scale_and_support(self):
        rng = SeededRng(13)
        g = generic_weak_gradient(lambda u, v: 1.0, 2.0, 4, rng)
        assert np.linalg.norm(g) == pytest.approx(4 * 4 * 2.0)
        g0 = generic_weak_gradient(lambda u, v: 0.0, 2.0, 4, rng)
        assert np.allclose(g0, 0.0)

    def test_rejects_bad_bits(self):
        with pytest.raises(ValueError):
            generic_weak_gradient(lambda u, v: 0.5, 1.0, 2, SeededRng(0))


class TestMedianSgd:
    def test_converges_to_geometric_median(self):
        # single anchor at the query point: the iterate is exactly the
        # prediction, and the halfspace bits drive it to the spatial median
        k = GaussianKernel(1.0)
        X = np.zeros((1, 2))
        anchors = select_anchors(k, X, 1)
        model = ActiveModel(k, anchors, 2, schedule=("decaying", 1.0), averaging="runningMean")
        rng = SeededRng(17)
        pts = SeededRng(18).normal(size=(4000, 2)) + np.array([1.0, -0.5])
        for t in range(4000):
            median_sgd_step(model, X[0], simulated_halfspace(pts[t]), rng)
        target = weiszfeld(pts)
        assert np.linalg.norm(model.predict(X[0]) - target) < 0.15

    def test_step_update_structure(self):
        model = make_model(m=2, p=3, lam_reg=0.0, schedule=("constant", 0.3))
        x = np.array([0.1, 0.2])
        y = np.array([1.0, 2.0])
        a_before = model.a.copy()
        rng = SeededRng(23)
        probe = SeededRng(23)
        u_expected = probe.sphere(2)
        median_sgd_step(model, x, simulated_halfspace(y), rng)
        kx = model.kx(x)
        eps = model.query_log[-1][2]
        expected = a_before + 0.3 * eps * np.outer(kx, u_expected)
        assert np.allclose(model.a, expected, atol=1e-12)

    def test_sign_zero_is_plus_one(self):
        model = make_model(m=1, p=2)
        x = np.zeros(2)
        # oracle label exactly equals prediction (both zero) -> eps must be +1
        median_sgd_step(model, x, simulated_halfspace(np.zeros(1)), SeededRng(29))
        assert model.query_log[-1][2] == 1.0

    def test_ridge_keeps_norm_bounded(self):
        reg = make_model(m=1, p=3, lam_reg=0.5, schedule=("constant", 0.2), seed=4)
        free = make_model(m=1, p=3, lam_reg=0.0, schedule=("constant", 0.2), seed=4)
        rng_a, rng_b = SeededRng(31), SeededRng(31)
        y = np.array([50.0])
        x = np.array([0.0, 0.0])
        for _ in range(300):
            median_sgd_step(reg, x, simulated_halfspace(y), rng_a)
            median_sgd_step(free, x, simulated_halfspace(y), rng_b)
        assert np.linalg.norm(reg.a) < np.linalg.norm(free.a)

    def test_decaying_schedule(self):
        model = make_model(schedule=("decaying", 2.0))
        assert model.gamma(4) == pytest.approx(1.0)
        assert model.gamma(100) == pytest.approx(0.2)

    def test_same_seed_bit_identical(self):
        runs = []
        for _ in range(2):
            model = make_model(m=2, p=3, seed=6)
            rng = SeededRng(37)
            y = np.array([0.4, -0.7])
            for _ in range(50):
                median_sgd_step(model, np.array([0.1, 0.0]), simulated_halfspace(y), rng)
            runs.append(model.a.copy())
        assert np.array_equal(runs[0], runs[1])


class TestBulkRun:
    def _inputs(self, T=200, m=2, p=3, lam=0.0):
        model = make_model(m=m, p=p, seed=9, lam_reg=lam, schedule=("decaying", 0.7))
        rng = SeededRng(41)
        xs = SeededRng(42).normal(size=(T, 2))
        ys = SeededRng(43).normal(size=(T, m))
        return model, rng, xs, ys

    @pytest.mark.parametrize("lam", [0.0, 0.3])
    def test_bulk_matches_stepwise(self, lam):
        T = 120
        model_b, rng_b, xs, ys = self._inputs(T=T, lam=lam)
        eps_bulk = median_sgd_run(model_b, xs, ys, rng_b)

        model_s, rng_s, _, _ = self._inputs(T=T, lam=lam)
        eps_step = []
        for t in range(T):
            median_sgd_step(model_s, xs[t], simulated_halfspace(ys[t]), rng_s)
            eps_step.append(model_s.query_log[-1][2])
        assert np.allclose(model_b.a, model_s.a, atol=1e-9)
        assert np.allclose(model_b.a_sum, model_s.a_sum, atol=1e-8)
        assert np.array_equal(eps_bulk, np.array(eps_step))
        assert model_b.t == model_s.t == T

    def test_backends_agree(self):
        if accel.BACKEND == "numpy":
            pytest.skip("compiled backend unavailable")
        rng = SeededRng(47)
        p, m, T = 4, 3, 150
        a1 = rng.normal(size=(p, m))
        a2 = a1.copy()
        kxs = rng.uniform(size=(T, p))
        ys = rng.normal(size=(T, m))
        us = np.stack([SeededRng(48).substream(t).sphere(m) for t in range(T)])
        gammas = 0.5 / np.sqrt(np.arange(1, T + 1))
        M = rng.normal(size=(p, p))
        Kpp = M @ M.T
        s1 = np.zeros((p, m))
        s2 = np.zeros((p, m))
        e1 = accel.median_sgd_run(a1, kxs, ys, us, gammas, 0.2, Kpp, s1)
        e2 = _accel_np.median_sgd_run(a2, kxs, ys, us, gammas, 0.2, Kpp, s2)
        assert np.array_equal(e1, e2)
        assert np.allclose(a1, a2, atol=1e-10)
        assert np.allclose(s1, s2, atol=1e-9)

    def test_running_mean_prediction(self):
        model, rng, xs, ys = self._inputs(T=50)
        model.averaging = "runningMean"
        median_sgd_run(model, xs, ys, rng)
        assert np.allclose(model.coefficients(), model.a_sum / 50)


class TestLeastSquares:
    def test_pulls_toward_label_mean(self):
        k = GaussianKernel(1.0)
        X = np.zeros((1, 1))
        anchors = select_anchors(k, X, 1)
        model = ActiveModel(k, anchors, 1, schedule=("decaying", 4.0), averaging="runningMean")
        model.a[0, 0] = 3.0
        rng = SeededRng(53)
        y = np.array([0.5])
        M = 5.0

        def answer(q: WeakQuery) -> float:
            return 1.0 if float(y @ q.u) < q.threshold else 0.0

        for _ in range(5000):
            leastsquares_sgd_step(model, X[0], M, answer, rng)
        # bits only fire when the prediction overshoots, so it decays toward y
        assert abs(model.predict(X[0])[0] - y[0]) < 0.6

    def test_rejects_nonpositive_M(self):
        model = make_model(m=1)
        with pytest.raises(ValueError):
            leastsquares_sgd_step(model, np.zeros(2), 0.0, lambda q: 0.0, SeededRng(0))


class TestClassification:
    def test_surrogate_argmax(self):
        model = make_model(m=3, p=1, seed=2)
        model.a[0] = np.array([0.1, 0.9, 0.3])
        x = model.anchors.points[0]
        assert median_surrogate_classify(model, x) == 1

    def test_passive_step_moves_toward_set(self):
        model = make_model(m=4, p=2, seed=3, schedule=("constant", 0.5))
        rng = SeededRng(59)
        hits = []

        def answer(q: WeakQuery) -> float:
            return 1.0 if constraint_contains(q.s, 2) else 0.0

        x = np.array([0.2, -0.1])
        for _ in range(400):
            passive_classification_step(model, x, answer, rng)
        assert median_surrogate_classify(model, x) == 2
        assert model.t == 400


class TestPassiveRegression:
    def test_requires_1d(self):
        model = make_model(m=2)
        with pytest.raises(ValueError):
            passive_regression_step(model, np.zeros(2), lambda q: 1.0, SeededRng(0))

    def test_tracks_target(self):
        k = GaussianKernel(1.0)
        X = np.zeros((1, 1))
        anchors = select_anchors(k, X, 1)
        model = ActiveModel(k, anchors, 1, schedule=("decaying", 1.0), averaging="runningMean")
        rng = SeededRng(61)
        y = 0.8

        def answer(q: WeakQuery) -> float:
            return 1.0 if y >= float(q.z[0]) else -1.0

        for _ in range(6000):
            passive_regression_step(model, X[0], answer, rng)
        assert abs(model.predict(X[0])[0] - y) < 0.2

    def test_no_update_when_inside_halfline(self):
        model = make_model(m=1, p=2, seed=5)
        # prediction is 0; oracle says y >= threshold, and if threshold <= 0
        # the prediction already satisfies the constraint -> zero data step
        for seed in range(40):
            m2 = make_model(m=1, p=2, seed=5)
            rng = SeededRng(seed)
            probe = SeededRng(seed)
            thr = float(probe.normal())
            passive_regression_step(m2, np.zeros(2), lambda q: 1.0, rng)
            if thr <= 0:
                assert np.allclose(m2.a, 0.0)
            else:
                assert not np.allclose(m2.a, 0.0)


class TestWeakQuery:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            WeakQuery("equality")

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValueError):
            WeakQuery("halfspace", z=np.zeros(2), u=np.array([1.0, 1.0]))
