import numpy as np
import pytest

from weaklearn.core import ConstraintSet, LossSpec, SeededRng
from weaklearn.experiments import (
    CSV_HEADER,
    RECIPES,
    _set_loss_table,
    check_rows,
    eigenfunction_variance_ratios,
    knn_excess_risk,
    run_trials,
)


def rows_ok(rows, methods=None, metric=None):
    assert rows, "recipe produced no rows"
    for row in rows:
        assert len(row) == 5
        trial, param, method, met, value = row
        assert isinstance(trial, int)
        assert isinstance(param, float)
        assert isinstance(method, str) and isinstance(met, str)
        assert np.isfinite(value)
        if methods is not None:
            assert method in methods
        if metric is not None:
            assert met == metric


class TestRunTrials:
    def test_parallel_matches_sequential(self):
        def trial(rng, idx):
            return [(idx, 0.0, "m", "v", float(rng.normal()))]

        a = run_trials(trial, 6, seed=3, parallel=True)
        b = run_trials(trial, 6, seed=3, parallel=False)
        assert a == b

    def test_rows_ordered_by_trial(self):
        def trial(rng, idx):
            return [(idx, 0.0, "m", "v", 0.0), (idx, 1.0, "m", "v", 1.0)]

        rows = run_trials(trial, 5, seed=0)
        assert [r[0] for r in rows] == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]

    def test_trial_streams_independent_of_count(self):
        def trial(rng, idx):
            return [(idx, 0.0, "m", "v", float(rng.uniform()))]

        short = run_trials(trial, 2, seed=7)
        long = run_trials(trial, 5, seed=7)
        assert long[:2] == short


class TestSetLossTable:
    def test_matches_bruteforce(self):
        loss = LossSpec.zero_one(3)
        sets = [ConstraintSet.finite((0, 2)), ConstraintSet.finite((1,)),
                ConstraintSet.full()]
        for principle, agg in (("infimum", min), ("average", np.mean),
                               ("supremum", max)):
            M = _set_loss_table(loss, principle, sets)
            for i, s in enumerate(sets):
                members = (0, 1, 2) if s.variant == "full" else s.labels
                for z in range(3):
                    expected = agg([loss.table[z, y] for y in members])
                    assert M[i, z] == pytest.approx(float(expected))


class TestRecipes:
    def test_classification_corruption(self):
        rows = RECIPES["classification-corruption"](seed=0, trials=2, params={})
        rows_ok(rows, methods={"infimum", "average"}, metric="error")
        assert {r[1] for r in rows} == {0.5, 0.7, 0.9}
        assert all(0.0 <= r[4] <= 1.0 for r in rows)
        ok, msg = check_rows("classification-corruption", rows)
        assert ok, msg

    def test_classification_corruption_disambiguation(self):
        rows = RECIPES["classification-corruption-disambiguation"](
            seed=1, trials=1, params={"corruptions": (0.7,)})
        rows_ok(rows, methods={"infimum", "disambiguation"}, metric="error")
        assert all(0.0 <= r[4] <= 1.0 for r in rows)

    def test_interval_regression(self):
        rows = RECIPES["interval-regression"](
            seed=0, trials=1, params={"n": 150, "grid": 40})
        rows_ok(rows, methods={"disambiguation", "infimum"}, metric="mae")
        assert all(r[4] < 1.0 for r in rows)  # better than predicting zero-ish

    def test_concentric_circles(self):
        rows = RECIPES["concentric-circles"](seed=0, trials=1, params={})
        rows_ok(rows, methods={"disambiguation"}, metric="accuracy")
        ok, msg = check_rows("concentric-circles", rows)
        assert ok, msg

    def test_two_gaussians(self):
        rows = RECIPES["two-gaussians"](seed=0, trials=2, params={"ns": (100,)})
        rows_ok(rows, methods={"spectral", "graph"}, metric="error")
        assert all(0.0 <= r[4] <= 1.0 for r in rows)

    def test_eigenfunctions_rows(self):
        rows = RECIPES["eigenfunctions"](seed=0, trials=1, params={"n": 400})
        rows_ok(rows, methods={"spectral"}, metric="varianceRatio")
        assert [r[1] for r in rows] == [1.0, 2.0, 3.0, 4.0]
        assert all(r[4] >= 0.0 for r in rows)

    def test_eigenfunction_ratios_deterministic(self):
        a = eigenfunction_variance_ratios(SeededRng(0), n_unlabeled=400)
        b = eigenfunction_variance_ratios(SeededRng(0), n_unlabeled=400)
        assert a == b and len(a) == 4

    def test_sgd_regression(self):
        rows = RECIPES["sgd-regression"](
            seed=0, trials=2, params={"Ts": (300, 1500)})
        rows_ok(rows, methods={"active"}, metric="risk")
        by_T = {T: np.mean([r[4] for r in rows if r[1] == T])
                for T in (300.0, 1500.0)}
        assert by_T[1500.0] < by_T[300.0]

    def test_knn_rates(self):
        rows = RECIPES["knn-rates"](seed=0, trials=3, params={"ns": (100, 1000)})
        rows_ok(rows, methods={"knn"}, metric="excessRisk")
        means = {n: np.mean([r[4] for r in rows if r[1] == n])
                 for n in (100.0, 1000.0)}
        assert means[1000.0] < means[100.0]

    def test_knn_excess_risk_nonnegative(self):
        assert knn_excess_risk(SeededRng(4), 200) >= 0.0

    def test_active_vs_passive_rows(self):
        rows = RECIPES["active-vs-passive"](seed=0, trials=1, params={"T": 1500})
        rows_ok(rows, methods={"activeRegression", "passiveRegression",
                               "activeClassification", "passiveClassification"})
        assert len(rows) == 4

    def test_backend_benchmark(self):
        rows = RECIPES["backend-benchmark"](seed=0, trials=1, params={"T": 2000})
        rows_ok(rows, metric="seconds")
        assert len(rows) == 2 and all(r[4] > 0.0 for r in rows)

    def test_seed_determinism(self):
        a = RECIPES["knn-rates"](seed=5, trials=2, params={"ns": (100,)})
        b = RECIPES["knn-rates"](seed=5, trials=2, params={"ns": (100,)})
        assert a == b


class TestCheckRows:
    def test_header(self):
        assert CSV_HEADER == "trial,param,method,metric,value"

    def test_eigenfunctions_threshold(self):
        good = [(0, float(j), "spectral", "varianceRatio", 1e-3) for j in range(4)]
        bad = good[:3] + [(0, 4.0, "spectral", "varianceRatio", 0.5)]
        assert check_rows("eigenfunctions", good)[0]
        assert not check_rows("eigenfunctions", bad)[0]

    def test_knn_rates_threshold(self):
        rows = [(0, 100.0, "knn", "excessRisk", 0.2),
                (0, 1000.0, "knn", "excessRisk", 0.1)]
        assert check_rows("knn-rates", rows)[0]
        flat = [(0, 100.0, "knn", "excessRisk", 0.2),
                (0, 1000.0, "knn", "excessRisk", 0.25)]
        assert not check_rows("knn-rates", flat)[0]

    def test_sgd_slope_window(self):
        def rows_with_slope(s):
            return [(0, float(T), "active", "risk", T ** s)
                    for T in (1000, 10000)]

        assert check_rows("sgd-regression", rows_with_slope(-0.5))[0]
        assert not check_rows("sgd-regression", rows_with_slope(-0.9))[0]
        assert not check_rows("sgd-regression", rows_with_slope(-0.1))[0]

    def test_active_vs_passive_dominance(self):
        def rows(ar, pr, ac, pc):
            return [(0, 1e4, "activeRegression", "risk", ar),
                    (0, 1e4, "passiveRegression", "risk", pr),
                    (0, 1e4, "activeClassification", "error", ac),
                    (0, 1e4, "passiveClassification", "error", pc)]

        assert check_rows("active-vs-passive", rows(0.1, 0.2, 0.1, 0.2))[0]
        assert not check_rows("active-vs-passive", rows(0.3, 0.2, 0.1, 0.2))[0]

    def test_two_gaussians_threshold(self):
        rows = [(0, 400.0, "spectral", "error", 0.1),
                (0, 400.0, "graph", "error", 0.4)]
        assert check_rows("two-gaussians", rows)[0]
        assert not check_rows("two-gaussians", [
            (0, 400.0, "spectral", "error", 0.3),
            (0, 400.0, "graph", "error", 0.4)])[0]

    def test_unknown_recipe_passes(self):
        ok, msg = check_rows("backend-benchmark", [])
        assert ok and "no threshold" in msg
