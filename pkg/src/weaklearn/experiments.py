"""Named experiment recipes and the trial runner.

Each recipe maps (seed, trials, params) to rows (trial, param, method,
metric, value).  Trials use independent rng substreams and may run in
parallel; parallel and sequential execution produce identical rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import accel
from .active import ActiveModel, median_sgd_run, passive_classification_step
from .core import LossSpec, SeededRng, WeakDataset
from .data import (
    corrupt_classification,
    gen_classification_stream,
    gen_concentric_circles,
    gen_interval_regression,
    gen_knn_rates_problem,
    gen_sin_regression,
    gen_two_gaussians,
    libsvm_to_dense,
    synthetic_unbalanced_records,
)
from .disambiguation import DisambiguationProblem, disambiguate_altmin, disambiguate_intervals
from .kernels import GaussianKernel, WeightingScheme, select_anchors
from .laplacian import SpectralFilter, first_eigenfunctions, fit_spectral, graph_laplacian_baseline
from .oracle import Oracle, SessionConfig, run_session

CSV_HEADER = "trial,param,method,metric,value"


def run_trials(trial_fn, trials: int, seed: int, parallel: bool = True) -> list:
    """Run trial_fn(rng, trial_index) -> rows for each trial on independent
    substreams; row order is by trial index regardless of scheduling."""
    root = SeededRng(seed)
    rngs = [root.substream(i) for i in range(trials)]
    if parallel and trials > 1:
        with ThreadPoolExecutor(max_workers=min(8, trials)) as pool:
            chunks = list(pool.map(trial_fn, rngs, range(trials)))
    else:
        chunks = [trial_fn(rngs[i], i) for i in range(trials)]
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# Shared helpers


def _set_loss_table(loss: LossSpec, principle: str, constraints) -> np.ndarray:
    """M[i, z] = set loss of predicting class z against constraint i."""
    table = loss.table
    M = np.zeros((len(constraints), table.shape[0]))
    for i, s in enumerate(constraints):
        members = list(range(table.shape[0])) if s.variant == "full" else list(s.labels)
        block = table[:, members]
        if principle == "infimum":
            M[i] = block.min(axis=1)
        elif principle == "average":
            M[i] = block.mean(axis=1)
        else:
            M[i] = block.max(axis=1)
    return M


def _classify_batch(weights: WeightingScheme, M: np.ndarray, X_test) -> np.ndarray:
    scores = weights.weights_matrix(X_test) @ M
    return scores.argmin(axis=1)


def _surrogate_classification(rng: SeededRng, n_train=200, n_test=100):
    X, y = libsvm_to_dense(synthetic_unbalanced_records(n_train + n_test))
    y = y.astype(int) - 1
    perm = rng.permutation(len(y))
    X, y = X[perm], y[perm]
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


# ---------------------------------------------------------------------------
# Recipes


def recipe_classification_corruption(seed: int, trials: int, params: dict) -> list:
    """Skewed set corruption on the bundled 3-class data: infimum vs average
    set-loss error as the corruption level grows."""
    corruptions = params.get("corruptions", (0.5, 0.7, 0.9))
    loss = LossSpec.zero_one(3)

    def trial(rng, idx):
        Xtr, ytr, Xte, yte = _surrogate_classification(rng)
        weights = WeightingScheme("knn", Xtr, k=int(params.get("k", 10)))
        rows = []
        for c in corruptions:
            sets = corrupt_classification(ytr, "skewed", float(c), rng, m=3)
            for principle in ("infimum", "average"):
                M = _set_loss_table(loss, principle, sets)
                err = float(np.mean(_classify_batch(weights, M, Xte) != yte))
                rows.append((idx, float(c), principle, "error", err))
        return rows

    return run_trials(trial, trials, seed)


def recipe_classification_corruption_disambiguation(seed, trials, params) -> list:
    """Disambiguate-then-learn vs direct infimum-loss inference under skewed
    corruption."""
    corruptions = params.get("corruptions", (0.5, 0.7, 0.9))
    loss = LossSpec.zero_one(3)

    def trial(rng, idx):
        Xtr, ytr, Xte, yte = _surrogate_classification(rng)
        k = int(params.get("k", 10))
        weights = WeightingScheme("knn", Xtr, k=k)
        A = weights.weights_matrix(Xtr)
        rows = []
        for c in corruptions:
            sets = corrupt_classification(ytr, "skewed", float(c), rng, m=3)
            M_inf = _set_loss_table(loss, "infimum", sets)
            err_il = float(np.mean(_classify_batch(weights, M_inf, Xte) != yte))
            rows.append((idx, float(c), "infimum", "error", err_il))
            completed = disambiguate_altmin(
                DisambiguationProblem(A, sets, loss)
            ).labels
            M_sup = loss.table[:, list(completed)].T  # plain losses to labels
            err_df = float(np.mean(_classify_batch(weights, M_sup, Xte) != yte))
            rows.append((idx, float(c), "disambiguation", "error", err_df))
        return rows

    return run_trials(trial, trials, seed)


def recipe_interval_regression(seed, trials, params) -> list:
    """Window regression of sin(10x): disambiguation vs infimum-loss decoding,
    mean absolute error on a fresh grid."""
    n = int(params.get("n", 300))
    k = int(params.get("k", 10))
    grid = np.linspace(0.0, 1.0, int(params.get("grid", 100)))
    target = np.sin(10.0 * grid)

    def trial(rng, idx):
        ds = gen_interval_regression(n, rng)
        weights = WeightingScheme("knn", ds.inputs, k=k)
        W = weights.weights_matrix(grid[:, None])  # (g, n)
        A = weights.weights_matrix(ds.inputs)
        y_hat, _ = disambiguate_intervals(A, ds.constraints)
        mae_df = float(np.mean(np.abs(W @ y_hat - target)))
        # infimum-loss inference: 1-D grid argmin of the weighted set loss
        from .partial import PartialEstimator, infer_interval_regression

        est = PartialEstimator(weights, LossSpec.absolute_deviation(), "infimum",
                               grid_points=300)
        preds = np.array([infer_interval_regression(est, ds, np.array([g])) for g in grid])
        mae_il = float(np.mean(np.abs(preds - target)))
        return [
            (idx, float(n), "disambiguation", "mae", mae_df),
            (idx, float(n), "infimum", "mae", mae_il),
        ]

    return run_trials(trial, trials, seed)


def circle_grid_truth(side: int = 50, extent: float = 4.5):
    axis = np.linspace(-extent, extent, side)
    gx, gy = np.meshgrid(axis, axis)
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    truth = np.clip(np.round(np.linalg.norm(grid, axis=1)), 1, 4).astype(int) - 1
    return grid, truth


def run_circles_once(rng: SeededRng, n_unlabeled=2000, k=20, h=0.2):
    """One concentric-circles run: disambiguate with k-NN weights, predict the
    evaluation grid with Nadaraya-Watson votes.  Returns (accuracy, labels)."""
    ds = gen_concentric_circles(n_unlabeled, rng)
    loss = LossSpec.zero_one(4)
    knn = WeightingScheme("knn", ds.inputs, k=k)
    A = knn.weights_matrix(ds.inputs)
    completed = disambiguate_altmin(DisambiguationProblem(A, ds.constraints, loss)).labels
    grid, truth = circle_grid_truth()
    nw = WeightingScheme("nadarayaWatson", ds.inputs, h=h)
    M = loss.table[:, list(completed)].T  # (n, m) plain losses to completed labels
    preds = _classify_batch(nw, M, grid)
    return float(np.mean(preds == truth)), completed, ds


def recipe_concentric_circles(seed, trials, params) -> list:
    n_unlabeled = int(params.get("n", 2000))

    def trial(rng, idx):
        acc, _, _ = run_circles_once(rng, n_unlabeled=n_unlabeled,
                                     k=int(params.get("k", 20)))
        return [(idx, float(n_unlabeled), "disambiguation", "accuracy", acc)]

    return run_trials(trial, trials, seed)


def recipe_two_gaussians(seed, trials, params) -> list:
    """Semi-supervised two-Gaussian comparison: spectral Laplacian-regularized
    estimator vs the graph-Laplacian baseline across sample sizes."""
    ns = tuple(int(v) for v in params.get("ns", (100, 200, 400)))
    d, delta = 10, 3.0
    lam = float(params.get("lam", 1.0))
    p = int(params.get("p", 50))
    sigma = float(params.get("sigma", 3.0))

    def trial(rng, idx):
        rows = []
        for n in ns:
            nl = n // 10
            X, y = gen_two_gaussians(n, nl, rng, d=d, delta=delta)
            kernel = GaussianKernel(sigma)
            anchors = select_anchors(kernel, X, min(p, n), rng)
            model = fit_spectral(
                kernel, X, y[:nl].astype(float), anchors,
                SpectralFilter("tikhonov", lam), mu=1.0 / n,
            )
            pred = np.sign(model.predict(X[nl:]))
            pred[pred == 0] = 1
            err_spec = float(np.mean(pred != y[nl:]))
            sigma_n = n ** (-1.0 / (d + 4)) * math.log(n)
            fu = graph_laplacian_baseline(sigma_n, X, y[:nl].astype(float))
            gpred = np.sign(fu)
            gpred[gpred == 0] = 1
            err_graph = float(np.mean(gpred != y[nl:]))
            rows.append((idx, float(n), "spectral", "error", err_spec))
            rows.append((idx, float(n), "graph", "error", err_graph))
        return rows

    return run_trials(trial, trials, seed)


def eigenfunction_variance_ratios(rng: SeededRng, n_unlabeled=2000, p=None, k_eig=4,
                                  sigma=0.2, lam=1.0, mu=None):
    """Within-circle vs between-circle variance of the top generalized
    eigenfunctions on the concentric-circles inputs.

    Defaults anchor on every input point (p = n) with bandwidth 0.2 (one
    fifth of the innermost radius) and mu = 1/n."""
    ds = gen_concentric_circles(n_unlabeled, rng)
    X = ds.inputs
    radii = np.round(np.linalg.norm(X, axis=1)).astype(int)
    kernel = GaussianKernel(sigma)
    p = X.shape[0] if p is None else p
    anchors = select_anchors(kernel, X, min(p, X.shape[0]), rng)
    model = fit_spectral(kernel, X, np.zeros(X.shape[0]), anchors,
                         SpectralFilter("tikhonov", lam),
                         mu if mu is not None else 1.0 / X.shape[0])
    funcs = first_eigenfunctions(model, k_eig, X)
    ratios = []
    for e in funcs:
        groups = [e[radii == r] for r in (1, 2, 3, 4)]
        within = float(np.mean([g.var() for g in groups if g.size]))
        between = float(np.var([g.mean() for g in groups if g.size]))
        ratios.append(within / max(between, 1e-30))
    return ratios


def recipe_eigenfunctions(seed, trials, params) -> list:
    def trial(rng, idx):
        ratios = eigenfunction_variance_ratios(
            rng,
            n_unlabeled=int(params.get("n", 2000)),
            p=int(params["p"]) if "p" in params else None,
            sigma=float(params.get("sigma", 0.2)),
        )
        return [(idx, float(j + 1), "spectral", "varianceRatio", r)
                for j, r in enumerate(ratios)]

    return run_trials(trial, trials, seed)


# ---------------------------------------------------------------------------
# One-bit SGD tasks


def sin_risk(model: ActiveModel, grid=None) -> float:
    grid = np.linspace(0.0, 1.0, 200) if grid is None else grid
    preds = model.kernel.gram(grid[:, None], model.anchors.points) @ model.coefficients()
    return float(np.mean(np.abs(preds[:, 0] - np.sin(2 * np.pi * grid))))


def make_sin_model(rng: SeededRng, T: int, gamma0: float, schedule_kind="constant",
                   sigma=0.2, p=50, lam_reg=0.0) -> tuple:
    xs, ys = gen_sin_regression(T, rng)
    kernel = GaussianKernel(sigma)
    anchor_rng = SeededRng(int(rng.integers(0, 2**31)))
    anchors = select_anchors(kernel, xs, min(p, T), anchor_rng)
    gamma = gamma0 / math.sqrt(T) if schedule_kind == "constant" else gamma0
    model = ActiveModel(kernel, anchors, 1, schedule=(schedule_kind, gamma),
                        lam_reg=lam_reg, averaging="runningMean")
    return model, xs, ys


def active_sin_run(rng: SeededRng, T: int, gamma0: float = 7.5) -> float:
    model, xs, ys = make_sin_model(rng, T, gamma0)
    median_sgd_run(model, xs, ys, rng)
    return sin_risk(model)


def passive_sin_run(rng: SeededRng, T: int, gamma0: float = 7.5) -> float:
    """Passive baseline: Gaussian thresholds, infimum-loss subgradient; the
    loop mirrors the per-step function but batches the kernel rows."""
    model, xs, ys = make_sin_model(rng, T, gamma0)
    kxs = model.kernel.gram(xs, model.anchors.points)
    thresholds = rng.normal(size=T)
    a = model.a
    for t in range(T):
        thr = thresholds[t]
        eps = 1.0 if ys[t] >= thr else -1.0
        kx = kxs[t]
        f = float(kx @ a[:, 0])
        g = model.gamma(t + 1)
        inside = (f >= thr) if eps > 0 else (f <= thr)
        if not inside:
            direction = -1.0 if f < thr else 1.0
            a[:, 0] -= g * direction * kx
        model.a_sum += a
    model.t = T
    return sin_risk(model)


def recipe_sgd_regression(seed, trials, params) -> list:
    Ts = tuple(int(v) for v in params.get("Ts", (1000, 3000, 10000)))
    gamma0 = float(params.get("gamma0", 7.5))

    def trial(rng, idx):
        rows = []
        for T in Ts:
            risk = active_sin_run(rng.substream(T), T, gamma0)
            rows.append((idx, float(T), "active", "risk", risk))
        return rows

    return run_trials(trial, trials, seed)


def stream_bayes(x: float) -> int:
    if x < 0.25:
        return 0
    if x < 0.75:
        return 1
    return 2


def classification_stream_risk(model: ActiveModel, epsilon: float) -> float:
    grid = np.linspace(0.0, 1.0, 400)
    grid = grid[(np.abs(grid - 0.25) > epsilon) & (np.abs(grid - 0.75) > epsilon)]
    preds = (model.kernel.gram(grid[:, None], model.anchors.points)
             @ model.coefficients()).argmax(axis=1)
    bayes = np.array([stream_bayes(g) for g in grid])
    return float(np.mean(preds != bayes))


def active_stream_run(rng: SeededRng, T: int, m=10, epsilon=1 / 20,
                      gamma0: float = 7.5) -> float:
    """Median-surrogate classification: halfspace SGD onto one-hot targets."""
    xs, ys = gen_classification_stream(T, m, epsilon, rng)
    kernel = GaussianKernel(0.2)
    anchors = select_anchors(kernel, xs, min(50, T), SeededRng(int(rng.integers(0, 2**31))))
    model = ActiveModel(kernel, anchors, m,
                        schedule=("constant", gamma0 / math.sqrt(T)),
                        averaging="runningMean")
    onehot = np.eye(m)[ys]
    median_sgd_run(model, xs, onehot, rng)
    return classification_stream_risk(model, epsilon)


def passive_stream_run(rng: SeededRng, T: int, m=10, epsilon=1 / 20,
                       gamma0: float = 15.0) -> float:
    """Membership-bit baseline on the same stream."""
    xs, ys = gen_classification_stream(T, m, epsilon, rng)
    kernel = GaussianKernel(0.2)
    anchors = select_anchors(kernel, xs, min(50, T), SeededRng(int(rng.integers(0, 2**31))))
    model = ActiveModel(kernel, anchors, m,
                        schedule=("constant", gamma0 / math.sqrt(T)),
                        averaging="runningMean")
    for t in range(T):
        y_t = int(ys[t])
        answer = lambda q: 1.0 if y_t in q.s.labels else 0.0
        passive_classification_step(model, xs[t], answer, rng)
    return classification_stream_risk(model, epsilon)


def recipe_sgd_classification(seed, trials, params) -> list:
    Ts = tuple(int(v) for v in params.get("Ts", (1000, 3000, 10000)))
    m = int(params.get("m", 10))

    def trial(rng, idx):
        rows = []
        for T in Ts:
            risk = active_stream_run(rng.substream(T), T, m=m)
            rows.append((idx, float(T), "active", "error", risk))
        return rows

    return run_trials(trial, trials, seed)


def recipe_active_vs_passive(seed, trials, params) -> list:
    """Paired-seed dominance comparison at a single budget, both tasks."""
    T = int(params.get("T", 10_000))

    def trial(rng, idx):
        rows = [
            (idx, float(T), "activeRegression", "risk",
             active_sin_run(rng.substream(1), T)),
            (idx, float(T), "passiveRegression", "risk",
             passive_sin_run(rng.substream(2), T)),
            (idx, float(T), "activeClassification", "error",
             active_stream_run(rng.substream(3), T)),
            (idx, float(T), "passiveClassification", "error",
             passive_stream_run(rng.substream(4), T)),
        ]
        return rows

    return run_trials(trial, trials, seed)


def knn_excess_risk(rng: SeededRng, n: int, alpha: float = 1.0,
                    n_test: int = 2000) -> float:
    """Conditional excess 0-1 risk of the k-NN plug-in rule, k = floor(n^(2/3))."""
    X, y = gen_knn_rates_problem(alpha, n, rng)
    Xt, _ = gen_knn_rates_problem(alpha, n_test, rng)
    k = max(1, int(math.floor(n ** (2.0 / 3.0))))
    weights = WeightingScheme("knn", X, k=k)
    scores = weights.weights_matrix(Xt) @ y.astype(float)
    pred = np.where(scores >= 0, 1, -1)
    g = np.sign(Xt[:, 0]) * np.abs(Xt[:, 0]) ** (1.0 / alpha)
    bayes = np.where(g >= 0, 1, -1)
    return float(np.mean(np.abs(g) * (pred != bayes)))


def recipe_knn_rates(seed, trials, params) -> list:
    ns = tuple(int(v) for v in params.get("ns", (100, 1000, 10000)))
    alpha = float(params.get("alpha", 1.0))

    def trial(rng, idx):
        return [(idx, float(n), "knn", "excessRisk",
                 knn_excess_risk(rng.substream(n), n, alpha)) for n in ns]

    return run_trials(trial, trials, seed)


def recipe_backend_benchmark(seed, trials, params) -> list:
    """Timing comparison of the compiled and numpy SGD inner loops."""
    import timeit

    from . import _accel_np

    T = int(params.get("T", 5000))
    p = int(params.get("p", 50))
    m = int(params.get("m", 4))
    rng = SeededRng(seed)
    kxs = rng.uniform(size=(T, p))
    ys = rng.normal(size=(T, m))
    us = rng.normal(size=(T, m))
    us /= np.linalg.norm(us, axis=1, keepdims=True)
    gammas = 1.0 / np.sqrt(np.arange(1, T + 1))
    Kpp = np.eye(p)
    rows = []
    for idx in range(trials):
        for name, fn in (("numpy", _accel_np.median_sgd_run),
                         (accel.BACKEND, accel.median_sgd_run)):
            a = np.zeros((p, m))
            avg = np.zeros((p, m))
            sec = timeit.timeit(
                lambda: fn(a, kxs, ys, us, gammas, 0.1, Kpp, avg), number=1
            )
            rows.append((idx, float(T), name, "seconds", float(sec)))
    return rows


RECIPES = {
    "classification-corruption": recipe_classification_corruption,
    "classification-corruption-disambiguation":
        recipe_classification_corruption_disambiguation,
    "interval-regression": recipe_interval_regression,
    "concentric-circles": recipe_concentric_circles,
    "two-gaussians": recipe_two_gaussians,
    "eigenfunctions": recipe_eigenfunctions,
    "sgd-regression": recipe_sgd_regression,
    "sgd-classification": recipe_sgd_classification,
    "active-vs-passive": recipe_active_vs_passive,
    "knn-rates": recipe_knn_rates,
    "backend-benchmark": recipe_backend_benchmark,
}


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for trial, param, method, metric, value in rows:
        lines.append(f"{trial},{param!r},{method},{metric},{value!r}")
    return "\n".join(lines) + "\n"


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(rows, width=640, height=400, log_x=False, log_y=False) -> str:
    """Minimal SVG 1.1 line plot: per-method mean across trials with a
    mean +- sd band, x axis = the param column."""
    margin = 50.0
    methods = sorted({r[2] for r in rows})
    series = {}
    for method in methods:
        xs = sorted({r[1] for r in rows if r[2] == method})
        mean, sd = [], []
        for x in xs:
            vals = np.array([r[4] for r in rows if r[2] == method and r[1] == x])
            mean.append(float(vals.mean()))
            sd.append(float(vals.std()))
        series[method] = (np.array(xs, dtype=float), np.array(mean), np.array(sd))

    def tx(v):
        return np.log10(v) if log_x else np.asarray(v, dtype=float)

    def ty(v):
        return np.log10(np.maximum(v, 1e-300)) if log_y else np.asarray(v, dtype=float)

    all_x = np.concatenate([tx(s[0]) for s in series.values()])
    all_y = np.concatenate([ty(np.concatenate([m - s, m + s]))
                            for _, m, s in series.values()])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def px(v):
        return margin + (tx(v) - x_lo) / x_span * (width - 2 * margin)

    def py(v):
        return height - margin - (ty(v) - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for k, method in enumerate(methods):
        xs, mean, sd = series[method]
        color = _SVG_COLORS[k % len(_SVG_COLORS)]
        band = ([(px(x), py(m + s)) for x, m, s in zip(xs, mean, sd)]
                + [(px(x), py(m - s)) for x, m, s in zip(xs[::-1], mean[::-1], sd[::-1])])
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in band)
        parts.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" '
                     f'stroke="none"/>')
        pts = " ".join(f"{px(x):.2f},{py(m):.2f}" for x, m in zip(xs, mean))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4:.0f}" '
                     f'y="{py(mean[-1]) + 4:.2f}" font-size="11" '
                     f'fill="{color}">{method}</text>')
    parts.append(f'<text x="{margin:.0f}" y="{height - margin + 16:.0f}" '
                 f'font-size="11">param</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _mean_by(rows, method, metric=None):
    vals = [r[4] for r in rows if r[2] == method and (metric is None or r[3] == metric)]
    return float(np.mean(vals)) if vals else float("nan")


def check_rows(recipe: str, rows: list):
    """(ok, message) threshold checks used by --assert mode."""
    if recipe == "concentric-circles":
        accs = [r[4] for r in rows]
        ok = bool(np.min(accs) >= 0.99)
        return ok, f"min grid accuracy {np.min(accs):.4f} (needs >= 0.99)"
    if recipe == "classification-corruption":
        bad = []
        for c in sorted({r[1] for r in rows}):
            sub = [r for r in rows if r[1] == c]
            il, ac = _mean_by(sub, "infimum"), _mean_by(sub, "average")
            if il > ac + 1e-12:
                bad.append(c)
        return not bad, ("infimum error <= average error at every corruption level"
                         if not bad else f"ordering violated at c={bad}")
    if recipe == "two-gaussians":
        top = max(r[1] for r in rows)
        sub = [r for r in rows if r[1] == top]
        spec, graph = _mean_by(sub, "spectral"), _mean_by(sub, "graph")
        ok = spec <= 0.25 < graph
        return ok, f"n={int(top)}: spectral {spec:.3f} (<=0.25), graph {graph:.3f} (>0.25)"
    if recipe == "eigenfunctions":
        worst = max(r[4] for r in rows)
        return worst < 1e-2, f"max variance ratio {worst:.2e} (needs < 1e-2)"
    if recipe == "active-vs-passive":
        ar, pr = _mean_by(rows, "activeRegression"), _mean_by(rows, "passiveRegression")
        ac, pc = (_mean_by(rows, "activeClassification"),
                  _mean_by(rows, "passiveClassification"))
        ok = ar <= pr and ac <= pc
        return ok, (f"regression {ar:.4f} vs {pr:.4f}; "
                    f"classification {ac:.4f} vs {pc:.4f} (active must be <=)")
    if recipe == "knn-rates":
        ns = sorted({r[1] for r in rows})
        means = [_mean_by([r for r in rows if r[1] == n], "knn") for n in ns]
        decreasing = all(a > b for a, b in zip(means, means[1:]))
        slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
        ok = decreasing and slope <= -0.3
        return ok, f"means {means}, log-log slope {slope:.3f} (<= -0.3, decreasing)"
    if recipe == "sgd-regression":
        Ts = sorted({r[1] for r in rows})
        means = [_mean_by([r for r in rows if r[1] == T], "active") for T in Ts]
        slope = np.polyfit(np.log(Ts), np.log(means), 1)[0]
        ok = -0.65 <= slope <= -0.35
        return ok, f"log-log slope {slope:.3f} (needs [-0.65, -0.35])"
    return True, "no threshold registered"
