"""Command-line interface: experiment runner, session service, simulated
labeling sessions, dataset generation, and the directional-constant check."""

from __future__ import annotations

import math
import sys

import click
import numpy as np

from .active import c1_closed_form, c2_closed_form, directional_constants
from .core import SeededRng
from .data import (
    gen_classification_stream,
    gen_concentric_circles,
    gen_interval_regression,
    gen_knn_rates_problem,
    gen_ranking_lines,
    gen_sin_regression,
    gen_two_gaussians,
    synthetic_unbalanced_records,
    write_libsvm,
)
from .experiments import RECIPES, check_rows, render_svg, rows_to_csv
from .oracle import Oracle, SessionConfig, dumps_protocol, run_session, serve_sessions


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_value(tok) for tok in text.split(","))
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_config_file(path: str) -> dict:
    """TOML-like key=value lines; '#' comments and blank lines ignored."""
    params = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise click.UsageError(
                    f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            params[key.strip()] = _parse_value(value)
    return params


@click.group()
def main():
    """Weakly supervised learning toolkit."""


# ---------------------------------------------------------------------------
# experiment run


@main.group()
def experiment():
    """Named experiment recipes."""


@experiment.command("run")
@click.argument("recipe")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--trials", default=1, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="CSV output path (stdout when omitted).")
@click.option("--svg", default=None, type=click.Path(dir_okay=False),
              help="Also write an SVG line plot (mean +- sd band).")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="key=value parameter file forwarded to the recipe.")
@click.option("--assert", "do_assert", is_flag=True,
              help="Check the recipe's acceptance threshold; exit 3 on failure.")
def experiment_run(recipe, seed, trials, out, svg, config_path, do_assert):
    """Run RECIPE and emit rows as CSV (trial,param,method,metric,value)."""
    if recipe not in RECIPES:
        known = ", ".join(sorted(RECIPES))
        raise click.UsageError(f"unknown recipe {recipe!r} (known: {known})")
    if trials < 1:
        raise click.UsageError("--trials must be >= 1")
    params = parse_config_file(config_path) if config_path else {}
    rows = RECIPES[recipe](seed=seed, trials=trials, params=params)
    csv_text = rows_to_csv(rows)
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(csv_text)
        except OSError as exc:
            raise click.UsageError(f"cannot write {out}: {exc}") from exc
    else:
        click.echo(csv_text, nl=False)
    if svg:
        log_axes = recipe in ("sgd-regression", "sgd-classification", "knn-rates")
        with open(svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(rows, log_x=log_axes, log_y=log_axes))
    if do_assert:
        ok, message = check_rows(recipe, rows)
        click.echo(f"{'PASS' if ok else 'FAIL'} {recipe}: {message}", err=True)
        if not ok:
            sys.exit(3)


# ---------------------------------------------------------------------------
# serve / label simulate


def _session_config(task, t, seed, m, sigma, anchors, gamma0, schedule):
    return SessionConfig(step_kind=task, T=t, seed=seed, m=m, sigma=sigma,
                         anchor_count=anchors, schedule=(schedule, gamma0))


def _simulated_oracle(config: SessionConfig) -> Oracle:
    """Hidden truths for each input: sin(2 pi x) for regression tasks,
    a class label drawn from the interpolated stream conditional otherwise."""
    xs = config.build_inputs()
    if config.step_kind == "passiveClassification":
        from .data import stream_conditional

        rng = SeededRng(config.seed, stream=17)
        truths = [int(rng.choice(config.m,
                                 p=stream_conditional(min(max(x[0], 0.0), 1.0),
                                                      config.m)))
                  for x in xs]
    else:
        truths = [np.full(config.m, math.sin(2 * math.pi * x[0])) for x in xs]
    return Oracle("simulated", truths=truths)


_TASKS = ("median", "passiveRegression", "passiveClassification", "leastSquares")


def _session_options(fn):
    for deco in (
        click.option("--task", default="median", show_default=True,
                     type=click.Choice(_TASKS)),
        click.option("--steps", "-T", "t", default=100, show_default=True, type=int),
        click.option("--seed", default=0, show_default=True, type=int),
        click.option("--m", default=1, show_default=True, type=int),
        click.option("--sigma", default=0.5, show_default=True, type=float),
        click.option("--anchors", default=20, show_default=True, type=int),
        click.option("--gamma0", default=1.0, show_default=True, type=float),
        click.option("--schedule", default="decaying", show_default=True,
                     type=click.Choice(("constant", "decaying"))),
    )[::-1]:
        fn = deco(fn)
    return fn


@main.command()
@_session_options
@click.option("--bind", default=None,
              help="host:port (default: WEAKLEARN_BIND, then 127.0.0.1:8765).")
@click.option("--log-dir", default=None, type=click.Path(file_okay=False),
              help="Directory for append-only session JSONL logs.")
def serve(task, t, seed, m, sigma, anchors, gamma0, schedule, bind, log_dir):
    """Serve labeling sessions over WebSocket (/session, GET /healthz)."""
    config = _session_config(task, t, seed, m, sigma, anchors, gamma0, schedule)
    serve_sessions(bind, config, log_dir=log_dir)


@main.group()
def label():
    """Labeling sessions."""


@label.command("simulate")
@_session_options
@click.option("--log", "log_path", default=None, type=click.Path(dir_okay=False),
              help="Write the session JSONL log here.")
def label_simulate(task, t, seed, m, sigma, anchors, gamma0, schedule, log_path):
    """Run a full session against a simulated oracle and print a summary."""
    config = _session_config(task, t, seed, m, sigma, anchors, gamma0, schedule)
    oracle = _simulated_oracle(config)
    model, state = run_session(config, oracle, log_path=log_path)
    bits = [entry[2] for entry in state.log]
    coeff_norm = float(np.linalg.norm(model.coefficients()))
    click.echo(f"task={task} steps={state.t}/{config.T} seed={seed}")
    click.echo(f"mean answer bit: {np.mean(bits):.4f}" if bits else "no queries")
    click.echo(f"averaged coefficient norm: {coeff_norm:.6f}")
    if log_path:
        click.echo(f"log written to {log_path}")


# ---------------------------------------------------------------------------
# data gen


def _dataset_json(ds) -> str:
    records = []
    for i in range(len(ds.constraints)):
        s = ds.constraints[i]
        entry = {"x": ds.inputs[i], "constraint": {"variant": s.variant}}
        if s.variant == "finite":
            entry["constraint"]["labels"] = list(s.labels)
        elif s.variant == "box":
            entry["constraint"]["lower"] = s.lower
            entry["constraint"]["upper"] = s.upper
        elif s.variant == "kendallPartial":
            entry["constraint"]["fixed"] = {f"{i_},{j_}": v
                                            for (i_, j_), v in s.fixed.items()}
        if ds.truths is not None:
            truth = ds.truths[i]
            entry["truth"] = (list(truth) if isinstance(truth, (tuple, list))
                              else truth)
        records.append(entry)
    return "\n".join(dumps_protocol(r) for r in records) + "\n"


def _labeled_libsvm(X, y) -> str:
    from .data import LibsvmRecord

    records = []
    for xi, yi in zip(np.atleast_2d(X), y):
        feats = tuple((j + 1, float(v)) for j, v in enumerate(xi) if v != 0.0)
        records.append(LibsvmRecord(float(yi), feats))
    return write_libsvm(records)


@main.group()
def data():
    """Dataset generation."""


_GENERATORS = ("interval-regression", "concentric-circles", "two-gaussians",
               "ranking-lines", "knn-rates", "classification-stream",
               "sin-regression", "unbalanced-classes")


@data.command("gen")
@click.argument("generator", type=click.Choice(_GENERATORS))
@click.option("--n", default=200, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Output path (stdout when omitted).")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="key=value file with generator parameters (m, c, alpha, ...).")
def data_gen(generator, n, seed, out, config_path):
    """Emit a synthetic dataset: JSON lines for weak-label generators,
    LIBSVM text for fully labeled ones."""
    params = parse_config_file(config_path) if config_path else {}
    rng = SeededRng(seed)
    if generator == "interval-regression":
        text = _dataset_json(gen_interval_regression(n, rng))
    elif generator == "concentric-circles":
        text = _dataset_json(gen_concentric_circles(n, rng))
    elif generator == "ranking-lines":
        text = _dataset_json(gen_ranking_lines(int(params.get("m", 4)), n,
                                               float(params.get("c", 0.5)), rng))
    elif generator == "two-gaussians":
        X, y = gen_two_gaussians(n, int(params.get("nl", n // 10)), rng,
                                 d=int(params.get("d", 10)),
                                 delta=float(params.get("delta", 3.0)))
        text = _labeled_libsvm(X, y)
    elif generator == "knn-rates":
        X, y = gen_knn_rates_problem(float(params.get("alpha", 1.0)), n, rng)
        text = _labeled_libsvm(X, y)
    elif generator == "classification-stream":
        X, y = gen_classification_stream(n, int(params.get("m", 10)),
                                         float(params.get("epsilon", 0.05)), rng)
        text = _labeled_libsvm(X, y)
    elif generator == "sin-regression":
        X, y = gen_sin_regression(n, rng)
        text = _labeled_libsvm(X, y)
    else:  # unbalanced-classes
        text = write_libsvm(synthetic_unbalanced_records(n, seed=seed))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------------------
# constants check


@main.group()
def constants():
    """Directional constants."""


@constants.command("check")
@click.option("--ms", default="1,2,3,5,10,50", show_default=True,
              help="Comma-separated output dimensions.")
@click.option("--samples", default=1_000_000, show_default=True, type=int)
@click.option("--bound", "-M", default=1.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def constants_check(ms, samples, bound, seed):
    """Monte-Carlo estimate of the directional constants against the shipped
    closed forms (3-standard-error agreement); exit 3 on mismatch."""
    dims = [int(tok) for tok in ms.split(",")]
    failed = False
    for m in dims:
        est = directional_constants(m, bound, SeededRng(seed), samples)
        c2, c1 = c2_closed_form(m), c1_closed_form(m, bound)
        ok2 = abs(est.c2 - c2) <= 3 * est.c2_se
        ok1 = abs(est.c1 - c1) <= 3 * est.c1_se
        failed |= not (ok2 and ok1)
        click.echo(
            f"m={m:3d}  c2: mc={est.c2:.6f} closed={c2:.6f} se={est.c2_se:.2e} "
            f"[{'ok' if ok2 else 'MISMATCH'}]  "
            f"c1: mc={est.c1:.6f} closed={c1:.6f} se={est.c1_se:.2e} "
            f"[{'ok' if ok1 else 'MISMATCH'}]"
        )
    if failed:
        sys.exit(3)
    click.echo("all constants within 3 standard errors")


if __name__ == "__main__":
    main()
