"""Command-line entry points for the referendum simulation engine."""

from __future__ import annotations

import json
import random
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import orchestrator as orch
from .ballots import irv_winner, ranked_ballot
from .catalog import (
    CatalogError,
    egalitarian_optimum,
    load_catalog,
    pareto_frontier,
    utilitarian_optimum,
)
from .gateway import BackendError
from .orchestrator import ConfigError, DataError, load_scenario_config
from .regression import fit_ols, load_covariates, run_lever_regressions
from .reports import (
    write_delta_table,
    write_regression_table,
    write_round_table,
    write_sentiment_table,
    write_summary_table,
)
from .sentiment import SentimentError, load_lexicon, sentiment_delta

EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_DATA = 4

_RULE_FLAGS = {"ranked": "ranked", "approve5": "approve5", "approve-all": "approve_all"}


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Referendum simulation over 27 transit policy bundles."""


@main.command()
@click.option("--city", type=click.Choice(["chicago", "houston"]), default="chicago")
@click.option("--source", type=click.Path(exists=True), default=None,
              help="Policy table to load instead of the bundled one.")
def catalog(city, source):
    """Inspect the policy lattice, optima, and Pareto frontiers."""
    try:
        cat = load_catalog(city, source)
    except (CatalogError, OSError) as exc:
        _fail(EXIT_DATA, str(exc))
    click.echo(f"city: {city} (27 policies, status quo {cat.status_quo_id})")
    click.echo(f"utilitarian optimum: policy {utilitarian_optimum(cat)}")
    click.echo(f"egalitarian optimum: policy {egalitarian_optimum(cat)}")
    for y_metric, sense in (("u_min", "maximize"), ("transit_pct", "maximize"), ("gini", "minimize")):
        ids = pareto_frontier(cat, "u_total", y_metric, sense)
        click.echo(f"frontier u_total vs {y_metric} ({sense}): {ids}")


def _scenario_from_flags(config_path, seed, backend, rounds, rule, out, parallel):
    config = load_scenario_config(config_path)
    overrides = {}
    if rounds is not None:
        overrides["rounds"] = rounds
    if rule is not None:
        overrides["rule"] = _RULE_FLAGS[rule]
    if out is not None:
        overrides["output_dir"] = out
    if parallel is not None:
        overrides["parallel"] = parallel
    backend_cfg = config.backend
    if backend == "mock":
        backend_cfg = replace(backend_cfg, kind="mock")
    elif backend in ("openai", "anthropic"):
        backend_cfg = replace(backend_cfg, kind="http_chat", api_style=backend)
    if seed is not None:
        backend_cfg = replace(backend_cfg, seed=seed)
    return replace(config, backend=backend_cfg, **overrides)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--backend", type=click.Choice(["mock", "openai", "anthropic"]), default=None)
@click.option("--rounds", type=int, default=None)
@click.option("--rule", type=click.Choice(list(_RULE_FLAGS)), default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--parallel", type=int, default=None)
def run(config_path, seed, backend, rounds, rule, out, parallel):
    """Execute a scenario config end to end."""
    try:
        config = _scenario_from_flags(config_path, seed, backend, rounds, rule, out, parallel)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        summary = orch.run_scenario(config)
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except (CatalogError, DataError, OSError) as exc:
        _fail(EXIT_DATA, str(exc))
    winners = "; ".join(f"P{k} ({c})" for k, c in summary.winner_counts)
    click.echo(f"{summary.name}: winners {winners}, avg entropy {summary.avg_entropy:.3f}")
    click.echo(f"outputs in {config.output_dir}")


@main.command()
@click.option("--transcripts", type=click.Path(exists=True), required=True)
@click.option("--rule", type=click.Choice(list(_RULE_FLAGS)), required=True)
@click.option("--city", type=click.Choice(["chicago", "houston"]), default="chicago")
@click.option("--name", default="replay")
def replay(transcripts, rule, city, name):
    """Recompute all aggregates from a persisted transcript file."""
    try:
        cat = load_catalog(city)
        summary, _ = orch.replay(transcripts, _RULE_FLAGS[rule], cat, name=name)
    except (DataError, CatalogError, OSError) as exc:
        _fail(EXIT_DATA, str(exc))
    winners = "; ".join(f"P{k} ({c})" for k, c in summary.winner_counts)
    click.echo(f"{summary.name}: winners {winners}, avg entropy {summary.avg_entropy:.3f}")


@main.command()
@click.option("--transcripts", type=click.Path(exists=True), required=True)
@click.option("--rule", type=click.Choice(list(_RULE_FLAGS)), required=True)
@click.option("--city", type=click.Choice(["chicago", "houston"]), default="chicago")
@click.option("--out", type=click.Path(), default="reports")
@click.option("--name", default="scenario")
def report(transcripts, rule, city, out, name):
    """Emit Table-3/4-shaped report files from a transcript."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        cat = load_catalog(city)
        summary, results = orch.replay(transcripts, _RULE_FLAGS[rule], cat, name=name)
        write_round_table(out_dir / "table3_rounds.csv", results)
        write_summary_table(out_dir / "table4_summary.csv", [summary])
    except (DataError, CatalogError, OSError) as exc:
        _fail(EXIT_DATA, str(exc))
    click.echo(f"reports in {out_dir}")


@main.command()
@click.option("--transcripts", type=click.Path(exists=True), required=True)
@click.option("--rule", type=click.Choice(list(_RULE_FLAGS)), required=True)
@click.option("--compare", type=click.Path(exists=True), default=None,
              help="Second transcript (baseline) for a delta table.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default="reports")
@click.option("--name", default="scenario")
def sentiment(transcripts, rule, compare, lexicon_path, out, name):
    """Score rationale transcripts; optionally diff against a baseline run."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        lex = load_lexicon(lexicon_path)
        means = write_sentiment_table(
            out_dir / "sentiment.csv", transcripts, _RULE_FLAGS[rule], lex, scenario=name
        )
        if compare:
            base = write_sentiment_table(
                out_dir / "sentiment_baseline.csv", compare, _RULE_FLAGS[rule], lex,
                scenario=f"{name}-baseline",
            )
            write_delta_table(out_dir / "sentiment_delta.csv", sentiment_delta(means, base))
    except (DataError, SentimentError, OSError) as exc:
        _fail(EXIT_DATA, str(exc))
    click.echo(f"sentiment tables in {out_dir}")


@main.command()
@click.option("--treated", type=click.Path(exists=True), required=True,
              help="Transcript of the knowledge-augmented scenario.")
@click.option("--control", type=click.Path(exists=True), required=True,
              help="Transcript of the baseline community scenario.")
@click.option("--covariates", "covariate_path", type=click.Path(exists=True), required=True)
@click.option("--city", type=click.Choice(["chicago", "houston"]), default="chicago")
@click.option("--out", type=click.Path(), default="reports")
def regress(treated, control, covariate_path, city, out):
    """Borda scores + per-lever OLS with interactions (Table-6 shape)."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        cat = load_catalog(city)
        _, results_know = orch.replay(treated, "ranked", cat)
        _, results_com = orch.replay(control, "ranked", cat)
        covariates, names = load_covariates(covariate_path)
        fits = run_lever_regressions(
            [r.ballots for r in results_know],
            [r.ballots for r in results_com],
            covariates,
            names,
            cat,
        )
        write_regression_table(out_dir / "regression.csv", fits)
    except (DataError, CatalogError, OSError, ValueError) as exc:
        _fail(EXIT_DATA, str(exc))
    click.echo(f"regression report in {out_dir}")


@main.command()
@click.option("--kind", type=click.Choice(["irv", "ols"]), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--trials", type=int, default=100)
@click.option("--out", type=click.Path(), required=True)
def oracle(kind, seed, trials, out):
    """Generate brute-force oracle fixtures for IRV or OLS checks."""
    rng = random.Random(seed)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if kind == "irv":
        fixtures = []
        for _ in range(trials):
            n_candidates = rng.randint(2, 27)
            n_voters = rng.randint(1, 77)
            candidates = rng.sample(range(27), n_candidates)
            profile = []
            for voter in range(n_voters):
                length = rng.randint(1, min(5, n_candidates))
                profile.append(rng.sample(candidates, length))
            ballots = [ranked_ballot(i, ids) for i, ids in enumerate(profile)]
            winner, _ = irv_winner(ballots)
            fixtures.append({"profile": profile, "winner": winner})
        out_path.write_text(json.dumps(fixtures, indent=1), encoding="utf-8")
    else:
        fixtures = []
        np_rng = np.random.default_rng(seed)
        for _ in range(trials):
            n = int(np_rng.integers(20, 120))
            p = int(np_rng.integers(2, 8))
            X = np.hstack([np.ones((n, 1)), np_rng.normal(size=(n, p - 1))])
            beta = np_rng.normal(size=p)
            y = X @ beta + 0.1 * np_rng.normal(size=n)
            fit = fit_ols(X, y)
            fixtures.append(
                {
                    "X": X.tolist(),
                    "y": y.tolist(),
                    "coefficients": [fit.coefficients[t] for t in fit.terms],
                }
            )
        out_path.write_text(json.dumps(fixtures), encoding="utf-8")
    click.echo(f"wrote {trials} {kind} fixtures to {out_path}")


if __name__ == "__main__":
    main()
