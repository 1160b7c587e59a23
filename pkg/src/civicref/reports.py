"""Report files shaped like the published result tables.

All reports are UTF-8 CSV with deterministic column order. Reference values
from the original study are appended as comment footers for side-by-side
comparison; they are never asserted against.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .catalog import Catalog
from .gateway import parse_response, ParseError
from .orchestrator import DataError, RoundResult, ScenarioSummary
from .regression import FitResult, significance_stars
from .sentiment import Lexicon, score_text

REFERENCE_SINGLE_ROUND = (
    "# reference (GPT-4o, Chicago community agents, single round):",
    "# Ranked-Choice: winner 10, means t=0.833 r=0.917 tau=0.750, E=2.739",
    "# 5-Approval: winner 10, means t=1.077 r=1.096 tau=0.731, E=2.928",
    "# All-Approval: winner 10, means t=0.978 r=1.185 tau=0.587, E=3.565",
)

REFERENCE_TEN_ROUND = (
    "# reference (ten-round referendums):",
    "# GPT-4o CHI-com: P10 (10), E=2.739, t 0.983 (0.21), r 0.782 (0.34), tau 0.511 (0.15)",
    "# GPT-4o CHI-know: P10 (8) P11 (2), E=2.804, t 0.999 (0.02), r 0.772 (0.25), tau 0.721 (0.98)",
    "# GPT-4o CHI-avg: P10 (8) P11 (2), E=2.611, t 1.000 (0.00), r 0.750 (0.00), tau 0.600 (0.72)",
    "# Claude-3.5 CHI-com: P1 (6) P10 (4), E=4.022, t 0.802 (1.29), r 0.951 (1.08), tau 0.546 (1.52)",
    "# Claude-3.5 CHI-know: P1 (8) P4 (2), E=3.902, t 0.782 (1.34), r 0.986 (1.04), tau 0.579 (1.28)",
    "# GPT-4o HOU-com: P2 (10), E=3.583, t 0.635 (0.92), r 0.785 (0.29), tau 0.895 (0.74)",
)

REFERENCE_REGRESSION = (
    "# reference (GPT-4o Chicago regressions): R2 tax 0.45, fare 0.729, fee 0.875;",
    "# info_dummy coefficients tax -0.025***, fare -0.047***, fee 0.150***",
)


def _fmt(value) -> str:
    return "" if value is None else f"{value:.12g}"


def write_round_table(path: str | Path, results: list[RoundResult]) -> None:
    """Per-round winners, mean policy values, and entropy (Table-3 shape)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["round", "winner", "mean_tax", "mean_fare", "mean_fee", "entropy"]
        )
        for r in results:
            mp = r.mean_policy
            writer.writerow(
                [
                    r.round,
                    "" if r.winner is None else r.winner,
                    _fmt(mp.tax if mp else None),
                    _fmt(mp.fare if mp else None),
                    _fmt(mp.fee if mp else None),
                    _fmt(r.policy_entropy),
                ]
            )
        for line in REFERENCE_SINGLE_ROUND:
            fh.write(line + "\n")


def write_summary_table(path: str | Path, summaries: list[ScenarioSummary]) -> None:
    """Cross-round winners, mean entropy, and rank-1 means (Table-4 shape)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "scenario", "winners", "avg_entropy",
                "rank1_tax", "rank1_tax_entropy",
                "rank1_fare", "rank1_fare_entropy",
                "rank1_fee", "rank1_fee_entropy",
            ]
        )
        for s in summaries:
            winners = "; ".join(f"P{k} ({c})" for k, c in s.winner_counts)
            by_lever = {lever: (mean, ent) for lever, mean, ent in s.rank1_means}
            writer.writerow(
                [
                    s.name,
                    winners,
                    _fmt(s.avg_entropy),
                    _fmt(by_lever["tax"][0]), _fmt(by_lever["tax"][1]),
                    _fmt(by_lever["fare"][0]), _fmt(by_lever["fare"][1]),
                    _fmt(by_lever["fee"][0]), _fmt(by_lever["fee"][1]),
                ]
            )
        for line in REFERENCE_TEN_ROUND:
            fh.write(line + "\n")


def rationale_texts(transcript_file: str | Path, rule: str) -> dict[tuple[int, str], str]:
    """Joined rationale text per (round, community) from a transcript file."""
    texts: dict[tuple[int, str], str] = {}
    with open(transcript_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                key = (int(record["round"]), record["community"])
                raw = record["raw_response"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{transcript_file}:{lineno}: corrupt record: {exc}") from exc
            try:
                vote = parse_response(raw, rule)
            except ParseError:
                continue
            texts[key] = " ".join(
                vote.rationale_sections[k]
                for k in sorted(vote.rationale_sections)
                if vote.rationale_sections[k]
            )
    return texts


def write_sentiment_table(
    path: str | Path,
    transcript_file: str | Path,
    rule: str,
    lexicon: Lexicon,
    scenario: str = "",
) -> dict[str, float]:
    """Score every rationale; returns mean compound per community."""
    texts = rationale_texts(transcript_file, rule)
    per_community: dict[str, list[float]] = {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "round", "community", "compound", "pos", "neg", "neu"])
        for (round_index, community), text in sorted(texts.items()):
            score = score_text(lexicon, text)
            per_community.setdefault(community, []).append(score.compound)
            writer.writerow(
                [
                    scenario,
                    round_index,
                    community,
                    _fmt(score.compound),
                    _fmt(score.positive_mass),
                    _fmt(score.negative_mass),
                    _fmt(score.neutral_mass),
                ]
            )
    return {name: sum(vals) / len(vals) for name, vals in per_community.items()}


def write_delta_table(path: str | Path, deltas: dict[str, float]) -> None:
    """Per-community sentiment differences (know minus com), Figure-7 shape."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community", "compound_delta"])
        for name in sorted(deltas):
            writer.writerow([name, _fmt(deltas[name])])


def write_regression_table(path: str | Path, fits: dict[str, FitResult]) -> None:
    """Per-lever coefficient table with significance stars (Table-6 shape)."""
    levers = list(fits)
    terms = fits[levers[0]].terms
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term"] + [f"{lever}_coef" for lever in levers]
                        + [f"{lever}_se" for lever in levers]
                        + [f"{lever}_p" for lever in levers])
        for term in terms:
            row = [term]
            row += [
                f"{fits[lever].coefficients[term]:.6g}{significance_stars(fits[lever].p_values[term])}"
                for lever in levers
            ]
            row += [_fmt(fits[lever].std_errors[term]) for lever in levers]
            row += [_fmt(fits[lever].p_values[term]) for lever in levers]
            writer.writerow(row)
        for stat in ("r2", "adj_r2", "f_statistic", "f_pvalue", "aic", "n_obs"):
            writer.writerow([stat] + [_fmt(getattr(fits[lever], stat)) for lever in levers])
        for line in REFERENCE_REGRESSION:
            fh.write(line + "\n")
