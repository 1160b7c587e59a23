"""Multi-round referendum scenarios: query agents, aggregate, persist, summarize.

A scenario fans agent queries out to a bounded worker pool, then aggregates
strictly in agent-id order, so outputs are deterministic for deterministic
backends. Raw transcripts persist as JSON lines and every aggregate can be
recomputed from them offline via :func:`replay`.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from . import ballots as bv
from . import metrics as vm
from .ballots import Ballot, BallotError, IrvLog
from .catalog import LEVERS, Catalog, load_catalog
from .gateway import (
    CITY_AVERAGE_LABELS,
    AgentProfile,
    BackendConfig,
    BackendError,
    ParsedVote,
    ParseError,
    PromptBundle,
    build_prompts,
    load_roster,
    parse_response,
    query_agent,
)

MAX_PARSE_RETRIES = 2

CORRECTIVE_INSTRUCTION = (
    "\nYour previous answer could not be read as a valid ballot. Respond again with "
    "one JSON object only, with a \"decision\" list of distinct policy ids in 0-26 "
    "that satisfies the voting rule."
)


class ConfigError(ValueError):
    """Raised for invalid scenario configuration."""


class DataError(ValueError):
    """Raised for corrupt persisted data."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    city: str
    agent_mode: str = "community"
    rule: str = "ranked"
    rounds: int = 10
    backend: BackendConfig = field(default_factory=BackendConfig)
    covariate_file: str | None = None
    facts_file: str | None = None
    output_dir: str = "out"
    parallel: int = 8

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.parallel < 1:
            raise ConfigError(f"parallel must be >= 1, got {self.parallel}")


@dataclass
class RoundResult:
    round: int
    ballots: list[Ballot]
    parsed: list[ParsedVote]
    abstentions: list[int]
    winner: int | None
    tied: bool = False
    failed: bool = False
    winner_log: IrvLog | None = None
    policy_entropy: float | None = None
    lever_entropy: dict[str, float] = field(default_factory=dict)
    rank1_entropy: dict[str, float] = field(default_factory=dict)
    mean_policy: bv.MeanPolicy | None = None  # approval rules / rank-1 for ranked


@dataclass(frozen=True)
class ScenarioSummary:
    name: str
    rule: str
    rounds: int
    failed_rounds: int
    winner_counts: tuple[tuple[int, int], ...]  # (policy id, rounds won), sorted
    avg_entropy: float
    rank1_means: tuple[tuple[str, float, float], ...]  # (lever, mean, avg entropy)
    vote_lattice: tuple[tuple[int, int, int], ...]  # (policy id, rank, count)


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Read a declarative scenario file (flat keys + nested backend section)."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read scenario config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario config {path} is not a mapping")
    backend_raw = raw.pop("backend", {}) or {}
    try:
        backend = BackendConfig(**backend_raw)
        return ScenarioConfig(backend=backend, **raw)
    except TypeError as exc:
        raise ConfigError(f"bad scenario config {path}: {exc}") from exc


def load_facts(path: str | Path) -> dict[int, tuple[tuple[str, str], ...]]:
    """Context facts per community id from a CSV with a community_id column."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or reader.fieldnames[0] != "community_id":
            raise ConfigError(f"{path}: first column must be community_id")
        labels = reader.fieldnames[1:]
        facts = {}
        for row in reader:
            cid = int(row["community_id"])
            facts[cid] = tuple((label, row[label]) for label in labels)
    return facts


def build_profiles(config: ScenarioConfig) -> list[AgentProfile]:
    """Agent roster for a scenario; ids follow the official community index."""
    if config.agent_mode == "city_average":
        return [
            AgentProfile(
                agent_id=0,
                community_name=CITY_AVERAGE_LABELS[config.city],
                city=config.city,
                mode="city_average",
            )
        ]
    roster = load_roster(config.city)
    facts = {}
    if config.agent_mode == "knowledge_augmented":
        if not config.facts_file:
            raise ConfigError("knowledge_augmented scenarios need facts_file")
        facts = load_facts(config.facts_file)
    profiles = []
    for index, name in enumerate(roster, start=1):
        kwargs = {}
        if config.agent_mode == "knowledge_augmented":
            if index not in facts:
                raise ConfigError(f"facts_file missing community {index} ({name})")
            kwargs["context_facts"] = facts[index]
        profiles.append(
            AgentProfile(
                agent_id=index,
                community_name=name,
                city=config.city,
                mode=config.agent_mode,
                **kwargs,
            )
        )
    return profiles


def _ballot_from_vote(agent_id: int, rule: str, vote: ParsedVote) -> Ballot:
    if rule == "ranked":
        return bv.ranked_ballot(agent_id, vote.decision)
    return bv.approval_ballot(agent_id, vote.decision, rule=rule)


def _query_with_retry(config, bundle, agent_id, round_index, client):
    """Query once plus up to two corrective re-queries; None vote = abstention."""
    raw, record = query_agent(config.backend, bundle, agent_id, round_index, client=client)
    attempts = 1
    vote = None
    status = ""
    current = bundle
    while True:
        try:
            vote = parse_response(raw, config.rule)
            _ballot_from_vote(agent_id, config.rule, vote)
            status = "ok"
            break
        except (ParseError, BallotError) as exc:
            status = f"parse_error:{getattr(exc, 'category', 'ballot')}"
            if attempts > MAX_PARSE_RETRIES:
                break
            current = replace(current, user_text=current.user_text + CORRECTIVE_INSTRUCTION)
            raw, record = query_agent(config.backend, current, agent_id, round_index, client=client)
            attempts += 1
    record = dict(record)
    record["attempts"] = attempts
    record["parse_status"] = status
    return raw, record, vote


def _round_metrics(result: RoundResult, rule: str, catalog: Catalog) -> None:
    if not result.ballots:
        return
    dist = vm.vote_distribution(result.ballots, rule, round_index=result.round)
    result.policy_entropy = vm.policy_entropy(dist)
    for lever in LEVERS:
        result.lever_entropy[lever] = vm.lever_entropy(result.ballots, catalog, lever)
    if rule == "ranked":
        for lever in LEVERS:
            result.rank1_entropy[lever] = vm.lever_entropy_by_rank(
                result.ballots, catalog, lever, 1
            )
        rank_means = bv.mean_ranked_policy_by_rank(result.ballots, catalog)
        result.mean_policy = rank_means[0]
    else:
        result.mean_policy = bv.mean_approved_policy(result.ballots, catalog)


def _run_round(
    config: ScenarioConfig,
    catalog: Catalog,
    profiles: list[AgentProfile],
    bundles: dict[int, PromptBundle],
    round_index: int,
    client,
) -> tuple[RoundResult, list[dict]]:
    outcomes = {}
    with ThreadPoolExecutor(max_workers=config.parallel) as pool:
        futures = {
            profile.agent_id: pool.submit(
                _query_with_retry,
                config,
                bundles[profile.agent_id],
                profile.agent_id,
                round_index,
                client,
            )
            for profile in profiles
        }
        for agent_id, future in futures.items():
            outcomes[agent_id] = future.result()

    records = []
    ballots = []
    parsed = []
    abstentions = []
    for profile in profiles:  # aggregation strictly in agent-id order
        raw, record, vote = outcomes[profile.agent_id]
        record["community"] = profile.community_name
        record["prompts"] = {
            "system": bundles[profile.agent_id].system_text,
            "user": bundles[profile.agent_id].user_text,
        }
        record["raw_response"] = raw
        record["decision"] = list(vote.decision) if vote else None
        records.append(record)
        if vote is None:
            abstentions.append(profile.agent_id)
        else:
            parsed.append(vote)
            ballots.append(_ballot_from_vote(profile.agent_id, config.rule, vote))

    result = RoundResult(
        round=round_index,
        ballots=ballots,
        parsed=parsed,
        abstentions=abstentions,
        winner=None,
    )
    if len(abstentions) * 2 > len(profiles):
        result.failed = True
        return result, records
    if config.rule == "ranked":
        result.winner, result.winner_log = bv.irv_winner(ballots)
    else:
        result.winner, _, result.tied = bv.approval_winner(ballots)
    _round_metrics(result, config.rule, catalog)
    return result, records


def summarize(name: str, rule: str, results: list[RoundResult]) -> ScenarioSummary:
    ok = [r for r in results if not r.failed]
    winner_counts: dict[int, int] = {}
    for r in ok:
        winner_counts[r.winner] = winner_counts.get(r.winner, 0) + 1
    avg_entropy = sum(r.policy_entropy for r in ok) / len(ok) if ok else 0.0

    rank1 = []
    for lever in LEVERS:
        means = [getattr(r.mean_policy, lever) for r in ok if r.mean_policy is not None]
        if rule == "ranked":
            ents = [r.rank1_entropy[lever] for r in ok if r.rank1_entropy]
        else:
            ents = [r.lever_entropy[lever] for r in ok if r.lever_entropy]
        mean = sum(means) / len(means) if means else 0.0
        ent = sum(ents) / len(ents) if ents else 0.0
        rank1.append((lever, mean, ent))

    lattice: dict[tuple[int, int], int] = {}
    for r in ok:
        for b in r.ballots:
            if b.rule == "ranked":
                for s, k in enumerate(b.ranked, start=1):
                    lattice[(k, s)] = lattice.get((k, s), 0) + 1
            else:
                for k in sorted(b.approved):
                    lattice[(k, 0)] = lattice.get((k, 0), 0) + 1

    return ScenarioSummary(
        name=name,
        rule=rule,
        rounds=len(results),
        failed_rounds=len(results) - len(ok),
        winner_counts=tuple(sorted(winner_counts.items())),
        avg_entropy=avg_entropy,
        rank1_means=tuple(rank1),
        vote_lattice=tuple(sorted((k, s, c) for (k, s), c in lattice.items())),
    )


def _write_rounds_csv(path: Path, results: list[RoundResult]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "round", "winner", "tied", "failed", "n_ballots", "n_abstentions",
                "policy_entropy", "tax_entropy", "fare_entropy", "fee_entropy",
                "rank1_tax_entropy", "rank1_fare_entropy", "rank1_fee_entropy",
                "mean_tax", "mean_fare", "mean_fee",
            ]
        )
        for r in results:
            mp = r.mean_policy
            writer.writerow(
                [
                    r.round,
                    "" if r.winner is None else r.winner,
                    int(r.tied),
                    int(r.failed),
                    len(r.ballots),
                    len(r.abstentions),
                    _fmt(r.policy_entropy),
                    _fmt(r.lever_entropy.get("tax")),
                    _fmt(r.lever_entropy.get("fare")),
                    _fmt(r.lever_entropy.get("fee")),
                    _fmt(r.rank1_entropy.get("tax")),
                    _fmt(r.rank1_entropy.get("fare")),
                    _fmt(r.rank1_entropy.get("fee")),
                    _fmt(mp.tax if mp else None),
                    _fmt(mp.fare if mp else None),
                    _fmt(mp.fee if mp else None),
                ]
            )


def _fmt(value) -> str:
    return "" if value is None else f"{value:.12g}"


def _write_summary_csv(path: Path, summary: ScenarioSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "scenario", "rule", "rounds", "failed_rounds", "winners",
                "avg_entropy",
                "rank1_mean_tax", "rank1_tax_entropy",
                "rank1_mean_fare", "rank1_fare_entropy",
                "rank1_mean_fee", "rank1_fee_entropy",
            ]
        )
        winners = "; ".join(f"P{k} ({c})" for k, c in summary.winner_counts)
        by_lever = {lever: (mean, ent) for lever, mean, ent in summary.rank1_means}
        writer.writerow(
            [
                summary.name,
                summary.rule,
                summary.rounds,
                summary.failed_rounds,
                winners,
                _fmt(summary.avg_entropy),
                _fmt(by_lever["tax"][0]), _fmt(by_lever["tax"][1]),
                _fmt(by_lever["fare"][0]), _fmt(by_lever["fare"][1]),
                _fmt(by_lever["fee"][0]), _fmt(by_lever["fee"][1]),
            ]
        )


def _write_lattice_csv(path: Path, summary: ScenarioSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy_id", "rank", "count"])
        for k, s, c in summary.vote_lattice:
            writer.writerow([k, s, c])


def run_scenario(
    config: ScenarioConfig,
    catalog: Catalog | None = None,
    client=None,
) -> ScenarioSummary:
    """Execute a full scenario and persist transcripts, rounds, summary, lattice."""
    catalog = catalog or load_catalog(config.city)
    profiles = build_profiles(config)
    bundles = {
        profile.agent_id: build_prompts(profile, catalog, config.rule)
        for profile in profiles
    }
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results: list[RoundResult] = []
    transcript_path = out_dir / "transcripts.jsonl"
    with open(transcript_path, "w", encoding="utf-8") as transcript:
        for round_index in range(1, config.rounds + 1):
            try:
                result, records = _run_round(
                    config, catalog, profiles, bundles, round_index, client
                )
            except BackendError:
                # hard backend failure: keep partial persistence and re-raise
                transcript.flush()
                raise
            for record in records:
                transcript.write(json.dumps(record, sort_keys=True) + "\n")
            results.append(result)

    summary = summarize(config.name, config.rule, results)
    _write_rounds_csv(out_dir / "rounds.csv", results)
    _write_summary_csv(out_dir / "summary.csv", summary)
    _write_lattice_csv(out_dir / "lattice.csv", summary)
    return summary


def replay(
    transcript_file: str | Path,
    rule: str,
    catalog: Catalog,
    name: str = "replay",
) -> tuple[ScenarioSummary, list[RoundResult]]:
    """Recompute all aggregates from persisted raw responses, offline."""
    rounds: dict[int, list[dict]] = {}
    with open(transcript_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                rounds.setdefault(int(record["round"]), []).append(record)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{transcript_file}:{lineno}: corrupt record: {exc}") from exc

    results = []
    for round_index in sorted(rounds):
        records = sorted(rounds[round_index], key=lambda r: r["agent_id"])
        ballots = []
        parsed = []
        abstentions = []
        for record in records:
            try:
                vote = parse_response(record["raw_response"], rule)
                ballots.append(_ballot_from_vote(record["agent_id"], rule, vote))
                parsed.append(vote)
            except (ParseError, BallotError):
                abstentions.append(record["agent_id"])
        result = RoundResult(
            round=round_index,
            ballots=ballots,
            parsed=parsed,
            abstentions=abstentions,
            winner=None,
        )
        if len(abstentions) * 2 > len(records):
            result.failed = True
        elif rule == "ranked":
            result.winner, result.winner_log = bv.irv_winner(ballots)
            _round_metrics(result, rule, catalog)
        else:
            result.winner, _, result.tied = bv.approval_winner(ballots)
            _round_metrics(result, rule, catalog)
        results.append(result)
    return summarize(name, rule, results), results
