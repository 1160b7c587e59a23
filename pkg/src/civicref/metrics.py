"""Vote-share distributions, Shannon entropies, and Borda preference scores.

All entropies are in bits. Vote shares count each ballot entry once (every
approved id, or every ranked id regardless of rank) and normalize by the
total number of entries so the shares always sum to one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .ballots import Ballot, BallotError
from .catalog import LEVELS, Catalog, level_of_value

BORDA_WEIGHT_TOTAL = 15  # sum of ranks 1..5


@dataclass(frozen=True)
class VoteDistribution:
    probabilities: dict[int, float]
    round: int = 0

    def __post_init__(self):
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-12:
            raise BallotError(f"probabilities sum to {total}, not 1")


@dataclass(frozen=True)
class BordaScore:
    community_id: int
    lever: str
    score: float
    complete: bool  # False when some round had fewer than 5 ranked entries


def _vote_entries(ballots: list[Ballot]) -> list[int]:
    entries: list[int] = []
    for b in ballots:
        if b.rule == "ranked":
            entries.extend(b.ranked)
        else:
            entries.extend(sorted(b.approved))
    return entries


def vote_distribution(ballots: list[Ballot], rule: str, round_index: int = 0) -> VoteDistribution:
    """Empirical probability of each policy being voted for in one round."""
    if not ballots:
        raise BallotError("no ballots")
    for b in ballots:
        if b.rule != rule:
            raise BallotError(f"expected {rule} ballots, got {b.rule}")
    entries = _vote_entries(ballots)
    if not entries:
        raise BallotError("zero votes")
    counts = Counter(entries)
    n = len(entries)
    return VoteDistribution(
        probabilities={k: c / n for k, c in sorted(counts.items())},
        round=round_index,
    )


def entropy_bits(probabilities) -> float:
    """Shannon entropy in bits with the 0*log(0)=0 convention."""
    return -sum(p * math.log2(p) for p in probabilities if p > 0.0)


def policy_entropy(dist: VoteDistribution) -> float:
    return entropy_bits(dist.probabilities.values())


def _lever_level_counts(
    entries: list[int], catalog: Catalog, lever: str
) -> dict[str, int]:
    counts = {lvl: 0 for lvl in LEVELS}
    for k in entries:
        value = catalog.policy(k).lever_value(lever)
        counts[level_of_value(lever, value)] += 1
    return counts


def lever_entropy(ballots: list[Ballot], catalog: Catalog, lever: str) -> float:
    """Entropy of the lever-level marginal of the vote distribution."""
    entries = _vote_entries(ballots)
    if not entries:
        raise BallotError("zero votes")
    counts = _lever_level_counts(entries, catalog, lever)
    n = sum(counts.values())
    return entropy_bits(c / n for c in counts.values())


def lever_entropy_by_rank(
    ballots: list[Ballot], catalog: Catalog, lever: str, rank: int
) -> float:
    """Lever-level entropy restricted to the rank-s entries of ranked ballots."""
    if not 1 <= rank <= 5:
        raise BallotError(f"rank {rank} not in 1..5")
    entries = []
    for b in ballots:
        if b.rule != "ranked":
            raise BallotError(f"lever_entropy_by_rank got a {b.rule} ballot")
        if len(b.ranked) >= rank:
            entries.append(b.ranked[rank - 1])
    if not entries:
        raise BallotError(f"no ballot fills rank {rank}")
    counts = _lever_level_counts(entries, catalog, lever)
    n = sum(counts.values())
    return entropy_bits(c / n for c in counts.values())


def borda_scores(
    rounds: list[list[Ballot]], catalog: Catalog, lever: str
) -> list[BordaScore]:
    """Rank-weighted average lever value per agent, averaged over rounds.

    Rank s carries weight (6-s)/15. The denominator stays 15 for ballots
    shorter than five entries; such agents are flagged incomplete.
    """
    if not rounds:
        raise BallotError("no rounds")
    agent_ids = sorted({b.agent_id for rnd in rounds for b in rnd})
    per_agent: dict[int, list[float]] = {i: [] for i in agent_ids}
    incomplete: set[int] = set()
    for rnd in rounds:
        by_agent = {}
        for b in rnd:
            if b.rule != "ranked":
                raise BallotError(f"borda_scores got a {b.rule} ballot")
            by_agent[b.agent_id] = b
        for agent_id in agent_ids:
            b = by_agent.get(agent_id)
            if b is None:
                incomplete.add(agent_id)
                per_agent[agent_id].append(0.0)
                continue
            if len(b.ranked) < 5:
                incomplete.add(agent_id)
            weighted = sum(
                (6 - s) * catalog.policy(k).lever_value(lever)
                for s, k in enumerate(b.ranked, start=1)
            )
            per_agent[agent_id].append(weighted / BORDA_WEIGHT_TOTAL)
    return [
        BordaScore(
            community_id=i,
            lever=lever,
            score=math.fsum(vals) / len(vals),  # order-independent across rounds
            complete=i not in incomplete,
        )
        for i, vals in sorted(per_agent.items())
    ]
