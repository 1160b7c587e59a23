"""Ballot validation and winner determination for the three voting rules.

Ranked ballots are resolved with instant-runoff voting; approval ballots
(fixed-size or free) with plurality over approval counts. Also computes the
mean lever values of approved / ranked policies.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .catalog import Catalog

RULES = ("ranked", "approve5", "approve_all")


class BallotError(ValueError):
    """Raised for invalid ballots or empty aggregations."""


@dataclass(frozen=True)
class Ballot:
    agent_id: int
    rule: str
    ranked: tuple[int, ...] | None = None
    approved: frozenset[int] | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise BallotError(f"unknown rule: {self.rule!r}")
        if self.rule == "ranked":
            if self.ranked is None or self.approved is not None:
                raise BallotError("ranked ballot must carry a ranked list only")
            if not 1 <= len(self.ranked) <= 5:
                raise BallotError(f"ranked list length {len(self.ranked)} not in 1..5")
            if len(set(self.ranked)) != len(self.ranked):
                raise BallotError("ranked list contains duplicates")
            ids = self.ranked
        else:
            if self.approved is None or self.ranked is not None:
                raise BallotError("approval ballot must carry an approved set only")
            if self.rule == "approve5" and len(self.approved) != 5:
                raise BallotError(f"approve5 needs exactly 5 ids, got {len(self.approved)}")
            if self.rule == "approve_all" and len(self.approved) < 1:
                raise BallotError("approve_all needs at least one id")
            ids = tuple(self.approved)
        for k in ids:
            if not 0 <= k <= 26:
                raise BallotError(f"policy id out of range: {k}")


def ranked_ballot(agent_id: int, ids) -> Ballot:
    return Ballot(agent_id=agent_id, rule="ranked", ranked=tuple(ids))


def approval_ballot(agent_id: int, ids, rule: str = "approve_all") -> Ballot:
    return Ballot(agent_id=agent_id, rule=rule, approved=frozenset(ids))


@dataclass
class IrvRound:
    tally: dict[int, int]
    eliminated: list[int]
    active_ballots: int


@dataclass
class IrvLog:
    rounds: list[IrvRound] = field(default_factory=list)


@dataclass(frozen=True)
class MeanPolicy:
    tax: float
    fare: float
    fee: float


def approval_winner(ballots: list[Ballot]) -> tuple[int, dict[int, int], bool]:
    """Most-approved policy id, full counts, and a tie flag (lowest id wins ties)."""
    if not ballots:
        raise BallotError("no ballots")
    counts: Counter[int] = Counter()
    for b in ballots:
        if b.rule not in ("approve5", "approve_all"):
            raise BallotError(f"approval_winner got a {b.rule} ballot")
        counts.update(b.approved)
    top = max(counts.values())
    winners = sorted(k for k, c in counts.items() if c == top)
    return winners[0], dict(counts), len(winners) > 1


def irv_winner(ballots: list[Ballot]) -> tuple[int, IrvLog]:
    """Instant-runoff winner over ranked ballots.

    Each round tallies top choices among non-eliminated ids. A strict majority
    of active (non-exhausted) ballots wins; otherwise every id tied for the
    fewest first choices is eliminated simultaneously, unless that would empty
    the race, in which case the lowest id among them survives. Ballots whose
    listed choices are all eliminated become exhausted and leave the active
    denominator.
    """
    if not ballots:
        raise BallotError("no ballots")
    for b in ballots:
        if b.rule != "ranked":
            raise BallotError(f"irv_winner got a {b.rule} ballot")

    remaining = {k for b in ballots for k in b.ranked}
    log = IrvLog()
    while True:
        tally: Counter[int] = Counter()
        active = 0
        for b in ballots:
            for k in b.ranked:
                if k in remaining:
                    tally[k] += 1
                    active += 1
                    break
        if active == 0:
            raise BallotError("all ballots exhausted before a winner emerged")
        full_tally = {k: tally.get(k, 0) for k in sorted(remaining)}
        if len(remaining) == 1:
            (winner,) = remaining
            log.rounds.append(IrvRound(full_tally, [], active))
            return winner, log
        leader = min(k for k, c in tally.items() if c == max(tally.values()))
        if tally[leader] * 2 > active:
            log.rounds.append(IrvRound(full_tally, [], active))
            return leader, log
        fewest = min(full_tally.values())
        losers = sorted(k for k, c in full_tally.items() if c == fewest)
        if len(losers) == len(remaining):
            # keep the lowest id alive rather than eliminating everyone
            survivors = losers[:1]
            eliminated = losers[1:]
        else:
            eliminated = losers
        remaining -= set(eliminated)
        log.rounds.append(IrvRound(full_tally, eliminated, active))


def mean_approved_policy(ballots: list[Ballot], catalog: Catalog) -> MeanPolicy:
    """Component-wise average of lever values over all (agent, approved-id) pairs."""
    total = 0
    sums = [0.0, 0.0, 0.0]
    for b in ballots:
        if b.rule not in ("approve5", "approve_all"):
            raise BallotError(f"mean_approved_policy got a {b.rule} ballot")
        for k in b.approved:
            p = catalog.policy(k)
            sums[0] += p.tax
            sums[1] += p.fare
            sums[2] += p.fee
            total += 1
    if total == 0:
        raise BallotError("zero total approvals")
    return MeanPolicy(tax=sums[0] / total, fare=sums[1] / total, fee=sums[2] / total)


def mean_ranked_policy_by_rank(
    ballots: list[Ballot], catalog: Catalog
) -> list[MeanPolicy | None]:
    """Per-rank average of lever values across agents that filled the rank.

    Ranks nobody filled are reported as None.
    """
    out: list[MeanPolicy | None] = []
    for s in range(5):
        values = []
        for b in ballots:
            if b.rule != "ranked":
                raise BallotError(f"mean_ranked_policy_by_rank got a {b.rule} ballot")
            if len(b.ranked) > s:
                values.append(catalog.policy(b.ranked[s]))
        if not values:
            out.append(None)
            continue
        n = len(values)
        out.append(
            MeanPolicy(
                tax=sum(p.tax for p in values) / n,
                fare=sum(p.fare for p in values) / n,
                fee=sum(p.fee for p in values) / n,
            )
        )
    return out
