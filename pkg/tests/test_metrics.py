import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from civicref.ballots import BallotError, approval_ballot, ranked_ballot
from civicref.metrics import (
    BordaScore,
    VoteDistribution,
    borda_scores,
    entropy_bits,
    lever_entropy,
    lever_entropy_by_rank,
    policy_entropy,
    vote_distribution,
)
from oracles import entropy_oracle, tally_oracle

LOG2_27 = math.log2(27)
LOG2_3 = math.log2(3)


def test_entropy_anchors():
    assert entropy_bits([1.0]) == 0.0
    assert entropy_bits([1 / 27] * 27) == pytest.approx(LOG2_27, abs=1e-9)
    assert entropy_bits([0.5, 0.5]) == pytest.approx(1.0, abs=1e-12)
    assert entropy_bits([0.0, 1.0]) == 0.0  # 0*log(0) convention


def test_vote_distribution_counts_every_entry():
    ballots = [
        ranked_ballot(1, [0, 1, 2]),
        ranked_ballot(2, [0]),
    ]
    dist = vote_distribution(ballots, "ranked")
    # 4 entries total: 0 twice, 1 and 2 once each
    assert dist.probabilities == {0: 0.5, 1: 0.25, 2: 0.25}
    assert sum(dist.probabilities.values()) == pytest.approx(1.0)


def test_vote_distribution_rule_mismatch():
    with pytest.raises(BallotError):
        vote_distribution([ranked_ballot(1, [0])], "approve5")
    with pytest.raises(BallotError):
        vote_distribution([], "ranked")


def test_distribution_must_sum_to_one():
    with pytest.raises(BallotError):
        VoteDistribution(probabilities={0: 0.4, 1: 0.4})


def test_policy_entropy_matches_naive_oracle():
    rng = random.Random(99)
    for _ in range(50):
        ballots = [
            ranked_ballot(i, rng.sample(range(27), rng.randint(1, 5)))
            for i in range(rng.randint(1, 77))
        ]
        entries = [k for b in ballots for k in b.ranked]
        dist = vote_distribution(ballots, "ranked")
        assert dist.probabilities == pytest.approx(tally_oracle(entries), abs=1e-15)
        assert policy_entropy(dist) == pytest.approx(
            entropy_oracle(tally_oracle(entries).values()), abs=1e-12
        )


def test_lever_entropy_bounds_and_anchor(chicago):
    # all-low-tax approvals: zero tax entropy
    low_tax_ids = [k for k in range(27) if chicago.policy(k).tax == 0.5]
    ballots = [approval_ballot(1, low_tax_ids, rule="approve_all")]
    assert lever_entropy(ballots, chicago, "tax") == 0.0
    # one policy per tax level: maximal entropy
    ballots = [approval_ballot(1, [0, 9, 18], rule="approve_all")]
    assert lever_entropy(ballots, chicago, "tax") == pytest.approx(LOG2_3, abs=1e-12)


def test_lever_entropy_by_rank(chicago):
    ballots = [
        ranked_ballot(1, [0, 9]),
        ranked_ballot(2, [9, 0]),
        ranked_ballot(3, [18]),
    ]
    # rank 1 sees taxes 0.5, 1.0, 1.5 -> log2(3); rank 2 sees 0.5, 1.0 -> 1 bit
    assert lever_entropy_by_rank(ballots, chicago, "tax", 1) == pytest.approx(LOG2_3)
    assert lever_entropy_by_rank(ballots, chicago, "tax", 2) == pytest.approx(1.0)
    with pytest.raises(BallotError):
        lever_entropy_by_rank(ballots, chicago, "tax", 3)
    with pytest.raises(BallotError):
        lever_entropy_by_rank(ballots, chicago, "tax", 0)


@settings(max_examples=150)
@given(
    st.lists(
        st.lists(st.integers(0, 26), min_size=1, max_size=5, unique=True),
        min_size=1,
        max_size=30,
    )
)
def test_entropy_bounds_property(profiles):
    from civicref.catalog import load_catalog

    cat = load_catalog("chicago")
    ballots = [ranked_ballot(i, prefs) for i, prefs in enumerate(profiles)]
    e = policy_entropy(vote_distribution(ballots, "ranked"))
    assert -1e-12 <= e <= LOG2_27 + 1e-12
    for lever in ("tax", "fare", "fee"):
        le = lever_entropy(ballots, cat, lever)
        assert -1e-12 <= le <= LOG2_3 + 1e-12


# --- Borda scores ----------------------------------------------------------------

def test_borda_constant_lever(chicago):
    # all five ranked policies share tax=0.5 -> score is exactly 0.5
    low_tax = [k for k in range(27) if chicago.policy(k).tax == 0.5][:5]
    rounds = [[ranked_ballot(1, low_tax)]]
    (score,) = borda_scores(rounds, chicago, "tax")
    assert score.score == pytest.approx(0.5, abs=1e-15)
    assert score.complete


def test_borda_hand_example(chicago):
    # fee values by rank: 1.0, 0.5, 0.5 then a short ballot (denominator stays 15)
    # weighted = 5*1.0 + 4*0.5 + 3*0.5 = 8.5 -> 8.5/15
    ids = [
        next(k for k in range(27) if chicago.policy(k).fee == 1.0),
        next(k for k in range(27) if chicago.policy(k).fee == 0.5),
        next(k for k in range(3, 27) if chicago.policy(k).fee == 0.5),
    ]
    rounds = [[ranked_ballot(7, ids)]]
    (score,) = borda_scores(rounds, chicago, "fee")
    assert score.score == pytest.approx(8.5 / 15, abs=1e-12)
    assert score.score == pytest.approx(0.5667, abs=5e-5)
    assert not score.complete


def test_borda_round_permutation_invariance(chicago):
    rng = random.Random(5)
    rounds = [
        [ranked_ballot(a, rng.sample(range(27), 5)) for a in range(1, 6)]
        for _ in range(4)
    ]
    base = borda_scores(rounds, chicago, "fare")
    shuffled = borda_scores(list(reversed(rounds)), chicago, "fare")
    assert base == shuffled


def test_borda_missing_round_counts_zero(chicago):
    b = ranked_ballot(1, [0, 1, 2, 3, 4])
    scores = borda_scores([[b], []], chicago, "tax")
    full = borda_scores([[b]], chicago, "tax")
    assert scores[0].score == pytest.approx(full[0].score / 2)
    assert not scores[0].complete


def test_borda_rejects_approvals(chicago):
    with pytest.raises(BallotError):
        borda_scores([[approval_ballot(1, [0], rule="approve_all")]], chicago, "tax")
    with pytest.raises(BallotError):
        borda_scores([], chicago, "tax")
