"""Lexicon-and-heuristics sentiment scoring of agent rationale texts.

Implements the standard valence-aware rule set: booster/dampener increments,
a three-token negation window, ALL-CAPS emphasis, exclamation/question-mark
amplification, and contrastive-conjunction ("but") reweighting. The compound
score normalizes the signed valence sum as x / sqrt(x^2 + 15).
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

ALPHA = 15.0  # compound-score normalization constant

B_INCR = 0.293
B_DECR = -0.293
C_INCR = 0.733  # ALL-CAPS emphasis increment
N_SCALAR = -0.74  # negation flip factor

NEGATORS = frozenset(
    [
        "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt",
        "ain't", "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't",
        "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither",
        "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't",
        "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing",
        "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
        "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't",
        "without", "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom",
        "despite",
    ]
)

BOOSTERS: dict[str, float] = {
    "absolutely": B_INCR, "amazingly": B_INCR, "awfully": B_INCR,
    "completely": B_INCR, "considerable": B_INCR, "considerably": B_INCR,
    "decidedly": B_INCR, "deeply": B_INCR, "enormous": B_INCR,
    "enormously": B_INCR, "entirely": B_INCR, "especially": B_INCR,
    "exceptional": B_INCR, "exceptionally": B_INCR, "extreme": B_INCR,
    "extremely": B_INCR, "fabulously": B_INCR, "fully": B_INCR,
    "greatly": B_INCR, "highly": B_INCR, "hugely": B_INCR,
    "incredible": B_INCR, "incredibly": B_INCR, "intensely": B_INCR,
    "major": B_INCR, "majorly": B_INCR, "more": B_INCR, "most": B_INCR,
    "particularly": B_INCR, "purely": B_INCR, "quite": B_INCR,
    "really": B_INCR, "remarkably": B_INCR, "so": B_INCR,
    "substantially": B_INCR, "thoroughly": B_INCR, "total": B_INCR,
    "totally": B_INCR, "tremendous": B_INCR, "tremendously": B_INCR,
    "unbelievably": B_INCR, "unusually": B_INCR, "utter": B_INCR,
    "utterly": B_INCR, "very": B_INCR,
    "almost": B_DECR, "barely": B_DECR, "hardly": B_DECR,
    "just enough": B_DECR, "kind of": B_DECR, "kinda": B_DECR,
    "kindof": B_DECR, "kind-of": B_DECR, "less": B_DECR, "little": B_DECR,
    "marginal": B_DECR, "marginally": B_DECR, "occasional": B_DECR,
    "occasionally": B_DECR, "partly": B_DECR, "scarce": B_DECR,
    "scarcely": B_DECR, "slight": B_DECR, "slightly": B_DECR,
    "somewhat": B_DECR, "sort of": B_DECR, "sorta": B_DECR,
    "sortof": B_DECR, "sort-of": B_DECR,
}


class SentimentError(ValueError):
    """Raised for lexicon or scoring input problems."""


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, float]
    boosters: dict[str, float]
    negators: frozenset[str]


@dataclass(frozen=True)
class SentimentScore:
    compound: float
    positive_mass: float
    negative_mass: float
    neutral_mass: float


def bundled_lexicon_path() -> Path:
    return Path(str(resources.files("civicref").joinpath("data/sentiment_lexicon.txt")))


def load_lexicon(source: str | Path | None = None) -> Lexicon:
    """Load a tab-separated ``token<TAB>valence`` lexicon file."""
    path = Path(source) if source is not None else bundled_lexicon_path()
    entries: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise SentimentError(f"{path}:{lineno}: expected token<TAB>valence")
            token = parts[0]
            if token in entries:
                raise SentimentError(f"{path}:{lineno}: duplicate token {token!r}")
            try:
                valence = float(parts[1])
            except ValueError as exc:
                raise SentimentError(f"{path}:{lineno}: bad valence {parts[1]!r}") from exc
            if not math.isfinite(valence):
                raise SentimentError(f"{path}:{lineno}: non-finite valence")
            entries[token] = valence
    return Lexicon(entries=entries, boosters=dict(BOOSTERS), negators=NEGATORS)


def normalize_compound(net_valence: float) -> float:
    """Map a signed valence sum onto (-1, 1) via x / sqrt(x^2 + alpha)."""
    score = net_valence / math.sqrt(net_valence * net_valence + ALPHA)
    return max(-1.0, min(1.0, score))


def _tokenize(text: str) -> list[str]:
    tokens = []
    for raw in text.split():
        stripped = raw.strip(string.punctuation)
        tokens.append(raw if len(stripped) <= 2 else stripped)
    return tokens


def _allcap_differential(tokens: list[str]) -> bool:
    n_caps = sum(1 for t in tokens if t.isupper())
    return 0 < n_caps < len(tokens)


def _booster_scalar(token: str, valence: float, is_cap_diff: bool, boosters) -> float:
    scalar = boosters.get(token.lower(), 0.0)
    if scalar == 0.0:
        return 0.0
    if valence < 0:
        scalar = -scalar
    if token.isupper() and is_cap_diff:
        scalar += C_INCR if valence > 0 else -C_INCR
    return scalar


def _negated(token: str, negators) -> bool:
    return token.lower() in negators or "n't" in token.lower()


def _negation_check(valence, tokens_lower, start_i, i, negators):
    if start_i == 0:
        if _negated(tokens_lower[i - 1], negators):
            valence *= N_SCALAR
    elif start_i == 1:
        if tokens_lower[i - 2] == "never" and tokens_lower[i - 1] in ("so", "this"):
            valence *= 1.25
        elif tokens_lower[i - 2] == "without" and tokens_lower[i - 1] == "doubt":
            pass
        elif _negated(tokens_lower[i - 2], negators):
            valence *= N_SCALAR
    elif start_i == 2:
        if tokens_lower[i - 3] == "never" and (
            tokens_lower[i - 2] in ("so", "this") or tokens_lower[i - 1] in ("so", "this")
        ):
            valence *= 1.25
        elif tokens_lower[i - 3] == "without" and "doubt" in (
            tokens_lower[i - 2],
            tokens_lower[i - 1],
        ):
            pass
        elif _negated(tokens_lower[i - 3], negators):
            valence *= N_SCALAR
    return valence


def _least_check(valence, tokens_lower, i, lexicon_entries):
    if (
        i > 1
        and tokens_lower[i - 1] not in lexicon_entries
        and tokens_lower[i - 1] == "least"
        and tokens_lower[i - 2] not in ("at", "very")
    ):
        valence *= N_SCALAR
    elif (
        i == 1
        and tokens_lower[i - 1] not in lexicon_entries
        and tokens_lower[i - 1] == "least"
    ):
        valence *= N_SCALAR
    return valence


def _but_check(tokens_lower, sentiments):
    if "but" not in tokens_lower:
        return sentiments
    bi = tokens_lower.index("but")
    return [
        s * 0.5 if si < bi else (s * 1.5 if si > bi else s)
        for si, s in enumerate(sentiments)
    ]


def _punctuation_emphasis(text: str) -> float:
    ep = min(text.count("!"), 4) * 0.292
    qm_count = text.count("?")
    if qm_count > 1:
        qm = qm_count * 0.18 if qm_count <= 3 else 0.96
    else:
        qm = 0.0
    return ep + qm


def score_text(lexicon: Lexicon, text: str) -> SentimentScore:
    """Score one rationale text; empty or all-neutral text scores zero."""
    tokens = _tokenize(text)
    tokens_lower = [t.lower() for t in tokens]
    is_cap_diff = _allcap_differential(tokens)

    sentiments: list[float] = []
    for i, token in enumerate(tokens):
        lower = tokens_lower[i]
        if lower in lexicon.boosters:
            sentiments.append(0.0)
            continue
        if lower == "kind" and i + 1 < len(tokens) and tokens_lower[i + 1] == "of":
            sentiments.append(0.0)
            continue
        if lower not in lexicon.entries:
            sentiments.append(0.0)
            continue
        valence = lexicon.entries[lower]
        if token.isupper() and is_cap_diff:
            valence += C_INCR if valence > 0 else -C_INCR
        for start_i in range(3):
            if i <= start_i or tokens_lower[i - (start_i + 1)] in lexicon.entries:
                continue
            scalar = _booster_scalar(tokens[i - (start_i + 1)], valence, is_cap_diff, lexicon.boosters)
            if start_i == 1 and scalar != 0.0:
                scalar *= 0.95
            elif start_i == 2 and scalar != 0.0:
                scalar *= 0.9
            valence += scalar
            valence = _negation_check(valence, tokens_lower, start_i, i, lexicon.negators)
        valence = _least_check(valence, tokens_lower, i, lexicon.entries)
        sentiments.append(valence)

    sentiments = _but_check(tokens_lower, sentiments)

    if not sentiments or all(s == 0.0 for s in sentiments):
        # no valence hits: neutral-mass-only breakdown, zero compound
        neu = 1.0 if sentiments else 0.0
        return SentimentScore(0.0, 0.0, 0.0, neu)

    total_valence = sum(sentiments)
    punct = _punctuation_emphasis(text)
    if total_valence > 0:
        total_valence += punct
    elif total_valence < 0:
        total_valence -= punct

    compound = normalize_compound(total_valence)

    pos_sum = sum(s + 1.0 for s in sentiments if s > 0)
    neg_sum = sum(s - 1.0 for s in sentiments if s < 0)
    neu_count = sum(1 for s in sentiments if s == 0)
    if pos_sum > abs(neg_sum):
        pos_sum += punct
    elif pos_sum < abs(neg_sum):
        neg_sum -= punct
    total = pos_sum + abs(neg_sum) + neu_count
    return SentimentScore(
        compound=compound,
        positive_mass=abs(pos_sum / total),
        negative_mass=abs(neg_sum / total),
        neutral_mass=abs(neu_count / total),
    )


def sentiment_delta(
    scores_a: dict[str, float], scores_b: dict[str, float]
) -> dict[str, float]:
    """Per-community difference a - b; the inputs must cover the same communities."""
    if set(scores_a) != set(scores_b):
        missing = set(scores_a) ^ set(scores_b)
        raise SentimentError(f"mismatched community sets: {sorted(missing)}")
    return {name: scores_a[name] - scores_b[name] for name in sorted(scores_a)}
