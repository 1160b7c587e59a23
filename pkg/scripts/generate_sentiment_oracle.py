"""Freeze a 200-sentence sentiment oracle corpus into tests/data.

Sentences are generated deterministically to exercise boosters, negation
windows, contrastive conjunctions, ALL-CAPS emphasis, and punctuation
amplification. Compound scores come from the independent reference scorer in
tests/oracles.py, so the library implementation is tested against code written
separately from it.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from civicref.sentiment import load_lexicon  # noqa: E402
from oracles import SentimentOracle  # noqa: E402

POSITIVE = [
    "affordable", "excellent", "improve", "benefit", "fair", "reliable",
    "accessible", "efficient", "great", "good", "support", "helpful",
    "cleaner", "safer", "convenient", "progress", "opportunity", "win",
]
NEGATIVE = [
    "burden", "congestion", "unfair", "expensive", "worse", "harm",
    "costly", "problem", "struggle", "unaffordable", "bad", "crisis",
    "pollution", "delays", "failure", "regressive", "hardship", "loss",
]
NEUTRAL = [
    "the", "transit", "fare", "tax", "fee", "policy", "city", "bus",
    "commute", "drivers", "residents", "proposal", "downtown", "network",
]
BOOSTERS = ["very", "extremely", "slightly", "barely", "really", "somewhat", "so"]
NEGATORS = ["not", "never", "don't", "hardly", "without", "isn't"]
TAILS = ["", ".", "!", "!!", "!!!", "?", "??", "???", "?!"]


def build_sentences(rng: random.Random) -> list[str]:
    sentences = []
    for _ in range(200):
        words: list[str] = []
        n_clauses = rng.randint(1, 3)
        for clause in range(n_clauses):
            if clause:
                words.append(rng.choice(["and", "but", "because", "while"]))
            words.append(rng.choice(NEUTRAL))
            shape = rng.randrange(6)
            target = rng.choice(POSITIVE if rng.random() < 0.5 else NEGATIVE)
            if rng.random() < 0.15:
                target = target.upper()
            if shape == 0:
                words.append(target)
            elif shape == 1:
                words += [rng.choice(BOOSTERS), target]
            elif shape == 2:
                words += [rng.choice(NEGATORS), target]
            elif shape == 3:
                words += [rng.choice(NEGATORS), rng.choice(BOOSTERS), target]
            elif shape == 4:
                words += ["never", rng.choice(["so", "this"]), target]
            else:
                words += ["at", "least", target]
            words.append(rng.choice(NEUTRAL))
        sentences.append(" ".join(words) + rng.choice(TAILS))
    return sentences


def main() -> None:
    rng = random.Random(20260823)
    lexicon = load_lexicon()
    oracle = SentimentOracle(lexicon.entries)
    sentences = build_sentences(rng)
    corpus = [
        {"text": text, "compound": oracle.polarity_compound(text)}
        for text in sentences
    ]
    out = ROOT / "tests" / "data" / "sentiment_oracle.json"
    out.write_text(json.dumps(corpus, indent=1), encoding="utf-8")
    print(f"wrote {len(corpus)} scored sentences to {out}")


if __name__ == "__main__":
    main()
