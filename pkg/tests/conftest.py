import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from civicref.catalog import load_catalog
from civicref.sentiment import load_lexicon


@pytest.fixture(scope="session")
def chicago():
    return load_catalog("chicago")


@pytest.fixture(scope="session")
def houston():
    return load_catalog("houston")


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def covariates_path():
    return TESTS_DIR / "data" / "chicago_covariates.csv"


@pytest.fixture(scope="session")
def facts_path():
    return TESTS_DIR / "data" / "chicago_facts.csv"


@pytest.fixture(scope="session")
def sentiment_corpus_path():
    return TESTS_DIR / "data" / "sentiment_oracle.json"
