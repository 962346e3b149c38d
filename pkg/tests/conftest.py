from __future__ import annotations

from pathlib import Path

import pytest

from mhtext.embeddings import load_embeddings
from mhtext.ngram import BACKWARD, FORWARD, train
from mhtext.oracle import bigram_fixture, uniform_fixture
from mhtext.proposals import Models
from mhtext.textcore import build_vocab

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def toy_corpus_path() -> Path:
    return DATA / "toy_corpus.txt"


@pytest.fixture(scope="session")
def toy_corpus(toy_corpus_path) -> list[str]:
    return toy_corpus_path.read_text().splitlines()


@pytest.fixture(scope="session")
def toy_vocab(toy_corpus):
    return build_vocab(toy_corpus, max_size=100)


@pytest.fixture(scope="session")
def toy_models(toy_corpus, toy_vocab) -> Models:
    return Models(
        train(toy_corpus, toy_vocab, order=3, direction=FORWARD),
        train(toy_corpus, toy_vocab, order=3, direction=BACKWARD),
    )


@pytest.fixture(scope="session")
def uniform():
    """(models, space) for the analytic uniform micro-language."""
    return uniform_fixture()


@pytest.fixture(scope="session")
def bigram():
    """(models, space) for the trained-bigram micro-language."""
    return bigram_fixture()


@pytest.fixture(scope="session")
def toy_table():
    with open(DATA / "toy_embeddings.txt") as f:
        return load_embeddings(f)


# sharp patterns: every trigram pins its continuation, so fluent inputs
# are fixed points of the correction chain
SHARP_PATTERNS = [
    "the cat slept under the warm mat .",
    "a dog ran over the green hill .",
    "an owl sat on that old fence .",
    "my bird flew into its small nest .",
    "his horse walked through some tall grass .",
    "her fish swam around this deep pond .",
]


@pytest.fixture(scope="session")
def sharp_models():
    corpus = SHARP_PATTERNS * 4
    vocab = build_vocab(corpus, max_size=100)
    return Models(
        train(corpus, vocab, order=3, direction=FORWARD),
        train(corpus, vocab, order=3, direction=BACKWARD),
    )
