import random

import pytest

from consistent_qg import mocks
from consistent_qg.backends import BackendHandle


@pytest.fixture(autouse=True)
def clean_mocks():
    mocks.reset_mock_servers()
    yield
    mocks.reset_mock_servers()


@pytest.fixture
def mock_handles():
    """A full backend set pointing at one registered mock fixture."""

    def build(fixture: dict, name: str = "testfx", **handle_kwargs):
        from consistent_qg.pipeline import BackendSet

        mocks.register_fixture(name, fixture)
        endpoint = f"mock:{name}"

        def handle(role):
            return BackendHandle(role=role, endpoint=endpoint, **handle_kwargs)

        return BackendSet(
            generator=handle("generator"),
            qa_scorer=handle("qa_scorer"),
            instruct=handle("instruct"),
            span_extractor=handle("span_extractor"),
            squad_generator=handle("generator"),
        )

    return build


_VOCAB = [
    "vaccine", "variant", "hospital", "mayor", "NASA", "budget", "climate",
    "wildfire", "officials", "report", "data", "students", "economy",
    "markets", "Hudson", "Valley", "storm", "subway", "teachers", "virus",
    "vote", "council", "energy", "prices", "tenants", "museum", "harbor",
    "B.1.351", "COVID-19", "researchers", "study", "city", "plan", "housing",
    "the", "of", "and", "to", "in", "a", "for", "with", "on", "at",
]

_TERMINATORS = [".", ".", ".", "?", "!"]


def random_document(rng: random.Random, max_tokens: int = 50) -> str:
    """A small synthetic news-ish document with varied casing and punctuation."""
    budget = rng.randint(5, max_tokens)
    sentences = []
    while budget > 0:
        n = min(budget, rng.randint(3, 12))
        budget -= n
        words = []
        for i in range(n):
            word = rng.choice(_VOCAB)
            if i == 0:
                word = word[0].upper() + word[1:]
            if i > 0 and rng.random() < 0.12:
                words[-1] += ","
            words.append(word)
        sentences.append(" ".join(words) + rng.choice(_TERMINATORS))
    return " ".join(sentences)


@pytest.fixture
def doc_factory():
    return random_document
