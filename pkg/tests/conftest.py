"""Shared fixtures: tiny corpora, random corpus generation, embedding tables."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from neraug.corpus import ENTITY_TYPES, Corpus, TaggedSentence
from neraug.embeddings import EmbeddingTable, TitleList


def sent(text: str, labels: str) -> TaggedSentence:
    return TaggedSentence(tuple(text.split()), tuple(labels.split()))


def bio(*pairs: tuple[str, str]) -> Corpus:
    return Corpus(tuple(sent(t, l) for t, l in pairs), "BIO")


@pytest.fixture
def table10() -> EmbeddingTable:
    """Deterministic 10-dim table over a small vocabulary."""
    rng = np.random.default_rng(7)
    words = [f"w{i}" for i in range(40)] + ["Ali", "Khan", "Lahore", "Karachi", "Bank"]
    entries = {w: rng.normal(size=10) for w in words}
    return EmbeddingTable(10, entries)


@pytest.fixture
def titles_fixture() -> TitleList:
    return TitleList(frozenset({"Chaudhry", "Malik", "Dr"}))


# hypothesis strategies for random BIO corpora


@st.composite
def bio_label_seqs(draw, max_len: int = 12):
    n = draw(st.integers(min_value=1, max_value=max_len))
    labels = []
    prev = "O"
    for _ in range(n):
        options = ["O"] + [f"B-{t}" for t in ENTITY_TYPES]
        if prev != "O":
            options.append(f"I-{prev[2:]}")
        lab = draw(st.sampled_from(options))
        labels.append(lab)
        prev = lab
    return labels


@st.composite
def bio_sentences(draw, max_len: int = 12):
    labels = draw(bio_label_seqs(max_len=max_len))
    tokens = [
        draw(st.text(alphabet="abcXYZ", min_size=1, max_size=4)) for _ in labels
    ]
    return TaggedSentence(tuple(tokens), tuple(labels))


@st.composite
def bio_corpora(draw, max_sentences: int = 6, max_len: int = 12):
    sents = draw(st.lists(bio_sentences(max_len=max_len), min_size=0, max_size=max_sentences))
    return Corpus(tuple(sents), "BIO")
