"""Embedding loading and entity feature vector construction."""

import io
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neraug.embeddings import (
    EmbeddingFormatError,
    EmbeddingTable,
    TitleList,
    cosine,
    default_titles,
    entity_feature_vector,
    load_embeddings,
    load_titles,
)


def stream(text: str) -> io.StringIO:
    return io.StringIO(text)


class TestLoadEmbeddings:
    def test_header_then_rows(self):
        table = load_embeddings(stream("2 3\na 1 0 0\nb 0 1 0\n"))
        assert table.dimension == 3
        assert len(table) == 2
        assert np.allclose(table.entries["a"], [1, 0, 0])

    def test_headerless_stream(self):
        table = load_embeddings(stream("a 1 0\nb 0 1\n"))
        assert table.dimension == 2 and len(table) == 2

    def test_two_field_first_line_that_is_not_numeric_is_data(self):
        # a 1-dim table whose first line happens to have two fields
        table = load_embeddings(stream("word 0.5\nother 1.5\n"))
        assert table.dimension == 1
        assert "word" in table

    def test_dimension_drift_rejected(self):
        with pytest.raises(EmbeddingFormatError, match="expected 3"):
            load_embeddings(stream("3 3\na 1 0 0\nb 1 0\n"))

    def test_non_numeric_component_rejected(self):
        with pytest.raises(EmbeddingFormatError, match="non-numeric"):
            load_embeddings(stream("a 1 x\n"))

    def test_empty_stream_rejected(self):
        with pytest.raises(EmbeddingFormatError, match="empty"):
            load_embeddings(stream(""))

    def test_header_without_rows_rejected(self):
        with pytest.raises(EmbeddingFormatError, match="no data"):
            load_embeddings(stream("5 10\n"))

    def test_duplicate_overwrites_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            table = load_embeddings(stream("a 1 0\na 0 1\n"))
        assert np.allclose(table.entries["a"], [0, 1])
        assert "duplicate" in caplog.text

    def test_count_mismatch_warns_but_loads(self, caplog):
        with caplog.at_level(logging.WARNING):
            table = load_embeddings(stream("3 2\na 1 0\n"))
        assert len(table) == 1
        assert "declared 3" in caplog.text

    def test_regeneration_round_trip(self):
        rng = np.random.default_rng(3)
        words = {f"w{i}": rng.normal(size=4) for i in range(500)}
        text = f"{len(words)} 4\n" + "".join(
            w + " " + " ".join(f"{x:.17g}" for x in v) + "\n" for w, v in words.items()
        )
        table = load_embeddings(stream(text))
        assert len(table) == 500
        for w, v in words.items():
            assert np.array_equal(table.entries[w], v)


class TestTitles:
    def test_comments_and_blanks_skipped(self):
        titles = load_titles(stream("# header\nChaudhry\n\nMalik # inline\n"))
        assert "Chaudhry" in titles and "Malik" in titles

    def test_multi_token_line_rejected(self):
        with pytest.raises(ValueError, match="single token"):
            load_titles(stream("two words\n"))

    def test_default_titles_non_empty(self):
        titles = default_titles()
        assert "Chaudhry" in titles
        assert len(titles.titles) > 10


class TestEntityFeatureVector:
    def make_table(self):
        return EmbeddingTable(
            2,
            {
                "Ali": np.array([1.0, 0.0]),
                "Khan": np.array([0.0, 1.0]),
                "Chaudhry": np.array([-1.0, 0.0]),
                "zero": np.array([0.0, 0.0]),
            },
        )

    def titles(self):
        return TitleList(frozenset({"Chaudhry", "Malik"}))

    def test_loc_mean_is_renormalized(self):
        ev = entity_feature_vector("Ali Khan", "LOC", self.make_table(), self.titles())
        assert ev is not None
        assert np.allclose(ev.vector, [1 / np.sqrt(2), 1 / np.sqrt(2)])
        assert np.isclose(np.linalg.norm(ev.vector), 1.0)

    def test_loc_oov_tokens_skipped(self):
        ev = entity_feature_vector("Ali unseen", "LOC", self.make_table(), self.titles())
        assert np.allclose(ev.vector, [1.0, 0.0])

    def test_per_title_stripped_first_token_used(self):
        # title "Chaudhry" is in-vocabulary but must be skipped for PER
        ev = entity_feature_vector(
            "Chaudhry Ali Khan", "PER", self.make_table(), self.titles()
        )
        assert np.allclose(ev.vector, [1.0, 0.0])

    def test_per_first_in_vocab_not_mean(self):
        ev = entity_feature_vector("Ali Khan", "PER", self.make_table(), self.titles())
        assert np.allclose(ev.vector, [1.0, 0.0])

    def test_per_all_titles_falls_back_to_mean_rule(self):
        # every token is a title: the PER rule finds nothing, mean rule kicks in
        ev = entity_feature_vector("Chaudhry", "PER", self.make_table(), self.titles())
        assert ev is not None
        assert np.allclose(ev.vector, [-1.0, 0.0])

    def test_fully_oov_surface_is_absent(self):
        assert entity_feature_vector("x y", "LOC", self.make_table(), self.titles()) is None

    def test_zero_norm_vector_counts_as_oov(self):
        assert entity_feature_vector("zero", "ORG", self.make_table(), self.titles()) is None
        # for PER the zero-norm first token falls through to the next token
        ev = entity_feature_vector("zero Khan", "PER", self.make_table(), self.titles())
        assert np.allclose(ev.vector, [0.0, 1.0])

    def test_empty_surface_is_absent(self):
        assert entity_feature_vector("", "LOC", self.make_table(), self.titles()) is None

    @settings(max_examples=100)
    @given(st.lists(st.sampled_from(["Ali", "Khan", "unseen"]), min_size=1, max_size=4))
    def test_loc_always_unit_norm_or_absent(self, tokens):
        ev = entity_feature_vector(" ".join(tokens), "LOC", self.make_table(), self.titles())
        if ev is not None:
            assert abs(float(np.linalg.norm(ev.vector)) - 1.0) < 1e-9


class TestCosine:
    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)

    def test_clamped_to_unit_interval(self):
        v = np.array([1.0, 1e-8])
        assert cosine(v, v) <= 1.0

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            cosine(np.zeros(2), np.ones(2))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            cosine(np.ones(2), np.ones(3))
