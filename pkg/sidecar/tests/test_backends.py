import pytest

from scorer_sidecar.backends import (
    AllOBackend,
    LexiconBackend,
    _normalize_label,
    _repair_bio,
    load_lexicon,
    surface_similarity,
)
from scorer_sidecar.config import SidecarConfig


class TestAllO:
    def test_every_token_is_o(self):
        assert AllOBackend().tag(["a", "b", "c"]) == ["O", "O", "O"]

    def test_empty_window(self):
        assert AllOBackend().tag([]) == []


class TestLexicon:
    @pytest.fixture
    def backend(self):
        return LexiconBackend(
            {
                ("Sartaj", "Aziz"): "PER",
                ("Sartaj",): "PER",
                ("Multan",): "LOC",
                ("State", "Bank", "of", "Pakistan"): "ORG",
            }
        )

    def test_single_token_match(self, backend):
        assert backend.tag(["went", "to", "Multan"]) == ["O", "O", "B-LOC"]

    def test_longest_match_wins(self, backend):
        # "Sartaj Aziz" must shadow the single-token "Sartaj" entry
        assert backend.tag(["Sartaj", "Aziz", "spoke"]) == ["B-PER", "I-PER", "O"]

    def test_four_token_surface(self, backend):
        got = backend.tag(["the", "State", "Bank", "of", "Pakistan", "said"])
        assert got == ["O", "B-ORG", "I-ORG", "I-ORG", "I-ORG", "O"]

    def test_no_match_inside_longer_mention(self, backend):
        # consumed tokens are not rescanned
        got = backend.tag(["Sartaj", "Aziz", "Multan"])
        assert got == ["B-PER", "I-PER", "B-LOC"]

    def test_unknown_tokens_stay_o(self, backend):
        assert backend.tag(["nothing", "known"]) == ["O", "O"]

    def test_rejects_bad_type(self):
        with pytest.raises(ValueError):
            LexiconBackend({("x",): "DATE"})

    def test_rejects_empty_surface(self):
        with pytest.raises(ValueError):
            LexiconBackend({(): "PER"})


class TestLoadLexicon:
    def test_parses_tab_separated_lines(self):
        entries = load_lexicon(["# people\n", "\n", "Sartaj Aziz\tPER\n", "Multan\tLOC\n"])
        assert entries == {("Sartaj", "Aziz"): "PER", ("Multan",): "LOC"}

    @pytest.mark.parametrize("line", ["no tab here", "x\tDATE", "\tPER", "x\t"])
    def test_rejects_malformed_lines(self, line):
        with pytest.raises(ValueError, match="lexicon line 1"):
            load_lexicon([line])


class TestSurfaceSimilarity:
    def test_equal_strings_score_one(self):
        assert surface_similarity("Multan", "Multan") == 1.0

    def test_disjoint_strings_score_zero(self):
        assert surface_similarity("abc", "xyz") == 0.0

    def test_symmetric_and_bounded(self):
        pairs = [("Lahore", "Lahori"), ("a", "ab"), ("", "x"), ("Sartaj Aziz", "Sartaj")]
        for a, b in pairs:
            left, right = surface_similarity(a, b), surface_similarity(b, a)
            assert left == right
            assert 0.0 <= left <= 1.0

    def test_shared_bigrams_score_between(self):
        value = surface_similarity("Multan", "Mult")
        assert 0.0 < value < 1.0


class TestLabelNormalization:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("B-PER", "B-PER"),
            ("I-person", "I-PER"),
            ("B-GPE", "B-LOC"),
            ("I-ORGANISATION", "I-ORG"),
            ("LOC", "B-LOC"),  # schemes without prefixes open a mention
            ("B-MISC", "O"),
            ("O", "O"),
            ("", "O"),
        ],
    )
    def test_aliases(self, raw, expected):
        assert _normalize_label(raw) == expected

    def test_repair_opens_dangling_continuation(self):
        assert _repair_bio(["I-PER", "I-PER", "O"]) == ["B-PER", "I-PER", "O"]

    def test_repair_splits_type_change(self):
        assert _repair_bio(["B-PER", "I-LOC"]) == ["B-PER", "B-LOC"]

    def test_repair_keeps_legal_sequences(self):
        legal = ["B-ORG", "I-ORG", "O", "B-PER"]
        assert _repair_bio(list(legal)) == legal


class TestConfig:
    def test_defaults(self):
        config = SidecarConfig()
        assert config.max_seq_len == 100

    def test_rejects_zero_window(self):
        with pytest.raises(ValueError):
            SidecarConfig(max_seq_len=0)

    def test_rejects_zero_batch(self):
        with pytest.raises(ValueError):
            SidecarConfig(batch_size=0)
