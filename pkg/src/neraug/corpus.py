"""Tagged-corpus containers: parsing, validation, repair, and analysis.

Corpora are token/label sequences in either the BIO or the IO scheme,
restricted to PER/LOC/ORG entity types. The canonical file format is one
``token<TAB>tag`` line per token, a blank line terminating each sentence,
UTF-8 throughout. The parser additionally accepts runs of spaces/tabs as
the field separator.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("PER", "LOC", "ORG")
BIO_LABELS = frozenset({"O"} | {f"{p}-{t}" for p in ("B", "I") for t in ENTITY_TYPES})
IO_LABELS = frozenset({"O", *ENTITY_TYPES})
SCHEMES = ("BIO", "IO")


class CorpusFormatError(ValueError):
    """Malformed document, unknown tag, or invalid label sequence."""


def normalize_surface(surface: str) -> str:
    """Collapse internal whitespace to single spaces (no case folding)."""
    return " ".join(surface.split())


def _validate_labels(labels: Sequence[str], scheme: str) -> None:
    valid = BIO_LABELS if scheme == "BIO" else IO_LABELS
    prev = "O"
    for lab in labels:
        if lab not in valid:
            raise CorpusFormatError(f"unknown tag {lab!r} for scheme {scheme}")
        if scheme == "BIO" and lab.startswith("I-"):
            if prev != lab and prev != "B-" + lab[2:]:
                raise CorpusFormatError(
                    f"{lab} does not continue a {lab[2:]} span (previous label {prev!r})"
                )
        prev = lab


@dataclass(frozen=True)
class TaggedSentence:
    """A tokenized sentence with one label per token."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.tokens) != len(self.labels):
            raise CorpusFormatError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels"
            )
        for tok in self.tokens:
            # whitespace inside a token would corrupt the line-oriented format
            if not tok or tok.split() != [tok]:
                raise CorpusFormatError(
                    f"bad token {tok!r}: tokens must be non-empty and whitespace-free"
                )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    """A sequence of tagged sentences under one labeling scheme."""

    sentences: tuple[TaggedSentence, ...]
    scheme: str = "BIO"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if self.scheme not in SCHEMES:
            raise CorpusFormatError(f"unknown scheme {self.scheme!r}")
        for sent in self.sentences:
            _validate_labels(sent.labels, self.scheme)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[TaggedSentence]:
        return iter(self.sentences)


@dataclass(frozen=True)
class EntityMention:
    """A maximal typed token span; ``surface`` is the tokens joined by spaces."""

    sentence_index: int
    start: int
    length: int
    etype: str
    surface: str

    @property
    def end(self) -> int:
        return self.start + self.length


def parse_corpus(text: str, scheme: str = "BIO", mode: str = "strict") -> Corpus:
    """Parse a tagged document into a :class:`Corpus`.

    In lenient mode an ``I-X`` with no legal predecessor is rewritten to
    ``B-X`` and a warning is logged; strict mode rejects it. Extra blank
    lines are tolerated (never produce empty sentences).
    """
    if scheme not in SCHEMES:
        raise CorpusFormatError(f"unknown scheme {scheme!r}")
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    valid = BIO_LABELS if scheme == "BIO" else IO_LABELS

    sentences: list[TaggedSentence] = []
    toks: list[str] = []
    labs: list[str] = []

    def flush() -> None:
        if toks:
            sentences.append(TaggedSentence(tuple(toks), tuple(labs)))
            toks.clear()
            labs.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        fields = line.split()
        if len(fields) != 2:
            raise CorpusFormatError(
                f"line {lineno}: expected one token and one tag, got {len(fields)} fields"
            )
        token, tag = fields
        if tag not in valid:
            raise CorpusFormatError(f"line {lineno}: unknown tag {tag!r} for scheme {scheme}")
        if scheme == "BIO" and tag.startswith("I-"):
            prev = labs[-1] if labs else "O"
            if prev != tag and prev != "B-" + tag[2:]:
                if mode == "strict":
                    raise CorpusFormatError(
                        f"line {lineno}: {tag} does not continue a {tag[2:]} span"
                    )
                logger.warning("line %d: repaired illegal %s to B-%s", lineno, tag, tag[2:])
                tag = "B-" + tag[2:]
        toks.append(token)
        labs.append(tag)
    flush()
    return Corpus(tuple(sentences), scheme)


def serialize_corpus(corpus: Corpus) -> str:
    """Render the canonical form: tab separator, blank line after each sentence."""
    parts: list[str] = []
    for sent in corpus:
        for tok, lab in zip(sent.tokens, sent.labels):
            parts.append(f"{tok}\t{lab}\n")
        parts.append("\n")
    return "".join(parts)


def io_to_bio(corpus: Corpus) -> Corpus:
    """Convert an IO corpus to BIO: each maximal non-O run becomes B-X I-X...

    Adjacent same-type entities are indistinguishable from a single entity
    in the IO scheme, so each maximal run converts to exactly one span.
    """
    if corpus.scheme != "IO":
        raise CorpusFormatError(f"expected an IO corpus, got scheme {corpus.scheme!r}")
    sentences = []
    for sent in corpus:
        out = []
        prev = "O"
        for lab in sent.labels:
            if lab == "O":
                out.append("O")
            elif lab == prev:
                out.append(f"I-{lab}")
            else:
                out.append(f"B-{lab}")
            prev = lab
        sentences.append(TaggedSentence(sent.tokens, tuple(out)))
    return Corpus(tuple(sentences), "BIO")


def extract_mentions(corpus: Corpus) -> list[EntityMention]:
    """All entity mentions in document order (one per maximal B/I span)."""
    if corpus.scheme != "BIO":
        raise CorpusFormatError("extract_mentions requires a BIO corpus")
    mentions: list[EntityMention] = []
    for si, sent in enumerate(corpus):
        start = -1
        etype = ""
        for i, lab in enumerate(sent.labels):
            if lab.startswith("I-"):
                continue
            if start >= 0:
                mentions.append(
                    EntityMention(si, start, i - start, etype, " ".join(sent.tokens[start:i]))
                )
                start = -1
            if lab.startswith("B-"):
                start = i
                etype = lab[2:]
        if start >= 0:
            n = len(sent.labels)
            mentions.append(
                EntityMention(si, start, n - start, etype, " ".join(sent.tokens[start:n]))
            )
    return mentions


def rebuild_labels(sentence_length: int, mentions: Iterable[EntityMention]) -> tuple[str, ...]:
    """Inverse of the mention scan for a single sentence (mentions must be disjoint)."""
    labels = ["O"] * sentence_length
    for m in mentions:
        labels[m.start] = f"B-{m.etype}"
        for i in range(m.start + 1, m.end):
            labels[i] = f"I-{m.etype}"
    return tuple(labels)


def build_type_inventories(corpus: Corpus) -> dict[str, set[str]]:
    """Unique entity surfaces per type (whitespace-normalized)."""
    inventories: dict[str, set[str]] = {t: set() for t in ENTITY_TYPES}
    for m in extract_mentions(corpus):
        inventories[m.etype].add(m.surface)
    return inventories


class SurfaceMatcher:
    """Token-window matcher over per-type surface inventories.

    Overlapping matches resolve longest-first, then leftmost, then by type
    priority PER > LOC > ORG. Used both for missing-annotation mapping and
    for the gazetteer tagger so the two stay consistent.
    """

    def __init__(self, inventories: Mapping[str, AbstractSet[str]]):
        self._surfaces: dict[str, set[tuple[str, ...]]] = {}
        for etype in ENTITY_TYPES:
            windows = set()
            for surface in inventories.get(etype, ()):
                window = tuple(normalize_surface(surface).split())
                if window:
                    windows.add(window)
            self._surfaces[etype] = windows
        self._max_len = max(
            (len(w) for ws in self._surfaces.values() for w in ws), default=0
        )

    def match(
        self, tokens: Sequence[str], free: Sequence[bool] | None = None
    ) -> list[tuple[int, int, str]]:
        """Greedy non-overlapping matches restricted to ``free`` positions.

        Returns (start, length, etype) spans sorted by start.
        """
        n = len(tokens)
        open_pos = [True] * n if free is None else list(free)
        spans: list[tuple[int, int, str]] = []
        for length in range(min(self._max_len, n), 0, -1):
            for start in range(0, n - length + 1):
                if not all(open_pos[start : start + length]):
                    continue
                window = tuple(tokens[start : start + length])
                for etype in ENTITY_TYPES:
                    if window in self._surfaces[etype]:
                        spans.append((start, length, etype))
                        for i in range(start, start + length):
                            open_pos[i] = False
                        break
        spans.sort()
        return spans


@dataclass(frozen=True)
class MappingRow:
    mentions_before: int
    mentions_added: int

    @property
    def percent_increase(self) -> float:
        if self.mentions_before == 0:
            return 0.0
        return 100.0 * self.mentions_added / self.mentions_before


@dataclass(frozen=True)
class MappingReport:
    """Per-type and total mention growth from missing-annotation mapping."""

    per_type: Mapping[str, MappingRow]
    total: MappingRow

    def to_dict(self) -> dict:
        return {
            "per_type": {
                t: {
                    "mentions_before": r.mentions_before,
                    "mentions_added": r.mentions_added,
                    "percent_increase": r.percent_increase,
                }
                for t, r in self.per_type.items()
            },
            "total": {
                "mentions_before": self.total.mentions_before,
                "mentions_added": self.total.mentions_added,
                "percent_increase": self.total.percent_increase,
            },
        }

    def to_text(self) -> str:
        lines = [f"{'type':<6} {'before':>8} {'added':>8} {'increase':>9}"]
        for t in ENTITY_TYPES:
            r = self.per_type[t]
            lines.append(
                f"{t:<6} {r.mentions_before:>8} {r.mentions_added:>8} {r.percent_increase:>8.1f}%"
            )
        r = self.total
        lines.append(
            f"{'total':<6} {r.mentions_before:>8} {r.mentions_added:>8} {r.percent_increase:>8.1f}%"
        )
        return "\n".join(lines) + "\n"


def map_missing_annotations(
    corpus: Corpus, inventories: Mapping[str, AbstractSet[str]]
) -> tuple[Corpus, MappingReport]:
    """Label inventory surfaces found inside O-runs; existing labels are kept.

    Matching is whole-token-window only, longest-first then leftmost then
    PER > LOC > ORG; non-O labels are never overwritten.
    """
    if corpus.scheme != "BIO":
        raise CorpusFormatError("map_missing_annotations requires a BIO corpus")
    matcher = SurfaceMatcher(inventories)
    before = Counter(m.etype for m in extract_mentions(corpus))
    added: Counter[str] = Counter()

    sentences = []
    for sent in corpus:
        open_pos = [lab == "O" for lab in sent.labels]
        spans = matcher.match(sent.tokens, open_pos) if any(open_pos) else []
        if not spans:
            sentences.append(sent)
            continue
        labels = list(sent.labels)
        for start, length, etype in spans:
            labels[start] = f"B-{etype}"
            for i in range(start + 1, start + length):
                labels[i] = f"I-{etype}"
            added[etype] += 1
        sentences.append(TaggedSentence(sent.tokens, tuple(labels)))

    per_type = {t: MappingRow(before[t], added[t]) for t in ENTITY_TYPES}
    total = MappingRow(sum(before.values()), sum(added.values()))
    return Corpus(tuple(sentences), "BIO"), MappingReport(per_type, total)


@dataclass(frozen=True)
class CorpusStats:
    """Mention counts per type plus the sentence count."""

    mention_counts: Mapping[str, int]
    sentences: int

    def to_dict(self) -> dict:
        return {"per_type": dict(self.mention_counts), "sentences": self.sentences}

    def to_text(self) -> str:
        lines = [f"{'type':<10} {'mentions':>9}"]
        for t in ENTITY_TYPES:
            lines.append(f"{t:<10} {self.mention_counts[t]:>9}")
        lines.append(f"{'sentences':<10} {self.sentences:>9}")
        return "\n".join(lines) + "\n"


def corpus_stats(corpus: Corpus) -> CorpusStats:
    counts = Counter(m.etype for m in extract_mentions(corpus))
    return CorpusStats({t: counts[t] for t in ENTITY_TYPES}, len(corpus))


@dataclass(frozen=True)
class OverlapRow:
    unique_test_count: int
    seen_in_train_count: int

    @property
    def percentage(self) -> float:
        if self.unique_test_count == 0:
            return 0.0
        return 100.0 * self.seen_in_train_count / self.unique_test_count


@dataclass(frozen=True)
class OverlapReport:
    """How many unique test-set surfaces per type also occur in training."""

    per_type: Mapping[str, OverlapRow]
    total: OverlapRow

    def to_dict(self) -> dict:
        return {
            "per_type": {
                t: {
                    "unique_test_count": r.unique_test_count,
                    "seen_in_train_count": r.seen_in_train_count,
                    "percentage": r.percentage,
                }
                for t, r in self.per_type.items()
            },
            "total": {
                "unique_test_count": self.total.unique_test_count,
                "seen_in_train_count": self.total.seen_in_train_count,
                "percentage": self.total.percentage,
            },
        }

    def to_text(self) -> str:
        lines = [f"{'type':<6} {'seen':>18} {'unique':>8}"]
        for t in ENTITY_TYPES:
            r = self.per_type[t]
            cell = f"{r.seen_in_train_count}, {r.percentage:.2f}%"
            lines.append(f"{t:<6} {cell:>18} {r.unique_test_count:>8}")
        cell = f"{self.total.seen_in_train_count}, {self.total.percentage:.2f}%"
        lines.append(f"{'total':<6} {cell:>18} {self.total.unique_test_count:>8}")
        return "\n".join(lines) + "\n"


def overlap_analysis(train: Corpus, test: Corpus) -> OverlapReport:
    """Type-wise presence of unique test-set entity surfaces in the train set."""
    train_inv = build_type_inventories(train)
    test_inv = build_type_inventories(test)
    per_type = {
        t: OverlapRow(len(test_inv[t]), len(test_inv[t] & train_inv[t]))
        for t in ENTITY_TYPES
    }
    total = OverlapRow(
        sum(r.unique_test_count for r in per_type.values()),
        sum(r.seen_in_train_count for r in per_type.values()),
    )
    return OverlapReport(per_type, total)
