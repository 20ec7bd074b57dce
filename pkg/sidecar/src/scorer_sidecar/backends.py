"""Tagging backends.

A backend tags one window of whitespace tokens and scores candidate
replacements. The server owns windowing and padding, so backends never
see more than ``max_seq_len`` tokens.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Protocol, Sequence

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("PER", "LOC", "ORG")

# common label spellings seen in off-the-shelf token classifiers
_TYPE_ALIASES = {
    "PER": "PER",
    "PERSON": "PER",
    "LOC": "LOC",
    "LOCATION": "LOC",
    "GPE": "LOC",
    "ORG": "ORG",
    "ORGANIZATION": "ORG",
    "ORGANISATION": "ORG",
}


class Backend(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...

    def similarity(self, tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float: ...


def _bigrams(text: str) -> set[str]:
    if len(text) < 2:
        return {text} if text else set()
    return {text[i : i + 2] for i in range(len(text) - 1)}


def surface_similarity(a: str, b: str) -> float:
    """Character-bigram Dice coefficient, a context-free stand-in for
    contextual similarity. 1.0 for equal strings, 0.0 for disjoint ones."""
    if a == b:
        return 1.0
    left, right = _bigrams(a), _bigrams(b)
    if not left or not right:
        return 0.0
    return 2.0 * len(left & right) / (len(left) + len(right))


def _proxy_similarity(tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float:
    start, end = span
    return surface_similarity(" ".join(tokens[start:end]), candidate)


class AllOBackend:
    """Tags every token O. Exercises the protocol without any model."""

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return ["O"] * len(tokens)

    def similarity(self, tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float:
        return _proxy_similarity(tokens, span, candidate)


class LexiconBackend:
    """Greedy longest-match tagger over a fixed surface -> type lexicon."""

    def __init__(self, entries: Mapping[tuple[str, ...], str]):
        for surface, etype in entries.items():
            if not surface:
                raise ValueError("empty surface in lexicon")
            if etype not in ENTITY_TYPES:
                raise ValueError(f"unknown entity type {etype!r} for {' '.join(surface)!r}")
        self._entries = dict(entries)
        self._longest = max((len(s) for s in entries), default=0)

    def tag(self, tokens: Sequence[str]) -> list[str]:
        labels = ["O"] * len(tokens)
        i = 0
        while i < len(tokens):
            for width in range(min(self._longest, len(tokens) - i), 0, -1):
                etype = self._entries.get(tuple(tokens[i : i + width]))
                if etype is not None:
                    labels[i] = f"B-{etype}"
                    for j in range(i + 1, i + width):
                        labels[j] = f"I-{etype}"
                    i += width
                    break
            else:
                i += 1
        return labels

    def similarity(self, tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float:
        return _proxy_similarity(tokens, span, candidate)


def load_lexicon(lines: Iterable[str]) -> dict[tuple[str, ...], str]:
    """Parse ``surface<TAB>type`` lines; # comments and blanks allowed."""
    entries: dict[tuple[str, ...], str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        surface, sep, etype = line.partition("\t")
        if not sep or not surface.strip() or etype.strip() not in ENTITY_TYPES:
            raise ValueError(f"lexicon line {lineno}: expected 'surface<TAB>PER|LOC|ORG'")
        entries[tuple(surface.split())] = etype.strip()
    return entries


def _normalize_label(label: str) -> str:
    label = str(label).upper()
    if label in ("O", ""):
        return "O"
    prefix, _, etype = label.partition("-")
    if prefix not in ("B", "I"):
        prefix, etype = "B", label
    mapped = _TYPE_ALIASES.get(etype)
    return f"{prefix}-{mapped}" if mapped else "O"


def _repair_bio(labels: list[str]) -> list[str]:
    # a run must open with B-; models occasionally emit a bare I- opening
    previous = "O"
    for i, label in enumerate(labels):
        if label.startswith("I-") and previous not in (f"B-{label[2:]}", label):
            labels[i] = "B-" + label[2:]
        previous = labels[i]
    return labels


class TransformersBackend:
    """Pretrained token-classification model behind the wire protocol.

    Label vocabularies vary across checkpoints; anything that does not
    normalize to B-/I- over PER, LOC, ORG is reported as O. Similarity is
    the cosine of mean-pooled hidden states over the span, original
    surface vs candidate spliced into the same context.
    """

    def __init__(self, config):
        import torch  # imported here so the offline backends need no model stack
        from transformers import AutoModelForTokenClassification, AutoTokenizer

        self._torch = torch
        self._device = config.device
        self._tokenizer = AutoTokenizer.from_pretrained(config.model)
        self._model = AutoModelForTokenClassification.from_pretrained(config.model)
        self._model.to(config.device)
        self._model.eval()
        self._id2label = {
            int(i): _normalize_label(name)
            for i, name in self._model.config.id2label.items()
        }
        logger.info("loaded %s on %s", config.model, config.device)

    def _encode(self, tokens: Sequence[str]):
        return self._tokenizer(
            list(tokens),
            is_split_into_words=True,
            return_tensors="pt",
            truncation=True,
        ).to(self._device)

    def tag(self, tokens: Sequence[str]) -> list[str]:
        encoding = self._encode(tokens)
        with self._torch.no_grad():
            logits = self._model(**encoding).logits[0]
        predictions = logits.argmax(dim=-1).tolist()
        labels = ["O"] * len(tokens)
        seen: set[int] = set()
        for position, word_id in enumerate(encoding.word_ids(0)):
            if word_id is None or word_id in seen:
                continue  # first sub-token speaks for the word
            seen.add(word_id)
            labels[word_id] = self._id2label.get(predictions[position], "O")
        return _repair_bio(labels)

    def _span_vector(self, tokens: Sequence[str], start: int, end: int):
        encoding = self._encode(tokens)
        with self._torch.no_grad():
            hidden = self._model(**encoding, output_hidden_states=True).hidden_states[-1][0]
        rows = [
            hidden[position]
            for position, word_id in enumerate(encoding.word_ids(0))
            if word_id is not None and start <= word_id < end
        ]
        if not rows:
            return None
        return self._torch.stack(rows).mean(dim=0)

    def similarity(self, tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float:
        start, end = span
        original = self._span_vector(tokens, start, end)
        replaced = list(tokens[:start]) + candidate.split() + list(tokens[end:])
        swapped = self._span_vector(replaced, start, start + len(candidate.split()))
        if original is None or swapped is None:
            return 0.0
        value = self._torch.nn.functional.cosine_similarity(original, swapped, dim=0)
        return float(value.item())
