"""Static word-embedding tables and entity feature vectors.

Vector files follow the plain-text convention: an optional ``count dim``
header line, then one ``word v1 ... vD`` line per word. Entity feature
vectors are unit-norm: LOC/ORG surfaces average their in-vocabulary token
vectors; PER surfaces strip leading title tokens (designation, tribe,
caste, creed markers) and use the first remaining in-vocabulary token.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

import numpy as np

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-6


class EmbeddingFormatError(ValueError):
    """Malformed vector stream: bad header, dimension drift, or non-numeric data."""


@dataclass
class EmbeddingTable:
    """Immutable-after-load word -> float64 vector table."""

    dimension: int
    entries: dict[str, np.ndarray]

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TitleList:
    """Tokens stripped from the front of person names before vector lookup."""

    titles: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token in self.titles


@dataclass(eq=False)
class EntityVector:
    """A surface form with its unit-norm feature vector."""

    surface: str
    vector: np.ndarray


def load_embeddings(source: Iterable[str] | IO[str]) -> EmbeddingTable:
    """Load a text vector stream into an :class:`EmbeddingTable`.

    A first line of exactly two integer fields is treated as a
    ``count dimension`` header. Later duplicates of a word overwrite
    earlier ones with a warning.
    """
    entries: dict[str, np.ndarray] = {}
    dimension = 0
    declared_count = -1
    saw_line = False

    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if not saw_line:
            saw_line = True
            if len(fields) == 2:
                try:
                    declared_count, dimension = int(fields[0]), int(fields[1])
                except ValueError:
                    pass  # not a header; fall through to data parsing
                else:
                    if dimension < 1:
                        raise EmbeddingFormatError(
                            f"line {lineno}: header dimension must be >= 1, got {dimension}"
                        )
                    continue
        word, comps = fields[0], fields[1:]
        if dimension == 0:
            if not comps:
                raise EmbeddingFormatError(f"line {lineno}: no vector components")
            dimension = len(comps)
        if len(comps) != dimension:
            raise EmbeddingFormatError(
                f"line {lineno}: expected {dimension} components, got {len(comps)}"
            )
        try:
            vector = np.array([float(c) for c in comps], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric component ({exc})") from None
        if word in entries:
            logger.warning("duplicate word %r at line %d overwrites earlier vector", word, lineno)
        entries[word] = vector

    if not saw_line:
        raise EmbeddingFormatError("empty vector stream")
    if not entries:
        raise EmbeddingFormatError("vector stream has a header but no data lines")
    if declared_count >= 0 and declared_count != len(entries):
        logger.warning(
            "header declared %d words but %d were loaded", declared_count, len(entries)
        )
    return EmbeddingTable(dimension, entries)


def load_titles(source: Iterable[str] | IO[str]) -> TitleList:
    """One title token per line; '#' starts a comment."""
    titles = set()
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if len(line.split()) != 1:
            raise ValueError(f"line {lineno}: a title must be a single token, got {line!r}")
        titles.add(line)
    return TitleList(frozenset(titles))


def default_titles() -> TitleList:
    """The title list shipped with the package (editable resource file)."""
    text = resources.files("neraug").joinpath("data/titles.txt").read_text("utf-8")
    return load_titles(text.splitlines())


def _unit(vector: np.ndarray) -> np.ndarray | None:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return None
    return vector / norm


def _mean_vector(vectors: list[np.ndarray]) -> np.ndarray:
    # fixed left-to-right accumulation at double precision for reproducibility
    total = vectors[0].astype(np.float64, copy=True)
    for v in vectors[1:]:
        total = total + v
    return total / len(vectors)


def entity_feature_vector(
    surface: str, etype: str, table: EmbeddingTable, titles: TitleList
) -> EntityVector | None:
    """Unit-norm feature vector for an entity surface, or None when unusable.

    LOC/ORG: renormalized mean of in-vocabulary token vectors (OOV tokens
    skipped). PER: leading title tokens are stripped and the first
    remaining in-vocabulary token supplies the vector; if every token is a
    title or OOV, falls back to the LOC/ORG mean rule over the full
    surface. Zero-norm vectors count as OOV.
    """
    tokens = surface.split()
    if not tokens:
        return None

    if etype == "PER":
        rest = list(tokens)
        while rest and rest[0] in titles:
            rest = rest[1:]
        for tok in rest:
            if tok in table.entries:
                unit = _unit(table.entries[tok])
                if unit is not None:
                    return EntityVector(surface, unit)
        # degraded fallback: mean over every in-vocabulary token of the surface

    in_vocab = [table.entries[t] for t in tokens if t in table.entries]
    in_vocab = [v for v in in_vocab if float(np.linalg.norm(v)) > 0.0]
    if not in_vocab:
        return None
    unit = _unit(_mean_vector(in_vocab))
    if unit is None:
        return None
    return EntityVector(surface, unit)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; rejects zero-norm or mismatched inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    value = float(np.dot(a, b) / (na * nb))
    return max(-1.0, min(1.0, value))
