"""Augmentation engines: cluster-based replacement and the random baseline.

The cluster method generates several candidates per sentence by swapping
each entity mention for a high-similarity surface drawn from the mention's
aligned cluster pool, scores every candidate with a tagger (plausibility =
micro-F1 of the tagger's output against the candidate's own labels), and
keeps either the top-k or all perfectly validated candidates. The random
baseline replaces every mention with a uniform same-type draw and keeps
the single result unconditionally.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

from .clustering import ClusterDictionary, ClusterModel, align_with_id
from .corpus import Corpus, EntityMention, TaggedSentence, extract_mentions
from .embeddings import EmbeddingTable, TitleList, cosine, entity_feature_vector
from .evaluation import entity_prf
from .scorer import Scorer, ScorerError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240915  # fixed default so bare runs are reproducible


@dataclass(frozen=True)
class TopK:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class AllCorrect:
    pass


Selection = TopK | AllCorrect


@dataclass(frozen=True)
class AugConfig:
    candidates_per_sentence: int = 5
    subset_size: int = 20  # effective s = min(subset_size, pool size)
    selection: Selection = TopK(1)
    iterations: int = 1
    seed: int = DEFAULT_SEED
    degrade_to_zero: bool = False  # scorer failure -> plausibility 0 instead of raising

    def __post_init__(self) -> None:
        if self.candidates_per_sentence < 1:
            raise ValueError("candidates_per_sentence must be >= 1")
        if self.subset_size < 1:
            raise ValueError("subset_size must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class Replacement:
    source_surface: str
    candidate_surface: str
    cluster_id: int
    similarity: float


@dataclass
class AugCandidate:
    sentence: TaggedSentence
    replacements: tuple[Replacement, ...]
    generation_order: int
    plausibility: float = float("nan")


@dataclass(frozen=True)
class ProvenanceRecord:
    origin_index: int
    iteration: int
    method: str  # cluster | eda-rr | generative
    replacements: tuple[Replacement, ...]
    plausibility: float

    def to_dict(self) -> dict:
        return {
            "origin_index": self.origin_index,
            "iteration": self.iteration,
            "method": self.method,
            "replacements": [
                {
                    "source": r.source_surface,
                    "candidate": r.candidate_surface,
                    "cluster_id": r.cluster_id,
                    "similarity": r.similarity,
                }
                for r in self.replacements
            ],
            "plausibility": self.plausibility,
        }


def write_provenance(fp: IO[str], records: Sequence[ProvenanceRecord]) -> None:
    """One JSON record per line, in output order."""
    for rec in records:
        fp.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


class SimilarityProvider:
    """Similarity of a candidate surface to a source mention in its sentence."""

    def similarity(
        self, tokens: Sequence[str], mention: EntityMention, candidate: str
    ) -> float:
        raise NotImplementedError


class StaticSimilarityProvider(SimilarityProvider):
    """Context-free ranking: cosine between entity feature vectors.

    A source with no usable vector scores every candidate 0.0, which
    degrades the argmax to the lexicographic tie rule.
    """

    def __init__(self, table: EmbeddingTable, titles: TitleList):
        self._table = table
        self._titles = titles
        self._cache: dict[tuple[str, str], np.ndarray | None] = {}

    def _vector(self, surface: str, etype: str) -> np.ndarray | None:
        key = (surface, etype)
        if key not in self._cache:
            ev = entity_feature_vector(surface, etype, self._table, self._titles)
            self._cache[key] = None if ev is None else ev.vector
        return self._cache[key]

    def similarity(
        self, tokens: Sequence[str], mention: EntityMention, candidate: str
    ) -> float:
        src = self._vector(mention.surface, mention.etype)
        cand = self._vector(candidate, mention.etype)
        if src is None or cand is None:
            return 0.0
        return cosine(src, cand)


class ExternalSimilarityProvider(SimilarityProvider):
    """Contextual ranking via the scorer wire protocol's similarity records."""

    def __init__(self, client) -> None:  # client: scorer.ExternalScorer
        self._client = client

    def similarity(
        self, tokens: Sequence[str], mention: EntityMention, candidate: str
    ) -> float:
        return self._client.similarity(tokens, (mention.start, mention.length), candidate)


def _sentence_mentions(sentence: TaggedSentence) -> list[EntityMention]:
    return extract_mentions(Corpus((sentence,), "BIO"))


def reannotate(
    sentence: TaggedSentence, mention: EntityMention, replacement_tokens: Sequence[str]
) -> TaggedSentence:
    """Splice replacement tokens over a mention span and repair the labels.

    Labels across the new span become B-X I-X...; everything outside the
    span is untouched (later positions shift by the length delta).
    """
    if not replacement_tokens:
        raise ValueError("replacement must be non-empty")
    if mention.start < 0 or mention.end > len(sentence.tokens):
        raise ValueError(
            f"span [{mention.start}, {mention.end}) out of bounds "
            f"for a {len(sentence.tokens)}-token sentence"
        )
    repl = tuple(replacement_tokens)
    tokens = sentence.tokens[: mention.start] + repl + sentence.tokens[mention.end :]
    span_labels = (f"B-{mention.etype}",) + (f"I-{mention.etype}",) * (len(repl) - 1)
    labels = sentence.labels[: mention.start] + span_labels + sentence.labels[mention.end :]
    return TaggedSentence(tokens, labels)


def _pick_replacement(
    pool: set[str],
    used: set[str],
    mention: EntityMention,
    tokens: Sequence[str],
    provider: SimilarityProvider,
    subset_size: int,
    rng: np.random.Generator,
) -> tuple[str, float]:
    """Subset draw then similarity argmax; ties take the smallest surface."""
    open_pool = sorted(pool - used)
    if not open_pool:
        # every pool surface already used for this mention: allow reuse
        used.clear()
        open_pool = sorted(pool)
    s = min(subset_size, len(open_pool))
    idx = rng.choice(len(open_pool), size=s, replace=False)
    subset = [open_pool[i] for i in sorted(idx)]
    scored = [(provider.similarity(tokens, mention, cand), cand) for cand in subset]
    best_sim, best = min(scored, key=lambda p: (-p[0], p[1]))
    return best, best_sim


def generate_candidates(
    sentence: TaggedSentence,
    models: Mapping[str, ClusterModel],
    dictionary: ClusterDictionary,
    table: EmbeddingTable,
    titles: TitleList,
    provider: SimilarityProvider,
    cfg: AugConfig,
    rng: np.random.Generator,
) -> list[AugCandidate]:
    """All candidates for one sentence; empty when the sentence has no mentions.

    Surfaces already chosen for a mention are excluded from later candidates
    of the same sentence until its pool is exhausted, then reuse restarts.
    A mention whose whole pool is empty stays unreplaced (logged once).
    """
    mentions = _sentence_mentions(sentence)
    if not mentions:
        return []

    pools: list[tuple[int, set[str]]] = []
    for m in mentions:
        if m.etype not in models:
            pools.append((0, set()))
        else:
            pools.append(align_with_id(m, models, dictionary, table, titles))
        if not pools[-1][1]:
            logger.info(
                "empty candidate pool for %r (%s); left unreplaced", m.surface, m.etype
            )
    used: list[set[str]] = [set() for _ in mentions]

    candidates: list[AugCandidate] = []
    for order in range(cfg.candidates_per_sentence):
        out = sentence
        delta = 0
        replacements: list[Replacement] = []
        for mi, mention in enumerate(mentions):
            cid, pool = pools[mi]
            if not pool:
                continue
            surface, sim = _pick_replacement(
                pool, used[mi], mention, sentence.tokens, provider, cfg.subset_size, rng
            )
            used[mi].add(surface)
            shifted = EntityMention(
                mention.sentence_index,
                mention.start + delta,
                mention.length,
                mention.etype,
                mention.surface,
            )
            repl_tokens = surface.split(" ")
            out = reannotate(out, shifted, repl_tokens)
            delta += len(repl_tokens) - mention.length
            replacements.append(Replacement(mention.surface, surface, cid, sim))
        candidates.append(AugCandidate(out, tuple(replacements), order))
    return candidates


def score_candidate(
    candidate: AugCandidate, scorer: Scorer, degrade_to_zero: bool = False
) -> float:
    """Plausibility: micro-F1 of the scorer's tagging against the candidate's labels."""
    try:
        predicted = scorer.tag(candidate.sentence.tokens)
    except ScorerError:
        if not degrade_to_zero:
            raise
        logger.warning("scorer failed on a candidate; assigning plausibility 0.0")
        return 0.0
    reference = Corpus((candidate.sentence,), "BIO")
    prediction = Corpus((TaggedSentence(candidate.sentence.tokens, predicted),), "BIO")
    return entity_prf(reference, prediction).micro.f1


def select(candidates: Sequence[AugCandidate], mode: Selection) -> list[AugCandidate]:
    """TopK keeps the k best by plausibility (ties by generation order);
    AllCorrect keeps every candidate with plausibility exactly 1.0."""
    if isinstance(mode, TopK):
        ranked = sorted(candidates, key=lambda c: (-c.plausibility, c.generation_order))
        return ranked[: mode.k]
    return [c for c in candidates if c.plausibility == 1.0]


def _sentence_rng(seed: int, iteration: int, sentence_index: int) -> np.random.Generator:
    return np.random.default_rng((seed % 2**64, iteration, sentence_index))


def augment_corpus(
    corpus: Corpus,
    models: Mapping[str, ClusterModel],
    dictionary: ClusterDictionary,
    table: EmbeddingTable,
    titles: TitleList,
    provider: SimilarityProvider,
    scorer: Scorer,
    cfg: AugConfig,
    threads: int = 1,
) -> tuple[Corpus, list[ProvenanceRecord]]:
    """Run the cluster method over a corpus.

    Each iteration re-generates from the original corpus with its own
    randomness. Output sentences are ordered by (origin index, iteration,
    generation order); candidates identical to their origin are dropped.
    Deterministic for fixed inputs and seed, regardless of thread count.
    """

    def work(args: tuple[int, int, TaggedSentence]) -> list[tuple[TaggedSentence, ProvenanceRecord]]:
        iteration, si, sentence = args
        rng = _sentence_rng(cfg.seed, iteration, si)
        cands = generate_candidates(
            sentence, models, dictionary, table, titles, provider, cfg, rng
        )
        if not cands:
            return []
        for c in cands:
            c.plausibility = score_candidate(c, scorer, cfg.degrade_to_zero)
        picked = select(cands, cfg.selection)
        out = []
        for c in picked:
            if c.sentence == sentence:
                logger.info("dropping verbatim duplicate of sentence %d", si)
                continue
            rec = ProvenanceRecord(si, iteration, "cluster", c.replacements, c.plausibility)
            out.append((c.sentence, rec))
        return out

    jobs = [
        (iteration, si, sentence)
        for si, sentence in enumerate(corpus.sentences)
        for iteration in range(1, cfg.iterations + 1)
    ]
    # output order == (origin, iteration, generation) because jobs are built
    # origin-major and each job returns its picks in generation order
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_:
            per_job = list(pool_.map(work, jobs))
    else:
        per_job = [work(j) for j in jobs]

    sentences: list[TaggedSentence] = []
    records: list[ProvenanceRecord] = []
    for chunk in per_job:
        for sent, rec in chunk:
            sentences.append(sent)
            records.append(rec)
    return Corpus(tuple(sentences), "BIO"), records


def eda_rr(
    corpus: Corpus,
    type_inventories: Mapping[str, set[str]],
    seed: int = DEFAULT_SEED,
) -> tuple[Corpus, list[ProvenanceRecord]]:
    """Random-replacement baseline: every mention swaps for a uniform draw
    from its type inventory (never itself when an alternative exists).

    Emits one sentence per input sentence with >= 1 mention, even when the
    forced draw reproduces the original (single-surface inventories).
    """
    for etype, surfaces in build_needed(corpus).items():
        have = type_inventories.get(etype, set())
        if surfaces and not have:
            raise ValueError(f"type {etype} occurs in the corpus but its inventory is empty")

    sentences: list[TaggedSentence] = []
    records: list[ProvenanceRecord] = []
    for si, sentence in enumerate(corpus.sentences):
        mentions = _sentence_mentions(sentence)
        if not mentions:
            continue
        rng = np.random.default_rng((seed % 2**64, si))
        out = sentence
        delta = 0
        replacements: list[Replacement] = []
        for mention in mentions:
            inventory = sorted(type_inventories[mention.etype])
            choices = [s for s in inventory if s != mention.surface] or inventory
            surface = choices[int(rng.integers(len(choices)))]
            shifted = EntityMention(
                mention.sentence_index,
                mention.start + delta,
                mention.length,
                mention.etype,
                mention.surface,
            )
            repl_tokens = surface.split(" ")
            out = reannotate(out, shifted, repl_tokens)
            delta += len(repl_tokens) - mention.length
            replacements.append(Replacement(mention.surface, surface, -1, 0.0))
        sentences.append(out)
        records.append(ProvenanceRecord(si, 1, "eda-rr", tuple(replacements), float("nan")))
    return Corpus(tuple(sentences), "BIO"), records


def build_needed(corpus: Corpus) -> dict[str, set[str]]:
    """Types actually present in the corpus, with their surfaces."""
    needed: dict[str, set[str]] = {}
    for m in extract_mentions(corpus):
        needed.setdefault(m.etype, set()).add(m.surface)
    return needed
