"""Cosine K-Means over entity feature vectors and per-type cluster dictionaries.

Entities of each type are clustered by repeated Lloyd iterations under the
distance 1 - cos(v, centroid); the run with the lowest total distance over
a fixed number of random restarts wins. Cluster membership then yields one
candidate dictionary per (type, cluster id) — the replacement pools used
by the augmentation stage.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .corpus import ENTITY_TYPES, Corpus, EntityMention, build_type_inventories
from .embeddings import (
    UNIT_NORM_TOL,
    EmbeddingTable,
    EntityVector,
    TitleList,
    entity_feature_vector,
)

logger = logging.getLogger(__name__)

ARTIFACT_SCHEMA_VERSION = 1
FALLBACK_CLUSTER_ID = -1  # marks whole-type-inventory alignment for unvectorizable sources


class ArtifactSchemaError(ValueError):
    """Persisted cluster artifact has an unknown or incompatible schema version."""


@dataclass
class ClusterModel:
    """Fitted per-type model: unit-norm centroids plus surface memberships."""

    etype: str
    k: int
    centroids: np.ndarray  # (k, dim), unit rows
    members: dict[str, int]
    objective: float
    # total cosine distance after each assignment step of the winning restart
    objective_history: tuple[float, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class ClusterSpec:
    """Cluster counts and restart policy (defaults: PER=2, LOC=2, ORG=10, 25 restarts)."""

    k: Mapping[str, int] = field(
        default_factory=lambda: {"PER": 2, "LOC": 2, "ORG": 10}
    )
    repetitions: int = 25
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        for etype, k in self.k.items():
            if k < 1:
                raise ValueError(f"k must be >= 1, got {k} for {etype}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class ClusterDictionary:
    """Unique entity surfaces per (type, cluster id); pools for replacement."""

    clusters: dict[str, dict[int, set[str]]]

    def surfaces(self, etype: str, cluster_id: int) -> set[str]:
        return self.clusters.get(etype, {}).get(cluster_id, set())

    def inventory(self, etype: str) -> set[str]:
        out: set[str] = set()
        for surfaces in self.clusters.get(etype, {}).values():
            out |= surfaces
        return out


def _rng_for(seed: int, *stream: int) -> np.random.Generator:
    # schedule-independent stream derivation: one generator per (seed, indices)
    return np.random.default_rng((seed % 2**64, *stream))


def _lloyd_once(
    points: np.ndarray, k: int, seed: int, repetition: int, max_iters: int
) -> tuple[float, np.ndarray, np.ndarray, list[float]]:
    """One restart of spherical Lloyd iterations; returns (objective, assign, centroids, history)."""
    n = points.shape[0]
    rng = _rng_for(seed, repetition)
    centroids = points[rng.choice(n, size=k, replace=False)].copy()

    history: list[float] = []
    prev_assign: np.ndarray | None = None
    assign = np.zeros(n, dtype=np.intp)
    for it in range(max_iters):
        sims = points @ centroids.T
        assign = np.argmax(sims, axis=1)  # ties resolve to the lowest cluster id
        dists = 1.0 - sims[np.arange(n), assign]
        history.append(float(dists.sum()))
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign
        if it == max_iters - 1:
            break  # keep centroids consistent with the recorded assignment

        new_centroids = centroids.copy()
        empty: list[int] = []
        for j in range(k):
            mask = assign == j
            if not mask.any():
                empty.append(j)
                continue
            mean = points[mask].mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm == 0.0:
                empty.append(j)  # degenerate mean; treat like an empty cluster
                continue
            new_centroids[j] = mean / norm
        if empty:
            # reseed each empty cluster with the worst-fit point (max distance
            # to its assigned centroid), lowest index on ties, no point reused
            order = np.lexsort((np.arange(n), -dists))
            taken = 0
            for j in empty:
                new_centroids[j] = points[order[taken]]
                taken += 1
        centroids = new_centroids
    return history[-1], assign, centroids, history


def kmeans_cosine(
    vectors: Sequence[EntityVector],
    k: int,
    repetitions: int = 25,
    max_iters: int = 100,
    seed: int = 0,
    etype: str = "",
    threads: int = 1,
) -> ClusterModel:
    """Cluster unit-norm entity vectors with restarts; lowest objective wins.

    Deterministic for a fixed seed: each restart draws from its own stream
    and ties between restarts break toward the lowest restart index, so the
    result is independent of how restarts are scheduled.
    """
    n = len(vectors)
    if n < k:
        raise ValueError(f"need at least k={k} vectors, got {n}")
    if repetitions < 1 or max_iters < 1:
        raise ValueError("repetitions and max_iters must be >= 1")
    surfaces = [v.surface for v in vectors]
    if len(set(surfaces)) != n:
        raise ValueError("entity surfaces must be unique")
    points = np.stack([np.asarray(v.vector, dtype=np.float64) for v in vectors])
    if points.ndim != 2:
        raise ValueError("vectors must share one dimension")
    norms = np.linalg.norm(points, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise ValueError("all vectors must be unit-norm")

    def run(rep: int) -> tuple[float, int, np.ndarray, np.ndarray, list[float]]:
        objective, assign, centroids, history = _lloyd_once(points, k, seed, rep, max_iters)
        return objective, rep, assign, centroids, history

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(repetitions)))
    else:
        results = [run(rep) for rep in range(repetitions)]

    objective, _, assign, centroids, history = min(results, key=lambda r: (r[0], r[1]))
    members = {surfaces[i]: int(assign[i]) for i in range(n)}
    return ClusterModel(etype, k, centroids, members, objective, tuple(history))


def assign(vector: np.ndarray, model: ClusterModel) -> int:
    """Cluster id with maximal cosine to the centroids; ties take the lowest id."""
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (model.centroids.shape[1],):
        raise ValueError(
            f"dimension mismatch: vector {v.shape} vs centroids {model.centroids.shape}"
        )
    return int(np.argmax(model.centroids @ v))


def build_cluster_dictionaries(
    corpus: Corpus,
    table: EmbeddingTable,
    titles: TitleList,
    spec: ClusterSpec,
    threads: int = 1,
) -> tuple[dict[str, ClusterModel], ClusterDictionary]:
    """Cluster each type's unique surfaces and group them into dictionaries.

    Surfaces with no usable feature vector are excluded (and logged). A type
    whose vectorizable inventory is smaller than its configured k falls back
    to a single cluster; a type with no vectorizable surfaces gets no model
    and an empty dictionary.
    """
    inventories = build_type_inventories(corpus)
    models: dict[str, ClusterModel] = {}
    clusters: dict[str, dict[int, set[str]]] = {}

    for type_index, etype in enumerate(ENTITY_TYPES):
        surfaces = sorted(inventories[etype])
        vectors = []
        skipped = 0
        for surface in surfaces:
            ev = entity_feature_vector(surface, etype, table, titles)
            if ev is None:
                skipped += 1
            else:
                vectors.append(ev)
        if skipped:
            logger.info("%s: %d of %d surfaces had no usable vector", etype, skipped, len(surfaces))
        if not vectors:
            clusters[etype] = {}
            continue

        k = spec.k.get(etype, 1)
        if len(vectors) < k:
            logger.warning(
                "%s: only %d vectorizable surfaces for k=%d; falling back to a single cluster",
                etype,
                len(vectors),
                k,
            )
            k = 1
        type_seed = int(np.random.SeedSequence([spec.seed % 2**64, type_index]).generate_state(1, np.uint64)[0])
        model = kmeans_cosine(
            vectors,
            k,
            repetitions=spec.repetitions,
            max_iters=spec.max_iters,
            seed=type_seed,
            etype=etype,
            threads=threads,
        )
        models[etype] = model
        by_cluster: dict[int, set[str]] = {cid: set() for cid in range(k)}
        for surface, cid in model.members.items():
            by_cluster[cid].add(surface)
        clusters[etype] = by_cluster

    return models, ClusterDictionary(clusters)


def align_with_id(
    source: EntityMention,
    models: Mapping[str, ClusterModel],
    dictionary: ClusterDictionary,
    table: EmbeddingTable,
    titles: TitleList,
) -> tuple[int, set[str]]:
    """Candidate pool for a source mention plus its cluster id.

    Returns (FALLBACK_CLUSTER_ID, whole-type inventory minus the source)
    when the source has no usable feature vector.
    """
    model = models.get(source.etype)
    if model is None:
        raise ValueError(f"no cluster model for type {source.etype}")
    ev = entity_feature_vector(source.surface, source.etype, table, titles)
    if ev is None:
        logger.info("unvectorizable source %r: falling back to the whole %s inventory",
                    source.surface, source.etype)
        return FALLBACK_CLUSTER_ID, dictionary.inventory(source.etype) - {source.surface}
    cid = assign(ev.vector, model)
    return cid, dictionary.surfaces(source.etype, cid) - {source.surface}


def align(
    source: EntityMention,
    models: Mapping[str, ClusterModel],
    dictionary: ClusterDictionary,
    table: EmbeddingTable,
    titles: TitleList,
) -> set[str]:
    """Replacement candidates from the source's assigned cluster (source excluded)."""
    return align_with_id(source, models, dictionary, table, titles)[1]


def save_cluster_artifacts(fp: IO[str], models: Mapping[str, ClusterModel]) -> None:
    """Persist models as versioned JSON; the dictionary is rebuilt on load."""
    doc = {
        "version": ARTIFACT_SCHEMA_VERSION,
        "models": {
            etype: {
                "k": m.k,
                "objective": m.objective,
                "centroids": [[float(x) for x in row] for row in m.centroids],
                "members": dict(sorted(m.members.items())),
            }
            for etype, m in models.items()
        },
    }
    json.dump(doc, fp, ensure_ascii=False, indent=1, sort_keys=True)
    fp.write("\n")


def load_cluster_artifacts(fp: IO[str]) -> tuple[dict[str, ClusterModel], ClusterDictionary]:
    doc = json.load(fp)
    version = doc.get("version")
    if version != ARTIFACT_SCHEMA_VERSION:
        raise ArtifactSchemaError(
            f"unsupported cluster artifact schema version {version!r} "
            f"(expected {ARTIFACT_SCHEMA_VERSION})"
        )
    models: dict[str, ClusterModel] = {}
    clusters: dict[str, dict[int, set[str]]] = {t: {} for t in ENTITY_TYPES}
    for etype, m in doc["models"].items():
        centroids = np.array(m["centroids"], dtype=np.float64)
        members = {str(s): int(c) for s, c in m["members"].items()}
        models[etype] = ClusterModel(etype, int(m["k"]), centroids, members, float(m["objective"]))
        by_cluster: dict[int, set[str]] = {cid: set() for cid in range(int(m["k"]))}
        for surface, cid in members.items():
            by_cluster[cid].add(surface)
        clusters[etype] = by_cluster
    return models, ClusterDictionary(clusters)
