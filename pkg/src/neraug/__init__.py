"""neraug: cluster-based cross-lingual data augmentation for NER corpora.

Pipeline stages: tagged-corpus parsing and repair, entity feature vectors
from static word embeddings, per-type cosine K-Means cluster dictionaries,
cluster-aligned / random / generative entity replacement, plausibility
scoring, and entity-level micro-F1 evaluation.
"""

__version__ = "0.1.0"

from .augment import (
    AllCorrect,
    AugCandidate,
    AugConfig,
    ProvenanceRecord,
    Replacement,
    StaticSimilarityProvider,
    TopK,
    augment_corpus,
    eda_rr,
    generate_candidates,
    reannotate,
    score_candidate,
    select,
    write_provenance,
)
from .clustering import (
    ClusterDictionary,
    ClusterModel,
    ClusterSpec,
    align,
    assign,
    build_cluster_dictionaries,
    kmeans_cosine,
    load_cluster_artifacts,
    save_cluster_artifacts,
)
from .corpus import (
    Corpus,
    CorpusFormatError,
    EntityMention,
    TaggedSentence,
    build_type_inventories,
    corpus_stats,
    extract_mentions,
    io_to_bio,
    map_missing_annotations,
    overlap_analysis,
    parse_corpus,
    serialize_corpus,
)
from .embeddings import (
    EmbeddingTable,
    EntityVector,
    TitleList,
    cosine,
    default_titles,
    entity_feature_vector,
    load_embeddings,
    load_titles,
)
from .evaluation import EvalReport, entity_prf, token_accuracy
from .scorer import ExternalScorer, ExternalScorerConfig, gazetteer_tagger

__all__ = [
    "AllCorrect",
    "AugCandidate",
    "AugConfig",
    "ClusterDictionary",
    "ClusterModel",
    "ClusterSpec",
    "Corpus",
    "CorpusFormatError",
    "EmbeddingTable",
    "EntityMention",
    "EntityVector",
    "EvalReport",
    "ExternalScorer",
    "ExternalScorerConfig",
    "ProvenanceRecord",
    "Replacement",
    "StaticSimilarityProvider",
    "TaggedSentence",
    "TitleList",
    "TopK",
    "align",
    "assign",
    "augment_corpus",
    "build_cluster_dictionaries",
    "build_type_inventories",
    "corpus_stats",
    "cosine",
    "default_titles",
    "eda_rr",
    "entity_feature_vector",
    "entity_prf",
    "extract_mentions",
    "gazetteer_tagger",
    "generate_candidates",
    "io_to_bio",
    "kmeans_cosine",
    "load_cluster_artifacts",
    "load_embeddings",
    "load_titles",
    "map_missing_annotations",
    "overlap_analysis",
    "parse_corpus",
    "reannotate",
    "save_cluster_artifacts",
    "score_candidate",
    "select",
    "serialize_corpus",
    "token_accuracy",
    "write_provenance",
]
