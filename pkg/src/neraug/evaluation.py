"""Entity-level precision/recall/F1 against gold annotations.

A predicted mention counts as correct only when its sentence index, start,
length, and type all match a gold mention exactly. Micro scores pool the
TP/FP/FN counts over all types. Degenerate ratios use the 0/0 -> 0
convention, which the report states explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .corpus import ENTITY_TYPES, Corpus, extract_mentions

MATCHING = "entity-level exact span+type"
ZERO_CONVENTION = "0/0 -> 0"


@dataclass(frozen=True)
class TypeScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class EvalReport:
    per_type: Mapping[str, TypeScore]
    micro: TypeScore

    def to_dict(self) -> dict:
        def row(s: TypeScore) -> dict:
            return {
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
                "precision": s.precision,
                "recall": s.recall,
                "f1": s.f1,
            }

        return {
            "matching": MATCHING,
            "zero_convention": ZERO_CONVENTION,
            "per_type": {etype: row(s) for etype, s in self.per_type.items()},
            "micro": row(self.micro),
        }

    def to_text(self) -> str:
        lines = [
            f"matching: {MATCHING}",
            f"degenerate ratios: {ZERO_CONVENTION}",
            f"{'type':<6} {'TP':>6} {'FP':>6} {'FN':>6} {'P':>8} {'R':>8} {'F1':>8}",
        ]
        rows = [(etype, self.per_type[etype]) for etype in ENTITY_TYPES]
        rows.append(("micro", self.micro))
        for name, s in rows:
            lines.append(
                f"{name:<6} {s.tp:>6} {s.fp:>6} {s.fn:>6} "
                f"{s.precision:>8.4f} {s.recall:>8.4f} {s.f1:>8.4f}"
            )
        return "\n".join(lines) + "\n"


def _check_shapes(gold: Corpus, pred: Corpus) -> None:
    if len(gold.sentences) != len(pred.sentences):
        raise ValueError(
            f"sentence count mismatch: gold {len(gold.sentences)}, pred {len(pred.sentences)}"
        )
    for i, (g, p) in enumerate(zip(gold.sentences, pred.sentences)):
        if len(g.tokens) != len(p.tokens):
            raise ValueError(
                f"sentence {i}: token count mismatch: gold {len(g.tokens)}, pred {len(p.tokens)}"
            )


def entity_prf(gold: Corpus, pred: Corpus) -> EvalReport:
    """Score pred against gold; mentions match on (sentence, start, length, type)."""
    _check_shapes(gold, pred)
    gold_spans = {
        (m.sentence_index, m.start, m.length, m.etype) for m in extract_mentions(gold)
    }
    pred_spans = {
        (m.sentence_index, m.start, m.length, m.etype) for m in extract_mentions(pred)
    }

    per_type: dict[str, TypeScore] = {}
    for etype in ENTITY_TYPES:
        g = {s for s in gold_spans if s[3] == etype}
        p = {s for s in pred_spans if s[3] == etype}
        per_type[etype] = TypeScore(tp=len(g & p), fp=len(p - g), fn=len(g - p))

    micro = TypeScore(
        tp=sum(s.tp for s in per_type.values()),
        fp=sum(s.fp for s in per_type.values()),
        fn=sum(s.fn for s in per_type.values()),
    )
    return EvalReport(per_type=per_type, micro=micro)


def token_accuracy(gold: Corpus, pred: Corpus) -> float:
    """Fraction of token positions with identical labels; 1.0 for empty corpora."""
    _check_shapes(gold, pred)
    total = 0
    same = 0
    for g, p in zip(gold.sentences, pred.sentences):
        total += len(g.labels)
        same += sum(1 for a, b in zip(g.labels, p.labels) if a == b)
    return same / total if total else 1.0
