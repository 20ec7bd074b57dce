"""Sweep the candidate-selection modes on toy data.

Reports how many sentences each mode keeps and their mean plausibility;
the all-correct column shows how much the validator actually filters.

    python3 scripts/compare_selection.py --data data/toy
"""

import argparse
import os
from statistics import mean

from neraug import (
    AllCorrect,
    AugConfig,
    ClusterSpec,
    StaticSimilarityProvider,
    TopK,
    augment_corpus,
    build_cluster_dictionaries,
    default_titles,
    gazetteer_tagger,
    load_embeddings,
    parse_corpus,
)

MODES = [("top1", TopK(1)), ("top2", TopK(2)), ("topK=5", TopK(5)),
         ("all-correct", AllCorrect())]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="directory from make_toy_data.py")
    ap.add_argument("--seed", type=int, default=20240915)
    ap.add_argument("--candidates", type=int, default=5)
    args = ap.parse_args()

    with open(os.path.join(args.data, "train.bio"), encoding="utf-8") as fp:
        train = parse_corpus(fp.read())
    with open(os.path.join(args.data, "vectors.txt"), encoding="utf-8") as fp:
        table = load_embeddings(fp)
    titles = default_titles()

    models, dictionary = build_cluster_dictionaries(
        train, table, titles, ClusterSpec(seed=args.seed)
    )
    provider = StaticSimilarityProvider(table, titles)
    scorer = gazetteer_tagger(train)

    print(f"{'mode':<12} {'kept':>6} {'per input':>10} {'mean plaus':>11}")
    for name, selection in MODES:
        cfg = AugConfig(
            candidates_per_sentence=args.candidates, selection=selection, seed=args.seed
        )
        augmented, records = augment_corpus(
            train, models, dictionary, table, titles, provider, scorer, cfg
        )
        plaus = mean(r.plausibility for r in records) if records else 0.0
        print(f"{name:<12} {len(augmented):>6} {len(augmented) / len(train):>10.2f} "
              f"{plaus:>11.3f}")


if __name__ == "__main__":
    main()
