"""End-to-end demo on toy data: cluster, augment, and compare with the baseline.

    python3 scripts/make_toy_data.py --out data/toy
    python3 scripts/run_pipeline.py --data data/toy --out data/toy/run

Prints corpus stats before/after, train/test surface overlap, and a few
augmented sentences next to their originals.
"""

import argparse
import os

from neraug import (
    AugConfig,
    ClusterSpec,
    StaticSimilarityProvider,
    TopK,
    augment_corpus,
    build_cluster_dictionaries,
    build_type_inventories,
    corpus_stats,
    eda_rr,
    gazetteer_tagger,
    load_embeddings,
    default_titles,
    overlap_analysis,
    parse_corpus,
    serialize_corpus,
    write_provenance,
)


def read_corpus(path):
    with open(path, encoding="utf-8") as fp:
        return parse_corpus(fp.read())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="directory from make_toy_data.py")
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=20240915)
    ap.add_argument("--k-per", type=int, default=2)
    ap.add_argument("--k-loc", type=int, default=2)
    ap.add_argument("--k-org", type=int, default=2)
    ap.add_argument("--iterations", type=int, default=1)
    args = ap.parse_args()

    train = read_corpus(os.path.join(args.data, "train.bio"))
    test = read_corpus(os.path.join(args.data, "test.bio"))
    with open(os.path.join(args.data, "vectors.txt"), encoding="utf-8") as fp:
        table = load_embeddings(fp)
    titles = default_titles()

    print("== train stats ==")
    print(corpus_stats(train).to_text())
    print("== train/test surface overlap ==")
    print(overlap_analysis(train, test).to_text())

    spec = ClusterSpec(
        k={"PER": args.k_per, "LOC": args.k_loc, "ORG": args.k_org}, seed=args.seed
    )
    models, dictionary = build_cluster_dictionaries(train, table, titles, spec)
    for etype, model in sorted(models.items()):
        sizes = sorted(
            (sum(1 for c in model.members.values() if c == cid) for cid in range(model.k)),
            reverse=True,
        )
        print(f"{etype}: k={model.k} cluster sizes {sizes} objective {model.objective:.4f}")

    cfg = AugConfig(selection=TopK(1), iterations=args.iterations, seed=args.seed)
    augmented, records = augment_corpus(
        train, models, dictionary, table, titles,
        StaticSimilarityProvider(table, titles), gazetteer_tagger(train), cfg,
    )
    baseline, _ = eda_rr(train, build_type_inventories(train), seed=args.seed)

    print(f"\ncluster method kept {len(augmented)} sentences "
          f"(mean plausibility {sum(r.plausibility for r in records) / len(records):.3f})")
    print(f"eda-rr baseline kept {len(baseline)} sentences")

    print("\n== samples (original -> cluster method) ==")
    for rec in records[:5]:
        original = train.sentences[rec.origin_index]
        new = augmented.sentences[records.index(rec)]
        print("  " + " ".join(original.tokens))
        print("  -> " + " ".join(new.tokens))

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "augmented.bio"), "w", encoding="utf-8") as fp:
        fp.write(serialize_corpus(augmented))
    with open(os.path.join(args.out, "combined.bio"), "w", encoding="utf-8") as fp:
        fp.write(serialize_corpus(train) + serialize_corpus(augmented))
    with open(os.path.join(args.out, "eda_rr.bio"), "w", encoding="utf-8") as fp:
        fp.write(serialize_corpus(baseline))
    with open(os.path.join(args.out, "provenance.jsonl"), "w", encoding="utf-8") as fp:
        write_provenance(fp, records)
    print(f"\nwrote augmented corpora and provenance to {args.out}")


if __name__ == "__main__":
    main()
