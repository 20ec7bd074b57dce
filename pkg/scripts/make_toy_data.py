"""Generate a synthetic BIO corpus plus a matching vector file.

The data is small but structured: each entity type owns two angular
sub-fans in embedding space, so the default k=2 clustering finds real
groups and the augmentation demo has sensible pools to draw from.

    python3 scripts/make_toy_data.py --out data/toy
"""

import argparse
import math
import os

import numpy as np

PER = [
    "Ayesha", "Bilal", "Fatima", "Hamza", "Imran", "Khadija",
    "Nadia", "Omar", "Rashid", "Sana", "Tariq", "Zainab",
]
LOC = [
    "Lahore", "Karachi", "Islamabad", "Peshawar", "Quetta", "Multan",
    "Faisalabad", "Hyderabad", "Sialkot", "Gujranwala",
]
ORG = [
    "State Bank", "Punjab University", "National Assembly", "Supreme Court",
    "Pakistan Railways", "Capital Police", "Election Commission", "Press Club",
]

TEMPLATES = [
    ("{P} visited {L} yesterday", "B-PER O B-LOC O"),
    ("{P} met reporters in {L}", "B-PER O O O B-LOC"),
    ("the {O2} appointed {P}", "O B-ORG I-ORG O B-PER"),
    ("{P} criticised the {O2} decision", "B-PER O O B-ORG I-ORG O"),
    ("officials from {L} praised {P}", "O O B-LOC O B-PER"),
    ("the {O2} opened an office in {L}", "O B-ORG I-ORG O O O O B-LOC"),
]


def fan_vectors(words, dim, base_axis, alt_axis, rng):
    """Two sub-fans: first half hugs base_axis, second half alt_axis."""
    out = {}
    half = (len(words) + 1) // 2
    for i, word in enumerate(words):
        axis = base_axis if i < half else alt_axis
        noise = rng.normal(size=dim)
        noise -= noise.dot(axis) * axis
        noise /= np.linalg.norm(noise)
        theta = math.radians(rng.uniform(2.0, 20.0))
        out[word] = math.cos(theta) * axis + math.sin(theta) * noise
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--sentences", type=int, default=300)
    ap.add_argument("--test-fraction", type=float, default=0.2)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--seed", type=int, default=13)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)

    # six well-separated axes: one pair per entity type
    axes = np.zeros((6, args.dim))
    for i in range(6):
        axes[i, i] = 1.0
    vectors = {}
    vectors.update(fan_vectors(PER, args.dim, axes[0], axes[1], rng))
    loc_tokens = LOC
    vectors.update(fan_vectors(loc_tokens, args.dim, axes[2], axes[3], rng))
    org_tokens = sorted({tok for surface in ORG for tok in surface.split()})
    vectors.update(fan_vectors(org_tokens, args.dim, axes[4], axes[5], rng))

    lines = []
    for _ in range(args.sentences):
        text, labels = TEMPLATES[int(rng.integers(len(TEMPLATES)))]
        text = text.format(
            P=PER[int(rng.integers(len(PER)))],
            L=LOC[int(rng.integers(len(LOC)))],
            O2=ORG[int(rng.integers(len(ORG)))],
        )
        for tok, lab in zip(text.split(), labels.split()):
            lines.append(f"{tok}\t{lab}")
        lines.append("")
    body = "\n".join(lines) + "\n"

    sentences = body.split("\n\n")
    cut = int(len(sentences) * (1 - args.test_fraction))
    with open(os.path.join(args.out, "train.bio"), "w", encoding="utf-8") as fp:
        fp.write("\n\n".join(sentences[:cut]).rstrip("\n") + "\n\n")
    with open(os.path.join(args.out, "test.bio"), "w", encoding="utf-8") as fp:
        fp.write("\n\n".join(sentences[cut:]).rstrip("\n") + "\n\n")

    with open(os.path.join(args.out, "vectors.txt"), "w", encoding="utf-8") as fp:
        fp.write(f"{len(vectors)} {args.dim}\n")
        for word in sorted(vectors):
            comps = " ".join(f"{v:.6f}" for v in vectors[word])
            fp.write(f"{word} {comps}\n")

    print(f"wrote {cut} train / {len(sentences) - cut} test sentences and "
          f"{len(vectors)} vectors to {args.out}")


if __name__ == "__main__":
    main()
