#!/usr/bin/env python3
"""Writes the small demo embedding table used by the example pipeline.

Every word gets a pseudo-random Gaussian vector seeded from its text, so the
output is stable across runs and machines. Words listed in one synonym group
share a base vector plus a small perturbation, which keeps them close in
cosine terms.

    python3 tools/make_demo_embeddings.py data/lexicon.tsv data/embeddings.txt
"""

import argparse
import hashlib
import random

DIM = 32

SYNONYMS = [
    ["heart", "cardiac"],
    ["lung", "lungs"],
    ["lobe", "lobes"],
    ["vessel", "vessels", "vascular"],
    ["hilum", "hilar"],
    ["mediastinum", "mediastinal"],
    ["airways", "airway", "trachea"],
    ["aorta", "aortic"],
    ["bones", "osseous"],
    ["spine", "vertebra", "vertebrae", "vertebral"],
    ["rib", "ribs"],
    ["diaphragm", "hemidiaphragm"],
    ["upper", "superior", "apical"],
    ["lower", "inferior", "basilar"],
    ["opacity", "opacities", "infiltrate", "consolidation"],
    ["fracture", "fractures"],
    ["nodule", "nodules", "mass"],
    ["enlarged", "enlargement", "cardiomegaly"],
    ["calcification", "calcified", "granuloma"],
    ["tortuous", "tortuosity"],
    ["elevation", "elevated"],
]

EXTRA_WORDS = ["no", "the", "of", "in", "is", "and", "there", "with", "seen", "normal", "size", "unremarkable"]


def rng_for(word):
    seed = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
    return random.Random(seed)


def gaussian(word, scale=1.0):
    r = rng_for(word)
    return [scale * r.gauss(0.0, 1.0) for _ in range(DIM)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lexicon")
    ap.add_argument("out")
    args = ap.parse_args()

    words = []
    with open(args.lexicon, encoding="utf-8") as f:
        for line in f:
            surface = line.rstrip("\n").split("\t")[0]
            for w in surface.split():
                if w and w not in words:
                    words.append(w)
    for w in EXTRA_WORDS:
        if w not in words:
            words.append(w)

    group_of = {}
    for group in SYNONYMS:
        for w in group:
            group_of[w] = group[0]

    rows = []
    for w in sorted(words):
        if w in group_of:
            base = gaussian("group:" + group_of[w])
            noise = gaussian(w, 0.25)
            vec = [b + n for b, n in zip(base, noise)]
        else:
            vec = gaussian(w)
        rows.append(w + " " + " ".join(f"{x:.6f}" for x in vec))

    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(rows)} {DIM}\n")
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
