#!/usr/bin/env python3
"""Offline fine-tuning of a per-language style classifier.

Reads a JSONL style corpus ({"text", "style"} fields used), fits the
classifier, and writes an npz checkpoint the server loads at startup.
Default schedule mirrors the published recipe shape (200 steps, batch 16,
lr 2e-5, 8:2 train/test split); desk-scale hashed-feature heads need a far
larger learning rate to move, so pass --learning-rate accordingly.
"""

import argparse
import hashlib
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from babel_model_server.models import StyleClassifier, read_style_corpus  # noqa: E402


def split_8_2(texts, labels, seed: int):
    def key(i):
        digest = hashlib.blake2b(
            texts[i].encode(), digest_size=8, key=f"{seed}:split".encode()
        ).digest()
        return int.from_bytes(digest, "big")

    order = sorted(range(len(texts)), key=key)
    cut = round(0.8 * len(texts))
    train = order[:cut]
    test = order[cut:]
    return train, test


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--labels", default="formal,casual")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--out", required=True, help="npz checkpoint path")
    args = parser.parse_args()

    texts, labels = read_style_corpus(Path(args.corpus))
    train_idx, test_idx = split_8_2(texts, labels, args.seed)
    classifier = StyleClassifier(tuple(args.labels.split(",")), args.seed)
    classifier.fit(
        [texts[i] for i in train_idx],
        [labels[i] for i in train_idx],
        steps=args.steps,
        lr=args.learning_rate,
    )
    hits = sum(
        1
        for i in test_idx
        if max(classifier.predict(texts[i]), key=classifier.predict(texts[i]).get) == labels[i]
    )
    total = len(test_idx) or 1
    classifier.save(Path(args.out))
    print(f"fitted on {len(train_idx)} texts; held-out accuracy {hits}/{total}")
    print(f"checkpoint written to {args.out}")


if __name__ == "__main__":
    main()
