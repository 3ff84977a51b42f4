#!/usr/bin/env python3
"""Offline training of the server's denoiser; writes an npz checkpoint."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from babel_model_server.config import DenoiserSpec, ServerConfig  # noqa: E402
from babel_model_server.models import (  # noqa: E402
    AffineDenoiser,
    CharTokenizer,
    Paraphraser,
    TokenEmbedder,
    read_style_corpus,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--embedding-dim", type=int, default=64)
    parser.add_argument("--total-steps", type=int, default=8)
    parser.add_argument("--steps", type=int, default=400)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=2.5)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    config = ServerConfig(seed=args.seed, embedding_dim=args.embedding_dim)
    tokenizer = CharTokenizer(config.alphabet)
    embedder = TokenEmbedder(tokenizer.vocab_size, config.embedding_dim, config.seed)
    texts, _ = read_style_corpus(Path(args.corpus))
    denoiser = AffineDenoiser(tokenizer.vocab_size, config.embedding_dim, config.seed)
    spec = DenoiserSpec(
        total_steps=args.total_steps,
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    denoiser.train(texts, tokenizer, embedder, Paraphraser(), spec)
    denoiser.save(Path(args.out))
    print(f"trained {args.steps} steps; checkpoint written to {args.out}")


if __name__ == "__main__":
    main()
