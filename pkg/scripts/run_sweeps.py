#!/usr/bin/env python3
"""Hyperparameter sweeps on the synthetic world.

Sweeps the detection threshold h (precision/FPR against the translator's
gold strip decisions) and the sampler's temperature and guidance strength
(remaining issues, style score, similarity), writing one JSON per sweep.
"""

import argparse
import time
from pathlib import Path

from babelkit.applicator import train_denoiser
from babelkit.backends.reference import make_reference_backend
from babelkit.configs import DetectionConfig, DiffusionConfig, RepairConfig, TrainingConfig
from babelkit.harness.corpus import split_records
from babelkit.harness.evaluate import sweep_parameter
from babelkit.harness.synthetic import make_synthetic_world
from babelkit.harness.translate import MockTranslator

import json

SWEEPS = {
    "h": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
    "tau": [0.1, 0.2, 0.3, 0.5, 0.7, 0.9],
    "lambda": [1e2, 3e2, 1e3, 3e3, 1e4, 1e5],
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records-per-cell", type=int, default=30)
    parser.add_argument("--eval-records", type=int, default=40, help="records per tau/lambda point")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--T", type=int, default=8)
    parser.add_argument("--train-steps", type=int, default=600)
    parser.add_argument("--out-dir", default="results/sweeps")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    world = make_synthetic_world(records_per_style_per_domain=args.records_per_cell, seed=args.seed)
    train_src, test_src = split_records(world.source_records, seed=args.seed)
    train_tgt, _ = split_records(world.target_records, seed=args.seed)
    backend = make_reference_backend(seed=11)
    for lang, records in (("en", train_src), ("xx", train_tgt)):
        backend.fit_style_classifier(lang, [r.text for r in records], [r.style for r in records])
    train_denoiser(
        [r.text for r in train_tgt],
        backend,
        TrainingConfig(steps=args.train_steps, batch_size=16, learning_rate=2.5,
                       total_steps=args.T, seed=11),
    )
    backends = {"en": backend, "xx": backend}
    client = MockTranslator(world.word_map, strip_mode="hash", strip_rules=world.strip_rules)
    config = RepairConfig(
        candidate_count=4,
        sts_threshold=0.85,
        diffusion=DiffusionConfig(total_steps=args.T, temperature=0.3,
                                  guidance_strength=400.0, top_p=0.9, rng_seed=args.seed),
        detection=DetectionConfig(threshold=0.5),
    )

    for name, grid in SWEEPS.items():
        records = test_src if name == "h" else test_src[: args.eval_records]
        gold = [client.did_strip(r.text) for r in records] if name == "h" else None
        start = time.perf_counter()
        result = sweep_parameter(
            name, grid, records, client, world.profile, config, backends, "xx",
            seed=args.seed, gold=gold,
        )
        path = out_dir / f"sweep_{name}.json"
        path.write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"sweep {name}: {len(grid)} points in {time.perf_counter() - start:.1f}s -> {path}")
        for row in result.rows:
            print(f"    {row}")


if __name__ == "__main__":
    main()
