"""Shared fixtures: a small synthetic bilingual world and a trained toy
backend, built once per session."""

from __future__ import annotations

import pytest

from babelkit.applicator import train_denoiser
from babelkit.backends.reference import make_reference_backend
from babelkit.configs import TrainingConfig
from babelkit.harness.corpus import split_records
from babelkit.harness.synthetic import make_synthetic_world

TOY_SEED = 11
TOY_TOTAL_STEPS = 8
TOY_TRAINING = dict(steps=600, batch_size=16, learning_rate=2.5)


@pytest.fixture(scope="session")
def world():
    return make_synthetic_world(records_per_style_per_domain=24, seed=0)


@pytest.fixture(scope="session")
def splits(world):
    train_src, test_src = split_records(world.source_records, seed=0)
    train_tgt, test_tgt = split_records(world.target_records, seed=0)
    return {"train_src": train_src, "test_src": test_src, "train_tgt": train_tgt, "test_tgt": test_tgt}


@pytest.fixture(scope="session")
def trained_backend(world, splits):
    backend = make_reference_backend(seed=TOY_SEED)
    for lang, records in (("en", splits["train_src"]), ("xx", splits["train_tgt"])):
        backend.fit_style_classifier(lang, [r.text for r in records], [r.style for r in records])
    train_denoiser(
        [r.text for r in splits["train_tgt"]],
        backend,
        TrainingConfig(total_steps=TOY_TOTAL_STEPS, seed=TOY_SEED, **TOY_TRAINING),
    )
    return backend


@pytest.fixture(scope="session")
def backends(trained_backend):
    return {"en": trained_backend, "xx": trained_backend}
