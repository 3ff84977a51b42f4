"""Save/load a trained reference backend (config JSON + npz parameter files)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .reference import NgramLogisticClassifier, ReferenceBackend

__all__ = ["save_reference_backend", "load_reference_backend"]


def save_reference_backend(backend: ReferenceBackend, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    desc = backend.descriptor()
    meta = {
        "seed": backend.seed,
        "embedding_dim": desc.embedding_dim,
        "alphabet": backend.alphabet,
        "style_labels": list(desc.style_labels),
        "languages": list(desc.languages),
        "max_sequence_len": desc.max_sequence_len,
        "extra_paraphrase_rules": [
            list(rule) for rule in backend._paraphrase_rules if list(rule) not in _base_rules()
        ],
        "denoiser_time_scale": backend.denoiser.time_scale,
        "fitted_languages": sorted(backend._classifiers),
    }
    (directory / "backend.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    if backend.denoiser.trained:
        np.savez(
            directory / "denoiser.npz",
            weights=backend.denoiser.weights,
            bias=backend.denoiser.bias,
        )
    for language, clf in backend._classifiers.items():
        if clf.weights is None:
            continue
        np.savez(directory / f"classifier_{language}.npz", weights=clf.weights, bias=clf.bias)
    return directory


def _base_rules() -> list[list[str]]:
    from .reference import PARAPHRASE_RULES

    return [list(rule) for rule in PARAPHRASE_RULES]


def load_reference_backend(directory: str | Path) -> ReferenceBackend:
    directory = Path(directory)
    meta_path = directory / "backend.json"
    if not meta_path.exists():
        raise ValidationError(f"no backend.json under {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    backend = ReferenceBackend(
        seed=meta["seed"],
        embedding_dim=meta["embedding_dim"],
        alphabet=meta["alphabet"],
        style_labels=tuple(meta["style_labels"]),
        languages=tuple(meta["languages"]),
        max_sequence_len=meta["max_sequence_len"],
        extra_paraphrase_rules=tuple(tuple(r) for r in meta["extra_paraphrase_rules"]),
    )
    denoiser_path = directory / "denoiser.npz"
    if denoiser_path.exists():
        data = np.load(denoiser_path)
        backend.denoiser.weights = data["weights"]
        backend.denoiser.bias = data["bias"]
        backend.denoiser.time_scale = meta["denoiser_time_scale"]
    for language in meta["fitted_languages"]:
        data = np.load(directory / f"classifier_{language}.npz")
        clf = NgramLogisticClassifier(
            tuple(meta["style_labels"]),
            _classifier_seed(meta["seed"], language),
        )
        clf.weights = data["weights"]
        clf.bias = data["bias"]
        backend._classifiers[language] = clf
    return backend


def _classifier_seed(seed: int, language: str) -> int:
    from .reference import derive_seed_for_language

    return derive_seed_for_language(seed, language)
