"""Server configuration: JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    " .,;:!?'\"()-"
)


class ConfigurationError(Exception):
    pass


@dataclass
class ClassifierSpec:
    """Either a checkpoint to load or a corpus to fit at startup."""

    checkpoint: str | None = None
    corpus: str | None = None
    steps: int = 200
    batch_size: int = 16
    learning_rate: float = 2e-5

    def validate(self, language: str) -> None:
        if not self.checkpoint and not self.corpus:
            raise ConfigurationError(
                f"classifier for {language!r} needs a checkpoint or a corpus"
            )


@dataclass
class DenoiserSpec:
    checkpoint: str | None = None
    corpus: str | None = None
    total_steps: int = 8
    steps: int = 400
    batch_size: int = 16
    learning_rate: float = 2.5
    seed: int = 7


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8900
    seed: int = 7
    embedding_dim: int = 64
    alphabet: str = DEFAULT_ALPHABET
    style_labels: tuple[str, ...] = ("formal", "casual")
    languages: tuple[str, ...] = ("en",)
    max_sequence_len: int = 512
    classifiers: dict[str, ClassifierSpec] = field(default_factory=dict)
    denoiser: DenoiserSpec | None = None
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        if self.embedding_dim < 2:
            raise ConfigurationError("embedding_dim must be >= 2")
        if len(self.style_labels) < 2:
            raise ConfigurationError("need at least 2 style labels")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ConfigurationError("alphabet has duplicate characters")
        for language, spec in self.classifiers.items():
            spec.validate(language)

    def resolve(self, path: str) -> Path:
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.base_dir / candidate


def load_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"config {path}: invalid JSON ({err.msg})") from None

    classifiers = {
        language: ClassifierSpec(**spec)
        for language, spec in raw.get("classifiers", {}).items()
    }
    denoiser = DenoiserSpec(**raw["denoiser"]) if "denoiser" in raw else None
    config = ServerConfig(
        host=os.environ.get("BABEL_SERVER_HOST", raw.get("host", "127.0.0.1")),
        port=int(os.environ.get("BABEL_SERVER_PORT", raw.get("port", 8900))),
        seed=int(raw.get("seed", 7)),
        embedding_dim=int(raw.get("embedding_dim", 64)),
        alphabet=raw.get("alphabet", DEFAULT_ALPHABET),
        style_labels=tuple(raw.get("style_labels", ("formal", "casual"))),
        languages=tuple(raw.get("languages", ("en",))),
        max_sequence_len=int(raw.get("max_sequence_len", 512)),
        classifiers=classifiers,
        denoiser=denoiser,
        base_dir=path.parent,
    )
    return config
