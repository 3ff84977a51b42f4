"""Backend abstraction over every learned component.

A backend bundles tokenizer, token embedder, style embedder, per-language
style classifiers, paraphraser, and denoiser behind one interface so the
detection and repair pipelines run unmodified against the built-in
deterministic reference backend or a remote model server.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import CapabilityError, ValidationError

CAPABILITIES = ("tokenize", "embed", "style_embed", "classify", "paraphrase", "denoise")


def stable_hash(text: str, seed: int, tag: str) -> int:
    """Keyed 64-bit hash, stable across runs and platforms."""
    key = f"{seed}:{tag}".encode()[:64]
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big")


def derive_seed(master: int, *stream: int) -> int:
    """Child seed for an independent stream, by fixed offset from ``master``."""
    return int(np.random.SeedSequence([int(master), *map(int, stream)]).generate_state(1)[0])


@dataclass(frozen=True)
class TokenSequence:
    """Token ids plus the vocab size they were drawn from."""

    ids: tuple[int, ...]
    vocab_size: int

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ValidationError(f"vocab_size must be >= 1, got {self.vocab_size}")
        for i in self.ids:
            if not 0 <= i < self.vocab_size:
                raise ValidationError(f"token id {i} outside [0, {self.vocab_size})")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


@dataclass(frozen=True)
class StyleDistribution:
    """Probability per style label; fixed label set, sums to 1 within 1e-6."""

    labels: tuple[str, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.probabilities):
            raise ValidationError("labels and probabilities differ in length")
        if any(p < 0 for p in self.probabilities):
            raise ValidationError("negative probability in style distribution")
        total = sum(self.probabilities)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"style distribution sums to {total}, expected 1")

    def probability(self, label: str) -> float:
        try:
            return self.probabilities[self.labels.index(label)]
        except ValueError:
            raise CapabilityError(f"label {label!r} not among {self.labels}") from None

    def argmax(self, label_order: tuple[str, ...] | None = None) -> str:
        """Most probable label; exact ties broken by ``label_order`` (or the
        distribution's own label order)."""
        order = label_order or self.labels
        best, best_p = None, -1.0
        for label in order:
            p = self.probability(label)
            if p > best_p:
                best, best_p = label, p
        assert best is not None
        return best

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.probabilities))


@dataclass(frozen=True)
class BackendDescriptor:
    """Capabilities declared by a backend at construction/handshake time."""

    kind: str  # "reference" or "remote"
    embedding_dim: int
    vocab_size: int
    style_labels: tuple[str, ...]
    languages: tuple[str, ...]
    max_sequence_len: int
    endpoint: str | None = None

    def __post_init__(self) -> None:
        if self.embedding_dim < 2:
            raise ValidationError(f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if self.vocab_size < 2:
            raise ValidationError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if len(self.style_labels) < 2:
            raise ValidationError("need at least 2 style labels")


class Backend(ABC):
    """Interface every model backend implements.

    All operations are pure functions of (inputs, backend state, declared
    seed); training mutates the handle and needs exclusive access, after
    which concurrent read-only inference is safe.
    """

    @abstractmethod
    def descriptor(self) -> BackendDescriptor: ...

    @property
    def capabilities(self) -> frozenset[str]:
        return frozenset(CAPABILITIES)

    def _require_capability(self, name: str) -> None:
        if name not in self.capabilities:
            raise CapabilityError(f"backend does not support {name!r}")

    @abstractmethod
    def tokenize(self, text: str) -> TokenSequence: ...

    @abstractmethod
    def detokenize(self, tokens: TokenSequence) -> str: ...

    @abstractmethod
    def embed_tokens(self, tokens: TokenSequence) -> np.ndarray:
        """One row per token, ``embedding_dim`` columns."""

    @abstractmethod
    def embedding_table(self) -> np.ndarray:
        """Full (vocab_size, embedding_dim) token embedding table."""

    @abstractmethod
    def style_embed(self, text: str) -> np.ndarray:
        """Unit-norm style vector of a text (embedding_dim entries)."""

    @abstractmethod
    def classify_style(self, text: str, language: str) -> StyleDistribution: ...

    @abstractmethod
    def paraphrase(self, text: str, seed: int = 0) -> str: ...

    @abstractmethod
    def denoise(self, x_t: np.ndarray, t: int, condition: TokenSequence) -> np.ndarray:
        """Logits (one row per x_t row, vocab_size columns)."""

    # Sentence-level semantic vector for STS. Mean-pooled token embeddings
    # by default (what a contextual server exposes); the reference backend
    # overrides this with its style-agnostic n-gram embedder.
    def sentence_embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValidationError("cannot embed an empty text")
        tokens = self.tokenize(text)
        if len(tokens) == 0:
            raise ValidationError("text tokenized to an empty sequence")
        return self.embed_tokens(tokens).mean(axis=0)

    # Differentiable bridge from pooled token-embedding space into the
    # style-embedding space, used by the guidance gradient. Built from
    # declared capabilities only: column v is the style embedding of the
    # single-token text v, composed with a least-squares inversion of the
    # token embedding table, so reference and remote backends share it.
    _style_head_cache: np.ndarray | None = None

    def style_head_matrix(self) -> np.ndarray:
        if self._style_head_cache is None:
            desc = self.descriptor()
            table = self.embedding_table()
            per_token = np.zeros((desc.embedding_dim, desc.vocab_size))
            for v in range(desc.vocab_size):
                text = self.detokenize(TokenSequence((v,), desc.vocab_size))
                if text:
                    per_token[:, v] = self.style_embed(text)
            inverse = np.linalg.pinv(table)  # (dim, vocab) -> recovers token frequencies
            self._style_head_cache = per_token @ inverse.T
        return self._style_head_cache

    def style_project(self, pooled_embedding: np.ndarray) -> np.ndarray:
        """Map a pooled token-embedding vector into style space."""
        vec = np.asarray(pooled_embedding, dtype=np.float64)
        if vec.ndim != 1:
            raise ValidationError(f"expected a vector, got shape {vec.shape}")
        return self.style_head_matrix() @ vec
