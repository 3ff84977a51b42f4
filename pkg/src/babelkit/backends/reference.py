"""Deterministic reference backend.

Character-level tokenizer, seeded-hash token embeddings, char-n-gram style
embedder and per-language logistic style classifiers, a rule-based
paraphraser, and a per-position affine denoiser. Every operation is a pure
function of (inputs, seed), trainable in milliseconds, so the full pipeline
runs offline and replays bit-for-bit.
"""

from __future__ import annotations

import math
import re

import numpy as np

from ..errors import (
    CapabilityError,
    NotReadyError,
    NumericError,
    ValidationError,
)
from .base import Backend, BackendDescriptor, StyleDistribution, TokenSequence, stable_hash

DEFAULT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    " .,;:!?'\"()-"
)

# Style-marker neutralisation table of the reference paraphraser, applied
# to the lowercased text, longest keys first. Together with lowercasing it
# simulates the style loss a translation round-trip inflicts.
PARAPHRASE_RULES: tuple[tuple[str, str], ...] = (
    ("pursuant to", "under"),
    ("aforementioned", "that"),
    ("notwithstanding", "despite"),
    ("forthwith", "at once"),
    ("hereinafter", "later"),
    ("thereof", "of it"),
    ("hereby", "now"),
    ("herein", "here"),
    ("shall", "will"),
    ("commence", "start"),
    ("terminate", "end"),
    ("endeavour", "try"),
    ("gonna", "going to"),
    ("wanna", "want to"),
    ("gotta", "have to"),
    ("kinda", "a bit"),
    ("dude", "friend"),
    ("yeah", "yes"),
    ("nope", "no"),
)

_TAG_TOKEN_EMB = 101
_TAG_NGRAM_STYLE = 202
_TAG_NGRAM_SEMANTIC = 203
_TAG_NGRAM_CLASSIFIER = 204
_TAG_DENOISER_INIT = 305
_TAG_CLASSIFIER_FIT = 306


def token_embedding_row(seed: int, token_id: int, dim: int) -> np.ndarray:
    """Documented seeded construction of one token embedding.

    Each token gets its own child stream, so any row can be recomputed
    independently of table layout or build order.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _TAG_TOKEN_EMB, int(token_id)]))
    return rng.standard_normal(dim) / math.sqrt(dim)


def _char_ngrams(text: str, n_min: int = 1, n_max: int = 3):
    for n in range(n_min, n_max + 1):
        for i in range(len(text) - n + 1):
            yield text[i : i + n]


def hashed_ngram_vector(
    text: str, dim: int, seed: int, tag: int, fold_case: bool = False
) -> np.ndarray:
    """Signed feature hashing of character 1..3-grams into ``dim`` buckets.

    Texts sharing no n-grams land on disjoint buckets (up to hash
    collisions) and are therefore orthogonal. L2-normalized.
    """
    if not text:
        raise ValidationError("cannot embed an empty text")
    if fold_case:
        text = text.casefold()
    vec = np.zeros(dim)
    for gram in _char_ngrams(text):
        h = stable_hash(gram, seed, f"ngram:{tag}")
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValidationError("n-gram features cancelled to a zero vector")
    return vec / norm


class NgramLogisticClassifier:
    """Multinomial logistic regression over hashed char n-grams."""

    def __init__(self, labels: tuple[str, ...], seed: int, feature_dim: int = 1024):
        if len(labels) < 2:
            raise ValidationError("need at least 2 labels")
        self.labels = tuple(labels)
        self.seed = int(seed)
        self.feature_dim = int(feature_dim)
        self.weights: np.ndarray | None = None
        self.bias: np.ndarray | None = None

    def _features(self, text: str) -> np.ndarray:
        return hashed_ngram_vector(text, self.feature_dim, self.seed, _TAG_NGRAM_CLASSIFIER)

    def fit(self, texts: list[str], labels: list[str], steps: int = 400, lr: float = 4.0) -> None:
        if not texts or len(texts) != len(labels):
            raise ValidationError("texts and labels must be non-empty and equal length")
        unknown = set(labels) - set(self.labels)
        if unknown:
            raise ValidationError(f"labels {sorted(unknown)} not in {self.labels}")
        x = np.stack([self._features(t) for t in texts])
        y = np.zeros((len(texts), len(self.labels)))
        for i, label in enumerate(labels):
            y[i, self.labels.index(label)] = 1.0
        w = np.zeros((len(self.labels), self.feature_dim))
        b = np.zeros(len(self.labels))
        n = len(texts)
        for _ in range(steps):
            logits = x @ w.T + b
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            grad = (p - y) / n
            w -= lr * (grad.T @ x + 1e-4 * w)
            b -= lr * grad.sum(axis=0)
        self.weights, self.bias = w, b

    def predict_proba(self, text: str) -> StyleDistribution:
        if self.weights is None or self.bias is None:
            raise NotReadyError("classifier has not been fitted")
        logits = self.weights @ self._features(text) + self.bias
        logits -= logits.max()
        p = np.exp(logits)
        p /= p.sum()
        return StyleDistribution(self.labels, tuple(float(v) for v in p))


class AffineDenoiser:
    """Per-position affine map from diffusion state to vocab logits.

    Features per position: [signal-gated x_t row | sinusoidal time features
    | position-aligned condition-token embedding (zeroed at t=0) | mean
    condition embedding]. The aligned condition block gives the map a
    per-position content path; without it every output position is an
    independent draw from a global marginal and generated text cannot stay
    close to the conditioning translation. Gating the x block by the
    schedule's signal level keeps noisy high-t states from polluting the
    embedding-inversion weights, and dropping the condition block at t=0
    makes the final readout a pure inversion of the last state; the map
    stays affine in the gated features.
    """

    TIME_DIM = 8

    def __init__(self, vocab_size: int, embedding_dim: int, seed: int):
        self.vocab_size = int(vocab_size)
        self.embedding_dim = int(embedding_dim)
        self.feature_dim = 3 * self.embedding_dim + self.TIME_DIM
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), _TAG_DENOISER_INIT]))
        self.weights = 0.01 * rng.standard_normal((self.vocab_size, self.feature_dim))
        self.bias = np.zeros(self.vocab_size)
        self.time_scale: int | None = None  # set when training starts

    @property
    def trained(self) -> bool:
        return self.time_scale is not None

    def time_features(self, t: int) -> np.ndarray:
        if self.time_scale is None:
            raise NotReadyError("denoiser has not been trained")
        phase = t / self.time_scale
        k = np.arange(self.TIME_DIM // 2)
        angles = math.pi * phase * (2.0**k)
        return np.concatenate([np.sin(angles), np.cos(angles)])

    def features(self, x_t: np.ndarray, t: int, condition_rows: np.ndarray) -> np.ndarray:
        if self.time_scale is None:
            raise NotReadyError("denoiser has not been trained")
        rows = x_t.shape[0]
        cond_len = condition_rows.shape[0]
        signal = math.sqrt((self.time_scale - min(t, self.time_scale)) / self.time_scale)
        condition_gate = 1.0 if t > 0 else 0.0
        aligned = np.zeros((rows, self.embedding_dim))
        take = min(rows, cond_len)
        aligned[:take] = condition_rows[:take]
        mean_cond = np.broadcast_to(condition_rows.mean(axis=0), (rows, self.embedding_dim))
        time = np.broadcast_to(self.time_features(t), (rows, self.TIME_DIM))
        return np.concatenate(
            [signal * x_t, time, condition_gate * aligned, mean_cond], axis=1
        )

    def logits(self, features: np.ndarray) -> np.ndarray:
        out = features @ self.weights.T + self.bias
        if not np.all(np.isfinite(out)):
            raise NumericError("denoiser produced non-finite logits")
        return out

    def loss_and_grad(self, batch: list[tuple[np.ndarray, np.ndarray]]):
        """Mean token-level cross-entropy over a batch of (features, target
        ids) pairs, with analytic parameter gradients."""
        total_positions = sum(f.shape[0] for f, _ in batch)
        grad_w = np.zeros_like(self.weights)
        grad_b = np.zeros_like(self.bias)
        loss = 0.0
        for features, targets in batch:
            logits = self.logits(features)
            logits -= logits.max(axis=1, keepdims=True)
            log_z = np.log(np.exp(logits).sum(axis=1))
            loss += float(np.sum(log_z - logits[np.arange(len(targets)), targets]))
            p = np.exp(logits - log_z[:, None])
            p[np.arange(len(targets)), targets] -= 1.0
            grad_w += p.T @ features
            grad_b += p.sum(axis=0)
        scale = 1.0 / total_positions
        return loss * scale, grad_w * scale, grad_b * scale

    def loss(self, batch: list[tuple[np.ndarray, np.ndarray]]) -> float:
        return self.loss_and_grad(batch)[0]

    def apply_update(self, grad_w: np.ndarray, grad_b: np.ndarray, lr: float) -> None:
        self.weights -= lr * grad_w
        self.bias -= lr * grad_b

    def get_params(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.bias])

    def set_params(self, flat: np.ndarray) -> None:
        w_size = self.weights.size
        self.weights = flat[:w_size].reshape(self.weights.shape).copy()
        self.bias = flat[w_size:].copy()


class ReferenceBackend(Backend):
    """Fully capable offline backend, deterministic given its seed."""

    def __init__(
        self,
        seed: int,
        embedding_dim: int = 80,
        alphabet: str = DEFAULT_ALPHABET,
        style_labels: tuple[str, ...] = ("formal", "casual"),
        languages: tuple[str, ...] = ("en", "xx"),
        max_sequence_len: int = 512,
        extra_paraphrase_rules: tuple[tuple[str, str], ...] = (),
    ):
        if embedding_dim < 2:
            raise ValidationError(f"embedding_dim must be >= 2, got {embedding_dim}")
        if len(style_labels) < 2:
            raise ValidationError("need at least 2 style labels")
        if len(set(alphabet)) != len(alphabet):
            raise ValidationError("alphabet contains duplicate characters")
        self.seed = int(seed)
        self.alphabet = alphabet
        self._char_to_id = {c: i for i, c in enumerate(alphabet)}
        self._descriptor = BackendDescriptor(
            kind="reference",
            embedding_dim=int(embedding_dim),
            vocab_size=len(alphabet),
            style_labels=tuple(style_labels),
            languages=tuple(languages),
            max_sequence_len=int(max_sequence_len),
        )
        self._table = np.stack(
            [token_embedding_row(self.seed, v, embedding_dim) for v in range(len(alphabet))]
        )
        self._classifiers: dict[str, NgramLogisticClassifier] = {}
        self._paraphrase_rules = PARAPHRASE_RULES + tuple(extra_paraphrase_rules)
        self.denoiser = AffineDenoiser(len(alphabet), embedding_dim, self.seed)

    # -- descriptor / capabilities -------------------------------------------------

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    @property
    def supports_denoiser_training(self) -> bool:
        return True

    # -- tokenizer -------------------------------------------------------------------

    def tokenize(self, text: str) -> TokenSequence:
        ids = []
        for ch in text:
            if ch not in self._char_to_id:
                raise ValidationError(f"character {ch!r} outside the backend alphabet")
            ids.append(self._char_to_id[ch])
        return TokenSequence(tuple(ids), self._descriptor.vocab_size)

    def detokenize(self, tokens: TokenSequence) -> str:
        if tokens.vocab_size != self._descriptor.vocab_size:
            raise ValidationError(
                f"token sequence vocab {tokens.vocab_size} != backend vocab "
                f"{self._descriptor.vocab_size}"
            )
        return "".join(self.alphabet[i] for i in tokens.ids)

    # -- embeddings ------------------------------------------------------------------

    def embedding_table(self) -> np.ndarray:
        return self._table

    def embed_tokens(self, tokens: TokenSequence) -> np.ndarray:
        if tokens.vocab_size != self._descriptor.vocab_size:
            raise ValidationError("token sequence from a different vocab")
        return self._table[list(tokens.ids)]

    def style_embed(self, text: str) -> np.ndarray:
        return hashed_ngram_vector(
            text, self._descriptor.embedding_dim, self.seed, _TAG_NGRAM_STYLE
        )

    def sentence_embed(self, text: str) -> np.ndarray:
        # Style-agnostic semantic vector: case-folded n-gram hashing, so
        # register changes (casing) do not move it.
        return hashed_ngram_vector(
            text, self._descriptor.embedding_dim, self.seed, _TAG_NGRAM_SEMANTIC, fold_case=True
        )

    # -- style classification ---------------------------------------------------------

    def fit_style_classifier(
        self, language: str, texts: list[str], labels: list[str], steps: int = 400, lr: float = 4.0
    ) -> None:
        if language not in self._descriptor.languages:
            raise CapabilityError(f"language {language!r} not declared by this backend")
        clf = NgramLogisticClassifier(
            self._descriptor.style_labels,
            derive_seed_for_language(self.seed, language),
        )
        clf.fit(texts, labels, steps=steps, lr=lr)
        self._classifiers[language] = clf

    def classify_style(self, text: str, language: str) -> StyleDistribution:
        if language not in self._descriptor.languages:
            raise CapabilityError(f"language {language!r} not declared by this backend")
        if language not in self._classifiers:
            raise NotReadyError(f"no classifier fitted for language {language!r}")
        if not text:
            raise ValidationError("cannot classify an empty text")
        return self._classifiers[language].predict_proba(text)

    # -- paraphrase --------------------------------------------------------------------

    def paraphrase(self, text: str, seed: int = 0) -> str:
        """Rule-based style neutralizer; deterministic in (text, seed).

        The seed is accepted for interface parity; the rule table has a
        single deterministic output per input.
        """
        if not text:
            raise ValidationError("cannot paraphrase an empty text")
        out = text.lower()
        for marker, plain in sorted(self._paraphrase_rules, key=lambda r: -len(r[0])):
            out = re.sub(rf"(?<![a-z]){re.escape(marker)}(?![a-z])", plain, out)
        return out

    # -- denoiser ----------------------------------------------------------------------

    def denoise(self, x_t: np.ndarray, t: int, condition: TokenSequence) -> np.ndarray:
        if not self.denoiser.trained:
            raise NotReadyError("reference denoiser has not been trained")
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.ndim != 2 or x_t.shape[1] != self._descriptor.embedding_dim:
            raise ValidationError(
                f"x_t must be (positions, {self._descriptor.embedding_dim}), got {x_t.shape}"
            )
        if len(condition) == 0:
            raise ValidationError("condition must be non-empty")
        if not 0 <= t <= self.denoiser.time_scale:
            raise ValidationError(f"step {t} outside [0, {self.denoiser.time_scale}]")
        cond_rows = self.embed_tokens(condition)
        return self.denoiser.logits(self.denoiser.features(x_t, t, cond_rows))

    def denoiser_batch(
        self, items: list[tuple[np.ndarray, int, TokenSequence, TokenSequence]]
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Convert (x_t, t, condition, target) items into (features, target
        id array) pairs for the trainer."""
        batch = []
        for x_t, t, condition, target in items:
            cond_rows = self.embed_tokens(condition)
            features = self.denoiser.features(np.asarray(x_t, dtype=np.float64), t, cond_rows)
            batch.append((features, np.array(target.ids, dtype=np.intp)))
        return batch

    def denoiser_train_step(
        self, items: list[tuple[np.ndarray, int, TokenSequence, TokenSequence]], lr: float
    ) -> float:
        batch = self.denoiser_batch(items)
        loss, grad_w, grad_b = self.denoiser.loss_and_grad(batch)
        self.denoiser.apply_update(grad_w, grad_b, lr)
        return loss


def derive_seed_for_language(seed: int, language: str) -> int:
    return stable_hash(language, seed, "classifier") % (2**32)


def make_reference_backend(
    seed: int,
    embedding_dim: int = 80,
    alphabet: str = DEFAULT_ALPHABET,
    style_labels: tuple[str, ...] = ("formal", "casual"),
    languages: tuple[str, ...] = ("en", "xx"),
    extra_paraphrase_rules: tuple[tuple[str, str], ...] = (),
) -> ReferenceBackend:
    """Construct the deterministic offline backend."""
    return ReferenceBackend(
        seed,
        embedding_dim=embedding_dim,
        alphabet=alphabet,
        style_labels=style_labels,
        languages=languages,
        extra_paraphrase_rules=extra_paraphrase_rules,
    )
