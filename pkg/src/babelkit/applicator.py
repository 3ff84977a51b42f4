"""Denoiser training and gradient-guided iterative refinement.

Training teaches the denoiser to recover a styled text from a noised
embedding of it, conditioned on a style-neutral paraphrase. Inference runs
the refinement loop from pure noise: denoise, steer the logits with the
style-guidance gradient, nucleus-sample, re-noise one step earlier, and
finish with a final clean pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends.base import Backend, TokenSequence, derive_seed
from .configs import DiffusionConfig, TrainingConfig
from .diffusion import forward_diffuse
from .errors import CapabilityError, NumericError, ValidationError

__all__ = [
    "GuidanceSet",
    "TrainingTrace",
    "train_denoiser",
    "guidance_value",
    "guidance_loss",
    "guidance_gradient",
    "relaxed_style_vector",
    "text_style_vector",
    "top_p_filter",
    "top_p_sample",
    "apply_style",
]


@dataclass(frozen=True)
class GuidanceSet:
    """User-supplied style exemplars with their unit-norm style embeddings."""

    sample_texts: tuple[str, ...]
    sample_embeddings: np.ndarray  # (n, style_dim), unit rows
    language: str

    def __post_init__(self) -> None:
        if len(self.sample_texts) < 1:
            raise ValidationError("guidance set needs at least one sample")
        emb = np.asarray(self.sample_embeddings)
        if emb.ndim != 2 or emb.shape[0] != len(self.sample_texts):
            raise ValidationError("one embedding row per sample text required")
        norms = np.linalg.norm(emb, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValidationError("guidance sample embeddings must be unit norm")

    @classmethod
    def from_texts(cls, texts: list[str], language: str, backend: Backend) -> "GuidanceSet":
        if not texts:
            raise ValidationError("guidance set needs at least one sample")
        emb = np.stack([backend.style_embed(t) for t in texts])
        return cls(tuple(texts), emb, language)


@dataclass
class TrainingTrace:
    """Per-step training losses plus the trained parameter handle."""

    losses: list[float]
    parameters: object = None  # the backend's denoiser after training

    @property
    def steps(self) -> int:
        return len(self.losses)


def train_denoiser(corpus: list[str], backend: Backend, config: TrainingConfig) -> TrainingTrace:
    """One gradient-descent pass per step over freshly sampled noised batches.

    Each batch element: draw a corpus text, paraphrase it, draw a uniform
    step t in [0, T] and a standard-normal noise, noise the text's token
    embeddings, and score the denoiser's token predictions (conditioned on
    the paraphrase) against the original tokens with cross-entropy.
    """
    if not corpus:
        raise ValidationError("training corpus is empty")
    if not getattr(backend, "supports_denoiser_training", False):
        raise CapabilityError("backend does not support denoiser training")
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 7001]))
    diffusion = DiffusionConfig(total_steps=config.total_steps, rng_seed=config.seed)
    backend.denoiser.time_scale = config.total_steps

    token_cache: dict[str, tuple[TokenSequence, TokenSequence, np.ndarray]] = {}

    def prepared(text: str):
        if text not in token_cache:
            target = backend.tokenize(text)
            condition = backend.tokenize(backend.paraphrase(text))
            token_cache[text] = (target, condition, backend.embed_tokens(target))
        return token_cache[text]

    losses: list[float] = []
    for step in range(config.steps):
        items = []
        for _ in range(config.batch_size):
            text = corpus[int(rng.integers(0, len(corpus)))]
            target, condition, embedding = prepared(text)
            t = int(rng.integers(0, config.total_steps + 1))
            noise = rng.standard_normal(embedding.shape)
            x_t = forward_diffuse(embedding, t, diffusion, noise)
            items.append((x_t, t, condition, target))
        loss = backend.denoiser_train_step(items, config.learning_rate)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite training loss at step {step}")
        losses.append(float(loss))
    return TrainingTrace(losses, parameters=backend.denoiser)


# -- guidance ------------------------------------------------------------------------


def guidance_value(candidate_repr: np.ndarray, guidance: GuidanceSet) -> float:
    """Mean cosine similarity between a style-space vector and the samples."""
    vec = np.asarray(candidate_repr, dtype=np.float64)
    if vec.ndim != 1:
        raise ValidationError(f"candidate representation must be a vector, got {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValidationError("candidate representation contains non-finite entries")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValidationError("candidate representation has zero norm")
    sims = guidance.sample_embeddings @ (vec / norm)
    return float(sims.mean())


def _softmax_rows(logits: np.ndarray, temperature: float) -> np.ndarray:
    scaled = np.asarray(logits, dtype=np.float64) / temperature
    scaled -= scaled.max(axis=1, keepdims=True)
    p = np.exp(scaled)
    p /= p.sum(axis=1, keepdims=True)
    return p


def relaxed_style_vector(logits: np.ndarray, backend: Backend, temperature: float) -> np.ndarray:
    """Differentiable style-space image of a logits matrix.

    softmax(logits/temperature) per position, probability-weighted token
    embedding, mean pool over positions, style head.
    """
    probs = _softmax_rows(logits, temperature)
    pooled = (probs @ backend.embedding_table()).mean(axis=0)
    return backend.style_project(pooled)


def text_style_vector(text: str, backend: Backend) -> np.ndarray:
    """Style-space image of a concrete text via its pooled token embeddings."""
    tokens = backend.tokenize(text)
    if len(tokens) == 0:
        raise ValidationError("cannot project an empty text")
    return backend.style_project(backend.embed_tokens(tokens).mean(axis=0))


def guidance_loss(
    logits: np.ndarray,
    condition: TokenSequence,
    guidance: GuidanceSet,
    backend: Backend,
    temperature: float,
) -> float:
    """One minus the mean cosine similarity of the relaxed style vector."""
    _validate_logits(logits, condition, backend)
    s = relaxed_style_vector(logits, backend, temperature)
    return 1.0 - guidance_value(s, guidance)


def guidance_gradient(
    logits: np.ndarray,
    condition: TokenSequence,
    guidance: GuidanceSet,
    backend: Backend,
    temperature: float,
) -> np.ndarray:
    """Gradient of the guidance loss with respect to the logits.

    Subtracting ``strength * gradient`` from the logits therefore steers
    sampling toward the exemplar style. Invariant under adding a
    per-position constant to the logits (softmax shift invariance).
    """
    arr = _validate_logits(logits, condition, backend)
    positions = arr.shape[0]
    probs = _softmax_rows(arr, temperature)
    table = backend.embedding_table()
    pooled = (probs @ table).mean(axis=0)
    head = backend.style_head_matrix()
    s = head @ pooled
    s_norm = float(np.linalg.norm(s))
    if s_norm == 0.0:
        raise NumericError("relaxed style vector has zero norm")

    # d(mean cos)/ds, then pull back through head, pooling, embedding, softmax.
    g_mean = guidance.sample_embeddings.mean(axis=0)
    cos_mean = float(s @ g_mean) / s_norm
    d_similarity_ds = g_mean / s_norm - (cos_mean / s_norm**2) * s
    d_loss_ds = -d_similarity_ds
    d_loss_dpooled = head.T @ d_loss_ds
    a = table @ d_loss_dpooled / positions  # per-vocab sensitivity, shared by rows
    inner = probs @ a
    grad = probs * (a[None, :] - inner[:, None]) / temperature
    if not np.all(np.isfinite(grad)):
        bad = np.argwhere(~np.isfinite(grad))[0]
        raise NumericError(f"non-finite guidance gradient at position {int(bad[0])}")
    return grad


def _validate_logits(logits: np.ndarray, condition: TokenSequence, backend: Backend) -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    desc = backend.descriptor()
    if arr.ndim != 2 or arr.shape[1] != desc.vocab_size:
        raise ValidationError(f"logits must be (positions, {desc.vocab_size}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("logits contain non-finite entries")
    if len(condition) == 0:
        raise ValidationError("condition must be non-empty")
    return arr


# -- sampling ------------------------------------------------------------------------


def top_p_filter(probabilities: np.ndarray, top_p: float) -> tuple[np.ndarray, np.ndarray]:
    """Nucleus of one distribution: minimal probability-sorted prefix with
    cumulative mass >= top_p, ties broken by ascending token id.

    Returns (token ids in nucleus order, renormalized probabilities).
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError("expected a probability vector")
    if not 0 < top_p <= 1:
        raise ValidationError(f"top_p must be in (0, 1], got {top_p}")
    order = np.argsort(-p, kind="stable")  # stable keeps ascending ids on ties
    sorted_p = p[order]
    cutoff = int(np.searchsorted(np.cumsum(sorted_p), top_p - 1e-12)) + 1
    cutoff = min(cutoff, len(p))
    support = order[:cutoff]
    kept = sorted_p[:cutoff]
    return support, kept / kept.sum()


def top_p_sample(
    logits: np.ndarray,
    temperature: float,
    top_p: float,
    rng: np.random.Generator,
    vocab_size: int | None = None,
) -> TokenSequence:
    """Per-position nucleus sampling of softmax(logits/temperature).

    Consumes exactly one uniform draw per position (inverse CDF over the
    renormalized nucleus), in position order.
    """
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"logits must be 2-D, got shape {arr.shape}")
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    probs = _softmax_rows(arr, temperature)
    ids = []
    for row in probs:
        support, kept = top_p_filter(row, top_p)
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(kept), u, side="right"))
        ids.append(int(support[min(idx, len(support) - 1)]))
    return TokenSequence(tuple(ids), vocab_size or arr.shape[1])


# -- guided refinement -----------------------------------------------------------------


def apply_style(
    translation: str,
    guidance: GuidanceSet,
    config: DiffusionConfig,
    backend: Backend,
    seed: int | None = None,
) -> str:
    """Rewrite ``translation`` toward the guidance exemplars' style.

    Start from pure noise, then for t = T..1: denoise conditioned on the
    translation, subtract the scaled guidance gradient from the logits,
    nucleus-sample a text, and re-noise its embedding at step t-1. A final
    t=0 pass produces the output. RNG draw order per run: initial noise,
    then per step the per-position sampling draws followed by the re-noise
    draw, then the final pass draws; identical (inputs, seed) replay
    bit-for-bit, and strength 0 matches unguided sampling seed-for-seed.
    """
    if not translation:
        raise ValidationError("cannot restyle an empty translation")
    condition = backend.tokenize(translation)
    if len(condition) == 0:
        raise ValidationError("translation tokenized to an empty sequence")
    dim = backend.descriptor().embedding_dim
    use_seed = config.rng_seed if seed is None else int(seed)
    rng = np.random.default_rng(np.random.SeedSequence([use_seed, 7002]))

    x = rng.standard_normal((len(condition), dim))
    strength = config.guidance_strength

    def guided_sample(x_t: np.ndarray, t: int) -> TokenSequence:
        try:
            logits = backend.denoise(x_t, t, condition)
            if strength != 0.0:
                grad = guidance_gradient(logits, condition, guidance, backend, config.temperature)
                logits = logits - strength * grad
            return top_p_sample(logits, config.temperature, config.top_p, rng)
        except NumericError as err:
            raise NumericError(f"{err} (refinement step t={t})") from err

    for t in range(config.total_steps, 0, -1):
        sampled = guided_sample(x, t)
        noise = rng.standard_normal(x.shape)
        x = forward_diffuse(backend.embed_tokens(sampled), t - 1, config, noise)
    final = guided_sample(x, 0)
    return backend.detokenize(final)


def candidate_seed(master_seed: int, candidate_index: int) -> int:
    """Independent seed stream for one repair candidate."""
    return derive_seed(master_seed, 9000 + candidate_index)
