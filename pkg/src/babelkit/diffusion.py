"""Noise schedule and forward diffusion in embedding space.

The schedule keeps the signal coefficient at 1 for step 0 and decays it to
0 at the final step, much slower than cosine or sqrt schedules, so token
embeddings survive deep into the chain.
"""

from __future__ import annotations

import math

import numpy as np

from .configs import DiffusionConfig
from .errors import ShapeError, ValidationError

__all__ = ["beta", "forward_diffuse", "forward_diffuse_seeded", "ensure_embedding_matrix"]


def beta(t: int, total_steps: int) -> float:
    """Signal coefficient sqrt((T - t) / T) at step ``t`` of ``total_steps``.

    Strictly decreasing in t, exactly 1.0 at t=0 and exactly 0.0 at t=T.
    Computed in 64-bit floats regardless of caller dtype.
    """
    t = int(t)
    total_steps = int(total_steps)
    if total_steps < 1:
        raise ValidationError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= t <= total_steps:
        raise ValidationError(f"step {t} outside [0, {total_steps}]")
    return math.sqrt((total_steps - t) / total_steps)


def ensure_embedding_matrix(values: np.ndarray, name: str = "embedding") -> np.ndarray:
    """Validate a 2-D finite float matrix and return it as an ndarray."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def forward_diffuse(
    embedding: np.ndarray, t: int, config: DiffusionConfig, noise: np.ndarray
) -> np.ndarray:
    """Mix ``embedding`` with ``noise``: sqrt(beta_t) * E + sqrt(1 - beta_t) * eps.

    ``noise`` is caller-supplied (a standard-normal draw) so every
    stochastic path is replayable; see ``forward_diffuse_seeded`` for the
    drawing wrapper. Coefficients are computed in 64-bit and are exact at
    both endpoints: t=0 returns the embedding unchanged, t=T the noise.
    """
    emb = ensure_embedding_matrix(embedding, "embedding")
    eps = ensure_embedding_matrix(noise, "noise")
    if emb.shape != eps.shape:
        raise ShapeError(f"embedding shape {emb.shape} != noise shape {eps.shape}")
    b = beta(t, config.total_steps)
    return math.sqrt(b) * emb + math.sqrt(1.0 - b) * eps


def forward_diffuse_seeded(
    embedding: np.ndarray, t: int, config: DiffusionConfig, rng: np.random.Generator
) -> np.ndarray:
    """Convenience wrapper drawing the noise from ``rng``."""
    emb = ensure_embedding_matrix(embedding, "embedding")
    noise = rng.standard_normal(emb.shape)
    return forward_diffuse(emb, t, config, noise)
