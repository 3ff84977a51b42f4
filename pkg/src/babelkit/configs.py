"""Dataclass configs for diffusion, detection, repair, and denoiser training."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

_U64_MAX = 2**64 - 1


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class DiffusionConfig:
    """Knobs of the guided sampler.

    total_steps: number of refinement steps T.
    temperature: softmax temperature; smaller values allow less lexical
        deviation from the conditioning translation.
    guidance_strength: scale on the style-guidance gradient subtracted
        from the logits each step.
    top_p: nucleus mass kept when sampling.
    rng_seed: master seed for every stochastic draw of one run.
    """

    total_steps: int = 800
    temperature: float = 0.3
    guidance_strength: float = 1000.0
    top_p: float = 0.9
    rng_seed: int = 0

    def __post_init__(self) -> None:
        _require(self.total_steps >= 1, f"total_steps must be >= 1, got {self.total_steps}")
        _require(self.temperature > 0, f"temperature must be > 0, got {self.temperature}")
        _require(
            self.guidance_strength >= 0,
            f"guidance_strength must be >= 0, got {self.guidance_strength}",
        )
        _require(0 < self.top_p <= 1, f"top_p must be in (0, 1], got {self.top_p}")
        _require(
            0 <= self.rng_seed <= _U64_MAX,
            f"rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}",
        )


@dataclass(frozen=True)
class DetectionConfig:
    """Flagging threshold for the consistency check."""

    threshold: float = 0.5

    def __post_init__(self) -> None:
        _require(0 < self.threshold < 1, f"threshold must be in (0, 1), got {self.threshold}")


@dataclass(frozen=True)
class TrainingConfig:
    """Denoiser training schedule.

    learning_rate default mirrors the published full-scale recipe; toy
    runs pass a much larger value.
    """

    steps: int = 1000
    batch_size: int = 128
    learning_rate: float = 1e-5
    total_steps: int = 800
    seed: int = 0

    def __post_init__(self) -> None:
        _require(self.steps >= 0, f"steps must be >= 0, got {self.steps}")
        _require(self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}")
        _require(self.learning_rate > 0, f"learning_rate must be > 0, got {self.learning_rate}")
        _require(self.total_steps >= 1, f"total_steps must be >= 1, got {self.total_steps}")


@dataclass(frozen=True)
class RepairConfig:
    """Candidate generation and semantic gating for one repair pass."""

    candidate_count: int = 4
    sts_threshold: float = 0.85
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)

    def __post_init__(self) -> None:
        _require(self.candidate_count >= 1, f"candidate_count must be >= 1, got {self.candidate_count}")
        _require(
            -1 <= self.sts_threshold <= 1,
            f"sts_threshold must be in [-1, 1], got {self.sts_threshold}",
        )
