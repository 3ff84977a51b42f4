"""Style-consistency detection between a source text and its translation.

The source-language detector names the source's style; the pair is flagged
when the target-language detector's confidence for that same label on the
translation falls below the threshold. Raising the threshold can only flag
more pairs, never fewer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .backends.base import Backend, StyleDistribution
from .configs import DetectionConfig
from .errors import ConfigError, ValidationError

__all__ = [
    "DetectionVerdict",
    "ConfusionMatrix",
    "detect_style",
    "check_consistency",
    "score_confusion",
]


@dataclass(frozen=True)
class DetectionVerdict:
    """Outcome of one consistency check.

    translation_confidence is the target-language detector's probability
    for the source's detected label; flagged iff it is below the threshold.
    """

    source_label: str
    source_confidence: float
    translation_confidence: float
    flagged: bool
    threshold_used: float

    def __post_init__(self) -> None:
        if self.flagged != (self.translation_confidence < self.threshold_used):
            raise ValidationError("flag decision inconsistent with threshold rule")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with the positive class = stylistically inconsistent.

    Metrics are None (undefined), never 0, when their denominator is 0.
    """

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def precision(self) -> float | None:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> float | None:
        d = self.tp + self.fn
        return self.tp / d if d else None

    @property
    def fpr(self) -> float | None:
        d = self.fp + self.tn
        return self.fp / d if d else None


def detect_style(text: str, language: str, backend: Backend) -> StyleDistribution:
    """Style distribution of a single text, as the backend's detector sees it."""
    return backend.classify_style(text, language)


def check_consistency(
    source_text: str,
    source_language: str,
    translation_text: str,
    translation_language: str,
    config: DetectionConfig,
    backends: Mapping[str, Backend],
    label_order: tuple[str, ...] | None = None,
) -> DetectionVerdict:
    """Flag the pair when the translation's confidence for the source's
    detected style label is below the threshold.

    Labels of the two detectors are matched by name; ``label_order`` (the
    profile's declared order) breaks exact argmax ties deterministically.
    """
    try:
        source_backend = backends[source_language]
        target_backend = backends[translation_language]
    except KeyError as missing:
        raise ConfigError(f"no backend configured for language {missing}") from None

    source_labels = set(source_backend.descriptor().style_labels)
    target_labels = set(target_backend.descriptor().style_labels)
    if label_order is not None:
        wanted = set(label_order)
        if not (wanted <= source_labels and wanted <= target_labels):
            raise ConfigError(
                f"profile labels {sorted(wanted)} not aligned with detector labels "
                f"{sorted(source_labels)} / {sorted(target_labels)}"
            )
    elif source_labels != target_labels:
        raise ConfigError(
            f"source labels {sorted(source_labels)} and target labels "
            f"{sorted(target_labels)} are not aligned"
        )

    source_dist = source_backend.classify_style(source_text, source_language)
    source_label = source_dist.argmax(label_order)
    translation_dist = target_backend.classify_style(translation_text, translation_language)
    confidence = translation_dist.probability(source_label)
    return DetectionVerdict(
        source_label=source_label,
        source_confidence=source_dist.probability(source_label),
        translation_confidence=confidence,
        flagged=confidence < config.threshold,
        threshold_used=config.threshold,
    )


def score_confusion(verdicts: list[DetectionVerdict], gold: list[bool]) -> ConfusionMatrix:
    """Compare flag decisions against gold inconsistency labels.

    gold[i] is True when the pair was humanly judged inconsistent; a flag
    on such a pair is a true positive.
    """
    if len(verdicts) != len(gold):
        raise ValidationError(f"{len(verdicts)} verdicts vs {len(gold)} gold labels")
    tp = tn = fp = fn = 0
    for verdict, inconsistent in zip(verdicts, gold):
        if verdict.flagged and inconsistent:
            tp += 1
        elif verdict.flagged and not inconsistent:
            fp += 1
        elif not verdict.flagged and inconsistent:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)
