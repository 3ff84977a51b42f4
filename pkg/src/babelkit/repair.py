"""Candidate generation, semantic gating, and selection for one repair.

Candidates are generated with independent derived seeds, scored for style
(target detector confidence for the source's label) and semantic textual
similarity against the original translation, then the best-styled candidate
that clears the similarity gate is selected. When none clears the gate the
original translation is returned verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .applicator import GuidanceSet, apply_style, candidate_seed
from .backends.base import Backend
from .configs import RepairConfig
from .detector import check_consistency
from .errors import BabelError, RepairError, ValidationError

__all__ = ["CandidateOutcome", "RepairResult", "semantic_similarity", "select_candidate", "repair"]


def semantic_similarity(a: str, b: str, backend: Backend) -> float:
    """Cosine similarity of the backend's sentence embeddings; symmetric,
    1.0 on identical texts."""
    if not a or not b:
        raise ValidationError("cannot compare empty texts")
    va = np.asarray(backend.sentence_embed(a), dtype=np.float64)
    vb = np.asarray(backend.sentence_embed(b), dtype=np.float64)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("sentence embedding has zero norm")
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class CandidateOutcome:
    text: str
    style_score: float
    sts: float


@dataclass
class RepairResult:
    """Candidates with scores plus the selected output or fallback."""

    candidates: list[CandidateOutcome]
    selected_index: int | None
    fallback_to_original: bool
    original_translation: str
    flagged_on_entry: bool
    source_label: str
    failures: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if (self.selected_index is None) != self.fallback_to_original:
            raise ValidationError("selected_index must be set exactly when not falling back")
        if self.selected_index is not None and not 0 <= self.selected_index < len(self.candidates):
            raise ValidationError("selected_index out of range")

    @property
    def final_text(self) -> str:
        if self.selected_index is None:
            return self.original_translation
        return self.candidates[self.selected_index].text

    @property
    def selected(self) -> CandidateOutcome | None:
        return None if self.selected_index is None else self.candidates[self.selected_index]


def select_candidate(candidates: list[CandidateOutcome], sts_threshold: float) -> int | None:
    """Index of the gate-passing candidate with maximal style score.

    Ties go to the higher similarity, then the lower index. None when no
    candidate clears the gate.
    """
    best: int | None = None
    for i, c in enumerate(candidates):
        if c.sts < sts_threshold:
            continue
        if best is None:
            best = i
            continue
        b = candidates[best]
        if (c.style_score, c.sts) > (b.style_score, b.sts):
            best = i
    return best


def repair(
    source_text: str,
    source_language: str,
    translation_text: str,
    translation_language: str,
    guidance: GuidanceSet,
    config: RepairConfig,
    backends: Mapping[str, Backend],
    seed: int,
    label_order: tuple[str, ...] | None = None,
) -> RepairResult:
    """Run one repair pass over a (source, translation) pair.

    Repairing an unflagged pair is permitted (useful for sweeps); the
    result records the entry verdict either way.
    """
    verdict = check_consistency(
        source_text,
        source_language,
        translation_text,
        translation_language,
        config.detection,
        backends,
        label_order,
    )
    target_backend = backends[translation_language]

    candidates: list[CandidateOutcome] = []
    failures: list[str] = []
    for k in range(config.candidate_count):
        try:
            text = apply_style(
                translation_text,
                guidance,
                config.diffusion,
                target_backend,
                seed=candidate_seed(seed, k),
            )
            style_score = target_backend.classify_style(
                text, translation_language
            ).probability(verdict.source_label)
            sts = semantic_similarity(text, translation_text, target_backend)
            candidates.append(CandidateOutcome(text=text, style_score=style_score, sts=sts))
        except BabelError as err:
            failures.append(f"candidate {k}: {err}")
    if not candidates:
        raise RepairError("all candidates failed: " + "; ".join(failures))

    chosen = select_candidate(candidates, config.sts_threshold)
    return RepairResult(
        candidates=candidates,
        selected_index=chosen,
        fallback_to_original=chosen is None,
        original_translation=translation_text,
        flagged_on_entry=verdict.flagged,
        source_label=verdict.source_label,
        failures=failures,
    )
