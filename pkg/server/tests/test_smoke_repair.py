"""Realistic smoke test: detect + repair on real sentence pairs through the
server, via the primary package's pipelines. Similarity values are
documented in the output, not threshold-asserted."""

import json
from pathlib import Path

import pytest

from babelkit.applicator import GuidanceSet
from babelkit.backends.remote import RemoteBackend
from babelkit.configs import DetectionConfig, DiffusionConfig, RepairConfig
from babelkit.detector import check_consistency
from babelkit.repair import RepairResult, repair

SAMPLES = Path(__file__).resolve().parents[1] / "data" / "style_samples_en.jsonl"


def sentence_pairs():
    """20 real pairs: formal source, casual rendition as the style-lost
    translation (ids f01..f20 matched with c01..c20)."""
    rows = {}
    for line in SAMPLES.read_text(encoding="utf-8").splitlines():
        if line.strip():
            row = json.loads(line)
            rows[row["id"]] = row["text"]
    return [(rows[f"f{i:02d}"], rows[f"c{i:02d}"]) for i in range(1, 21)]


@pytest.fixture(scope="module")
def remote(transport):
    return RemoteBackend(transport, endpoint="testclient")


@pytest.fixture(scope="module")
def guidance(remote):
    formal_exemplars = [source for source, _ in sentence_pairs()[:4]]
    return GuidanceSet.from_texts(formal_exemplars, "en", remote)


def smoke_config(seed: int) -> RepairConfig:
    return RepairConfig(
        candidate_count=2,
        sts_threshold=0.85,
        diffusion=DiffusionConfig(
            total_steps=8, temperature=0.3, guidance_strength=400.0, top_p=0.9, rng_seed=seed
        ),
        detection=DetectionConfig(threshold=0.5),
    )


def test_detect_and_repair_twenty_pairs(remote, guidance):
    pairs = sentence_pairs()
    assert len(pairs) == 20
    backends = {"en": remote}
    flagged = 0
    sts_values = []
    for index, (source, translation) in enumerate(pairs):
        verdict = check_consistency(
            source, "en", translation, "en", DetectionConfig(0.5), backends
        )
        assert 0.0 <= verdict.translation_confidence <= 1.0
        if not verdict.flagged:
            continue
        flagged += 1
        result = repair(
            source, "en", translation, "en", guidance, smoke_config(seed=index), backends,
            seed=index,
        )
        assert isinstance(result, RepairResult)
        assert len(result.candidates) == 2
        assert result.original_translation == translation
        assert (result.selected_index is None) == result.fallback_to_original
        for candidate in result.candidates:
            assert candidate.text
            assert 0.0 <= candidate.style_score <= 1.0
            assert -1.0 <= candidate.sts <= 1.0
            sts_values.append(candidate.sts)
    assert flagged > 0, "no pair was flagged; the smoke corpus should trip the detector"
    assert sts_values, "no repairs ran"
    low, high = min(sts_values), max(sts_values)
    mean = sum(sts_values) / len(sts_values)
    # documented, not threshold-asserted: values must merely be non-degenerate
    assert -1.0 <= low <= high <= 1.0
    assert high > 0.0
    print(
        f"\nsmoke repair: {flagged}/20 pairs flagged; candidate similarity "
        f"min {low:.3f} / mean {mean:.3f} / max {high:.3f}"
    )


def test_repair_is_reproducible_through_server(remote, guidance):
    source, translation = sentence_pairs()[0]
    backends = {"en": remote}
    first = repair(source, "en", translation, "en", guidance, smoke_config(3), backends, seed=3)
    second = repair(source, "en", translation, "en", guidance, smoke_config(3), backends, seed=3)
    assert [c.text for c in first.candidates] == [c.text for c in second.candidates]
    assert first.selected_index == second.selected_index
