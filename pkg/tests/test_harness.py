import hashlib
import json

import pytest

from babelkit.configs import DetectionConfig, DiffusionConfig, RepairConfig
from babelkit.errors import CorpusError, TranslationError, ValidationError
from babelkit.harness.corpus import (
    CorpusRecord,
    StyleProfile,
    load_corpus,
    load_profile,
    split_records,
)
from babelkit.harness.evaluate import EvaluationRow, aggregate_rows, evaluate_system, sweep_parameter
from babelkit.harness.report import emit_report, format_percent, format_score, load_report
from babelkit.harness.synthetic import STRIP_RULES
from babelkit.harness.translate import (
    CachedTranslationClient,
    HttpTranslationClient,
    IdentityClient,
    MockTranslator,
)


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def record_row(i, text="some text", style="formal", lang="en", domain="law"):
    return {"id": f"r{i}", "domain": domain, "lang": lang, "text": text, "style": style}


class TestLoadCorpus:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_corpus(path) == []

    def test_ten_record_split_recomputed_independently(self, tmp_path):
        rows = [record_row(i) for i in range(10)]
        path = tmp_path / "c.jsonl"
        write_jsonl(path, rows)
        records = load_corpus(path)
        train, test = split_records(records, seed=0)
        assert len(train) == 8 and len(test) == 2
        # independent recomputation of the documented rule: rank records by
        # the keyed blake2b hash of their id, first round(0.8 n) are train
        def rank(record_id):
            key = "0:split".encode()[:64]
            digest = hashlib.blake2b(record_id.encode(), digest_size=8, key=key).digest()
            return int.from_bytes(digest, "big")

        ranked = sorted(records, key=lambda r: (rank(r.id), r.id))
        assert [r.id for r in train] == [r.id for r in ranked[:8]]
        assert [r.id for r in test] == [r.id for r in ranked[8:]]

    def test_split_deterministic_and_exclusive(self, tmp_path):
        rows = [record_row(i) for i in range(25)]
        path = tmp_path / "c.jsonl"
        write_jsonl(path, rows)
        records = load_corpus(path)
        a_train, a_test = split_records(records, seed=3)
        b_train, b_test = split_records(records, seed=3)
        assert [r.id for r in a_train] == [r.id for r in b_train]
        assert {r.id for r in a_train} | {r.id for r in a_test} == {r.id for r in records}
        assert not ({r.id for r in a_train} & {r.id for r in a_test})

    def test_missing_field_names_line(self, tmp_path):
        rows = [record_row(0)]
        bad = dict(record_row(1))
        del bad["style"]
        path = tmp_path / "c.jsonl"
        write_jsonl(path, rows + [bad])
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(path)

    def test_extra_field_rejected(self, tmp_path):
        row = dict(record_row(0))
        row["extra"] = "x"
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [row])
        with pytest.raises(CorpusError, match="unexpected"):
            load_corpus(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record_row(0), record_row(0)])
        with pytest.raises(CorpusError, match="duplicate id"):
            load_corpus(path)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a"}\nnot json\n', encoding="utf-8")
        with pytest.raises(CorpusError, match="line 1"):
            load_corpus(path)

    def test_empty_text_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record_row(0, text="")])
        with pytest.raises(CorpusError, match="empty text"):
            load_corpus(path)


class TestStyleProfile:
    def test_missing_language_sample_rejected(self):
        with pytest.raises(CorpusError):
            StyleProfile(
                name="p",
                labels=("formal",),
                languages=("en", "xx"),
                samples={"formal": {"en": ("text",)}},
            )

    def test_load_round_trip(self, tmp_path):
        payload = {
            "name": "p",
            "labels": ["formal", "casual"],
            "languages": ["en"],
            "samples": {"formal": {"en": ["The Court."]}, "casual": {"en": ["yeah ok."]}},
        }
        path = tmp_path / "profile.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        profile = load_profile(path)
        assert profile.labels == ("formal", "casual")
        assert profile.exemplars("formal", "en") == ("The Court.",)

    def test_unknown_label_lookup(self, world):
        with pytest.raises(CorpusError):
            world.profile.exemplars("baroque", "en")


class TestMockTranslator:
    def test_identity_client(self):
        assert IdentityClient().translate("x", "en", "xx") == "x"

    def test_word_mapping_preserves_style(self, world):
        client = MockTranslator(world.word_map, strip_mode="never", strip_rules=world.strip_rules)
        out = client.translate("The Court Shall Order.", "en", "xx")
        assert out == "Gur Pbheg Funyy Beqre."

    def test_strip_applies_fixture_rules_then_maps(self, world):
        # Oracle: the documented strip procedure recomputed from the fixture
        # dictionary and rule table.
        client = MockTranslator(world.word_map, strip_mode="always", strip_rules=world.strip_rules)
        text = "The Court SHALL order"
        lowered = text.lower()
        for marker, plain in sorted(STRIP_RULES, key=lambda r: -len(r[0])):
            import re

            lowered = re.sub(rf"(?<![a-z]){re.escape(marker)}(?![a-z])", plain, lowered)
        expected = " ".join(world.word_map.get(w, w) for w in lowered.split(" "))
        assert client.translate(text, "en", "xx") == expected
        assert client.translate(text, "en", "xx") == "gur pbheg jvyy beqre"

    def test_hash_mode_deterministic_and_mixed(self, world):
        client = MockTranslator(world.word_map, strip_mode="hash", strip_rules=world.strip_rules)
        texts = [r.text for r in world.source_records[:40]]
        decisions = [client.did_strip(t) for t in texts]
        assert any(decisions) and not all(decisions)
        assert decisions == [client.did_strip(t) for t in texts]
        for text, stripped in zip(texts, decisions):
            expected_mode = "always" if stripped else "never"
            twin = MockTranslator(world.word_map, strip_mode=expected_mode, strip_rules=world.strip_rules)
            assert client.translate(text, "en", "xx") == twin.translate(text, "en", "xx")

    def test_unknown_mode(self, world):
        with pytest.raises(TranslationError):
            MockTranslator(world.word_map, strip_mode="sometимes")


class RaisingClient:
    name = "raising"

    def translate(self, text, source_lang, target_lang):
        raise AssertionError("network client must not be called on a cache hit")


class TestTranslationCache:
    def test_cache_hit_skips_inner_client(self, tmp_path, world):
        inner = MockTranslator(world.word_map, strip_mode="never", strip_rules=world.strip_rules)
        cache_dir = tmp_path / "cache"
        first = CachedTranslationClient(inner, cache_dir)
        translated = first.translate("The Court.", "en", "xx")

        raising = RaisingClient()
        raising.name = inner.name  # same cache key space
        second = CachedTranslationClient(raising, cache_dir)
        assert second.translate("The Court.", "en", "xx") == translated

    def test_cache_is_content_addressed_per_client(self, tmp_path):
        a = CachedTranslationClient(IdentityClient(), tmp_path / "cache")
        a.translate("x", "en", "xx")
        files = list((tmp_path / "cache").glob("*.json"))
        assert len(files) == 1
        payload = json.loads(files[0].read_text(encoding="utf-8"))
        assert payload["translation"] == "x"
        assert payload["client"] == "identity"


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload or {}
        self.text = text

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls += 1
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class TestHttpTranslationClient:
    def test_success(self):
        session = FakeSession([FakeResponse(200, {"translation": "ok"})])
        client = HttpTranslationClient("svc", "http://x/translate", session=session, sleep=lambda s: None)
        assert client.translate("hi", "en", "xx") == "ok"

    def test_retries_server_errors_then_succeeds(self):
        session = FakeSession(
            [FakeResponse(500), FakeResponse(503), FakeResponse(200, {"translation": "ok"})]
        )
        client = HttpTranslationClient("svc", "http://x", session=session, sleep=lambda s: None)
        assert client.translate("hi", "en", "xx") == "ok"
        assert session.calls == 3

    def test_client_error_not_retried(self):
        session = FakeSession([FakeResponse(403, text="denied")])
        client = HttpTranslationClient("svc", "http://x", session=session, sleep=lambda s: None)
        with pytest.raises(TranslationError, match="403"):
            client.translate("hi", "en", "xx")
        assert session.calls == 1

    def test_exhausted_retries_surface_error(self):
        session = FakeSession([TimeoutError("t"), TimeoutError("t"), TimeoutError("t")])
        client = HttpTranslationClient("svc", "http://x", session=session, sleep=lambda s: None)
        with pytest.raises(TranslationError, match="after 3 attempts"):
            client.translate("hi", "en", "xx")

    def test_missing_credentials_env(self, monkeypatch):
        monkeypatch.delenv("SOME_MT_KEY", raising=False)
        with pytest.raises(TranslationError, match="SOME_MT_KEY"):
            HttpTranslationClient("svc", "http://x", api_key_env="SOME_MT_KEY")


def desk_config(seed, strength=400.0, total_steps=8, threshold=0.5):
    return RepairConfig(
        candidate_count=4,
        sts_threshold=0.85,
        diffusion=DiffusionConfig(
            total_steps=total_steps,
            temperature=0.3,
            guidance_strength=strength,
            top_p=0.9,
            rng_seed=seed,
        ),
        detection=DetectionConfig(threshold=threshold),
    )


class TestEvaluateSystem:
    def test_zero_flagged_keeps_metrics_and_marks_sts_undefined(self, world, splits, backends):
        client = MockTranslator(world.word_map, strip_mode="never", strip_rules=world.strip_rules)
        config = desk_config(seed=1, threshold=0.01)  # nothing falls below 0.01
        report = evaluate_system(
            splits["test_src"], client, world.profile, config, backends, "xx", seed=1
        )
        assert report.average.flagged == 0
        assert report.average.bias_ratio == report.average.revised_bias_ratio
        assert report.average.style_score == report.average.revised_style_score
        assert report.average.sts_mean is None

    def test_strip_client_improves_bias(self, world, splits, backends):
        client = MockTranslator(world.word_map, strip_mode="hash", strip_rules=world.strip_rules)
        report = evaluate_system(
            splits["test_src"], client, world.profile, desk_config(seed=5), backends, "xx", seed=5
        )
        assert report.average.revised_bias_ratio < report.average.bias_ratio
        assert report.average.sts_mean is not None and report.average.sts_mean >= 0.85

    def test_failed_records_excluded_with_count(self, world, splits, backends):
        class FlakyClient:
            name = "flaky"

            def __init__(self, word_map, rules):
                self.inner = MockTranslator(word_map, strip_mode="never", strip_rules=rules)

            def translate(self, text, source_lang, target_lang):
                if "Tribunal" in text or "gevohany" in text:
                    raise TranslationError("boom")
                return self.inner.translate(text, source_lang, target_lang)

        client = FlakyClient(world.word_map, world.strip_rules)
        config = desk_config(seed=1, threshold=0.01)
        report = evaluate_system(
            splits["test_src"], client, world.profile, config, backends, "xx", seed=1
        )
        assert report.average.excluded > 0
        assert report.average.evaluated + report.average.excluded == report.average.total

    def test_jobs_parallel_matches_serial(self, world, splits, backends):
        client = MockTranslator(world.word_map, strip_mode="never", strip_rules=world.strip_rules)
        config = desk_config(seed=1, threshold=0.01)
        serial = evaluate_system(
            splits["test_src"], client, world.profile, config, backends, "xx", seed=1, jobs=1
        )
        parallel = evaluate_system(
            splits["test_src"], client, world.profile, config, backends, "xx", seed=1, jobs=4
        )
        assert serial.to_dict() == parallel.to_dict()

    def test_no_records_rejected(self, world, backends):
        client = IdentityClient()
        with pytest.raises(ValidationError):
            evaluate_system([], client, world.profile, desk_config(seed=1), backends, "xx", seed=1)


class StubConfidenceBackend:
    """Detector stub keyed by translated text prefix."""

    def __init__(self, confidences):
        from babelkit.backends.base import BackendDescriptor, StyleDistribution

        self.confidences = confidences
        self._desc = BackendDescriptor(
            kind="reference",
            embedding_dim=4,
            vocab_size=4,
            style_labels=("formal", "casual"),
            languages=("en", "xx"),
            max_sequence_len=64,
        )

    def descriptor(self):
        return self._desc

    def classify_style(self, text, language):
        from babelkit.backends.base import StyleDistribution

        # source language is always confidently formal; the target-language
        # confidence per text drives the sweep
        p = 0.9 if language == "en" else self.confidences.get(text, 0.9)
        return StyleDistribution(("formal", "casual"), (p, 1.0 - p))


class TestSweep:
    def test_h_sweep_matches_brute_force_thresholding(self, world):
        records = [
            CorpusRecord(id=f"s{i}", domain="law", lang="en", text=f"text {i}", style="formal")
            for i in range(8)
        ]
        confidences = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75]
        backend = StubConfidenceBackend({f"text {i}": c for i, c in enumerate(confidences)})
        backends = {"en": backend, "xx": backend}
        gold = [True, True, False, True, False, False, True, False]
        profile = StyleProfile(
            name="stub",
            labels=("formal", "casual"),
            languages=("en", "xx"),
            samples={
                "formal": {"en": ("a",), "xx": ("a",)},
                "casual": {"en": ("b",), "xx": ("b",)},
            },
        )
        grid = [0.1, 0.3, 0.5, 0.7]
        result = sweep_parameter(
            "h", grid, records, IdentityClient(), profile,
            desk_config(seed=0), backends, "xx", seed=0, gold=gold,
        )
        for row, h in zip(result.rows, grid):
            flags = [c < h for c in confidences]
            assert row["flag_count"] == sum(flags)
            tp = sum(1 for f, g in zip(flags, gold) if f and g)
            fp = sum(1 for f, g in zip(flags, gold) if f and not g)
            tn = sum(1 for f, g in zip(flags, gold) if not f and not g)
            expected_precision = tp / (tp + fp) if tp + fp else None
            expected_fpr = fp / (fp + tn) if fp + tn else None
            assert row["precision"] == (pytest.approx(expected_precision) if expected_precision is not None else None)
            assert row["fpr"] == (pytest.approx(expected_fpr) if expected_fpr is not None else None)
        flag_counts = [row["flag_count"] for row in result.rows]
        assert flag_counts == sorted(flag_counts)

    def test_single_point_grid(self, world, splits, backends):
        client = MockTranslator(world.word_map, strip_mode="hash", strip_rules=world.strip_rules)
        result = sweep_parameter(
            "h", [0.5], splits["test_src"][:10], client, world.profile,
            desk_config(seed=0), backends, "xx", seed=0,
        )
        assert len(result.rows) == 1

    def test_grid_must_increase(self, world, splits, backends):
        client = IdentityClient()
        with pytest.raises(ValidationError):
            sweep_parameter(
                "h", [0.5, 0.5], splits["test_src"][:4], client, world.profile,
                desk_config(seed=0), backends, "xx", seed=0,
            )

    def test_unknown_parameter(self, world, splits, backends):
        with pytest.raises(ValidationError):
            sweep_parameter(
                "gamma", [0.1], splits["test_src"][:4], IdentityClient(), world.profile,
                desk_config(seed=0), backends, "xx", seed=0,
            )


def sample_rows():
    def row(domain, bias, score, revised, rscore, sts):
        return EvaluationRow(
            system="mock", domain=domain, total=10, evaluated=10, excluded=0,
            flagged=3, repaired=2, fallbacks=1, revised_flagged=1,
            bias_ratio=bias, style_score=score, revised_bias_ratio=revised,
            revised_style_score=rscore, sts_mean=sts,
        )

    return [
        row("law", 0.1754, 0.72, 0.0787, 0.77, 0.91),
        row("literature", 0.1234, 0.75, 0.0767, 0.78, 0.88),
    ]


class TestReport:
    def test_percent_rendering_half_up(self):
        assert format_percent(0.131481) == "13.15%"
        assert format_percent(0.0) == "0.00%"
        assert format_percent(1.0) == "100.00%"
        assert format_score(None) == "n/a"
        assert format_score(0.745) == "0.75"

    def test_json_round_trip(self, tmp_path):
        from babelkit.harness.evaluate import EvaluationReport

        rows = sample_rows()
        report = EvaluationReport(system="mock", rows=rows, average=aggregate_rows("mock", rows))
        path = emit_report(report, tmp_path / "report.json", fmt="json")
        assert load_report(path) == report.to_dict()

    def test_csv_rendering(self, tmp_path):
        from babelkit.harness.evaluate import EvaluationReport

        rows = sample_rows()
        report = EvaluationReport(system="mock", rows=rows, average=aggregate_rows("mock", rows))
        path = emit_report(report, tmp_path / "report.csv", fmt="csv")
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert lines[0].startswith("system,domain,bias_ratio")
        assert lines[1].split(",")[2] == "17.54%"
        assert len(lines) == 4  # header + 2 domains + average

    def test_empty_report_header_only_csv(self, tmp_path):
        path = emit_report(None, tmp_path / "empty.csv", fmt="csv")
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 1

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValidationError):
            emit_report(None, tmp_path / "x.bin", fmt="parquet")

    def test_average_is_arithmetic_mean(self):
        rows = sample_rows()
        average = aggregate_rows("mock", rows)
        assert average.bias_ratio == pytest.approx((0.1754 + 0.1234) / 2, abs=5e-5)
        assert average.sts_mean == pytest.approx((0.91 + 0.88) / 2, abs=5e-5)
