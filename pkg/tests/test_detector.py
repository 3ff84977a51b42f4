import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from babelkit.backends.base import Backend, BackendDescriptor, StyleDistribution
from babelkit.configs import DetectionConfig
from babelkit.detector import (
    ConfusionMatrix,
    DetectionVerdict,
    check_consistency,
    detect_style,
    score_confusion,
)
from babelkit.errors import ConfigError, ValidationError


class StubDetector(Backend):
    """Backend whose classifier returns preset probabilities per text."""

    def __init__(self, confidences: dict[str, float], labels=("formal", "casual"), language="en"):
        self.confidences = confidences
        self._desc = BackendDescriptor(
            kind="reference",
            embedding_dim=4,
            vocab_size=4,
            style_labels=tuple(labels),
            languages=(language,),
            max_sequence_len=64,
        )

    def descriptor(self):
        return self._desc

    def classify_style(self, text, language):
        p = self.confidences[text]
        return StyleDistribution(self._desc.style_labels, (p, 1.0 - p))

    # unused capabilities
    def tokenize(self, text):
        raise NotImplementedError

    def detokenize(self, tokens):
        raise NotImplementedError

    def embed_tokens(self, tokens):
        raise NotImplementedError

    def embedding_table(self):
        raise NotImplementedError

    def style_embed(self, text):
        raise NotImplementedError

    def paraphrase(self, text, seed=0):
        raise NotImplementedError

    def denoise(self, x_t, t, condition):
        raise NotImplementedError


def stub_backends(source_conf: float, translation_conf: float):
    backend = StubDetector({"src": source_conf, "tr": translation_conf})
    return {"en": backend, "xx": backend}


class TestCheckConsistency:
    def test_confident_translation_not_flagged(self):
        backends = stub_backends(0.9, 0.60)
        verdict = check_consistency("src", "en", "tr", "xx", DetectionConfig(0.5), backends)
        assert verdict.source_label == "formal"
        assert verdict.translation_confidence == pytest.approx(0.60)
        assert verdict.flagged is False

    def test_low_confidence_flagged(self):
        backends = stub_backends(0.9, 0.49)
        verdict = check_consistency("src", "en", "tr", "xx", DetectionConfig(0.5), backends)
        assert verdict.flagged is True

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.01, max_value=0.99),
    )
    def test_verdict_depends_only_on_probability_and_threshold(self, conf, h):
        backends = stub_backends(0.8, conf)
        verdict = check_consistency("src", "en", "tr", "xx", DetectionConfig(h), backends)
        assert verdict.flagged == (conf < h)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.01, max_value=0.98),
        st.floats(min_value=0.0, max_value=0.01),
    )
    def test_raising_threshold_never_unflags(self, conf, h, bump):
        low = check_consistency(
            "src", "en", "tr", "xx", DetectionConfig(h), stub_backends(0.8, conf)
        )
        high = check_consistency(
            "src", "en", "tr", "xx", DetectionConfig(min(h + bump, 0.99)), stub_backends(0.8, conf)
        )
        if low.flagged:
            assert high.flagged

    def test_flag_count_nondecreasing_in_threshold(self):
        rng = np.random.default_rng(0)
        confidences = rng.random(50)
        counts = []
        for h in (0.1, 0.3, 0.5, 0.7, 0.9):
            flags = 0
            for i, c in enumerate(confidences):
                backends = stub_backends(0.8, float(c))
                flags += check_consistency(
                    "src", "en", "tr", "xx", DetectionConfig(h), backends
                ).flagged
            counts.append(flags)
        assert counts == sorted(counts)

    def test_unaligned_label_sets_rejected(self):
        source = StubDetector({"src": 0.9}, labels=("formal", "casual"))
        target = StubDetector({"tr": 0.5}, labels=("poetic", "plain"))
        with pytest.raises(ConfigError):
            check_consistency(
                "src", "en", "tr", "xx", DetectionConfig(0.5), {"en": source, "xx": target}
            )

    def test_profile_labels_must_align(self):
        backends = stub_backends(0.9, 0.5)
        with pytest.raises(ConfigError):
            check_consistency(
                "src", "en", "tr", "xx", DetectionConfig(0.5), backends, label_order=("poetic",)
            )

    def test_missing_backend_language(self):
        backends = {"en": StubDetector({"src": 0.9})}
        with pytest.raises(ConfigError):
            check_consistency("src", "en", "tr", "xx", DetectionConfig(0.5), backends)

    def test_argmax_tie_broken_by_label_order(self):
        backend = StubDetector({"src": 0.5, "tr": 0.5})
        backends = {"en": backend, "xx": backend}
        verdict = check_consistency(
            "src", "en", "tr", "xx", DetectionConfig(0.5), backends, label_order=("casual", "formal")
        )
        assert verdict.source_label == "casual"

    def test_delegates_to_backend(self):
        backend = StubDetector({"text": 0.7})
        dist = detect_style("text", "en", backend)
        assert dist.probabilities == pytest.approx((0.7, 0.3))


class TestVerdictInvariant:
    def test_inconsistent_flag_rejected(self):
        with pytest.raises(ValidationError):
            DetectionVerdict("formal", 0.9, 0.7, True, 0.5)


def verdicts_from_flags(flags):
    return [
        DetectionVerdict("formal", 1.0, 0.0 if f else 1.0, f, 0.5) for f in flags
    ]


class TestScoreConfusion:
    def test_published_law_row(self):
        # tp=22 tn=23 fp=5 fn=0
        matrix = ConfusionMatrix(tp=22, tn=23, fp=5, fn=0)
        assert matrix.precision * 100 == pytest.approx(81.48, abs=0.01)
        assert matrix.fpr * 100 == pytest.approx(17.86, abs=0.01)

    def test_published_wikipedia_row(self):
        matrix = ConfusionMatrix(tp=23, tn=25, fp=0, fn=2)
        assert matrix.precision * 100 == pytest.approx(100.00, abs=0.01)
        assert matrix.fpr * 100 == pytest.approx(0.00, abs=0.01)

    def test_counts_from_verdicts(self):
        verdicts = verdicts_from_flags([True, True, False, False, True])
        gold = [True, False, True, False, True]
        matrix = score_confusion(verdicts, gold)
        assert (matrix.tp, matrix.fp, matrix.fn, matrix.tn) == (2, 1, 1, 1)

    def test_all_correct(self):
        verdicts = verdicts_from_flags([True, False, True])
        matrix = score_confusion(verdicts, [True, False, True])
        assert matrix.fp == 0 and matrix.fn == 0
        assert matrix.precision == pytest.approx(1.0)
        assert matrix.fpr == pytest.approx(0.0)

    def test_undefined_metrics_are_none(self):
        no_positives = score_confusion(verdicts_from_flags([False, False]), [False, False])
        assert no_positives.precision is None
        assert no_positives.recall is None
        all_positive_gold = score_confusion(verdicts_from_flags([True]), [True])
        assert all_positive_gold.fpr is None

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            score_confusion(verdicts_from_flags([True]), [True, False])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            ConfusionMatrix(tp=-1, tn=0, fp=0, fn=0)

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
    @settings(max_examples=100)
    def test_counts_partition_input(self, pairs):
        verdicts = verdicts_from_flags([flag for flag, _ in pairs])
        gold = [g for _, g in pairs]
        matrix = score_confusion(verdicts, gold)
        assert matrix.tp + matrix.tn + matrix.fp + matrix.fn == len(pairs)
