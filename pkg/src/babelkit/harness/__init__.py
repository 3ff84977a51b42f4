from .corpus import CorpusRecord, StyleProfile, load_corpus, load_profile, split_records
from .evaluate import EvaluationReport, SweepResult, evaluate_system, sweep_parameter
from .report import emit_report, load_report
from .synthetic import SyntheticWorld, make_synthetic_world
from .translate import (
    CachedTranslationClient,
    HttpTranslationClient,
    IdentityClient,
    MockTranslator,
)

__all__ = [
    "CorpusRecord",
    "StyleProfile",
    "load_corpus",
    "load_profile",
    "split_records",
    "EvaluationReport",
    "SweepResult",
    "evaluate_system",
    "sweep_parameter",
    "emit_report",
    "load_report",
    "SyntheticWorld",
    "make_synthetic_world",
    "CachedTranslationClient",
    "HttpTranslationClient",
    "IdentityClient",
    "MockTranslator",
]
