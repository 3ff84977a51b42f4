"""Reusable wire-protocol contract checks.

Run against any transport (in-process stub or a live server) to verify the
capabilities handshake, request/response schemas, error bodies, and golden
fixtures. Each check raises AssertionError with a readable message."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .remote import RemoteBackend

__all__ = ["run_contract_checks", "replay_golden_fixtures", "capture_golden_fixtures"]


def check_capabilities(transport) -> None:
    status, payload = transport.request("GET", "/v1/capabilities")
    assert status == 200, f"capabilities returned {status}"
    for field in ("embedding_dim", "vocab_size", "style_labels", "languages", "max_sequence_len"):
        assert field in payload, f"capabilities missing {field!r}"
    assert payload["embedding_dim"] >= 2
    assert payload["vocab_size"] >= 2
    assert len(payload["style_labels"]) >= 2


def check_tokenize_roundtrip(transport, sentence: str) -> None:
    backend = RemoteBackend(transport)
    tokens = backend.tokenize(sentence)
    assert len(tokens) > 0, "tokenizer returned an empty sequence"
    assert backend.detokenize(tokens) == sentence, "round-trip changed the text"


def check_embed_shape(transport, sentence: str) -> None:
    backend = RemoteBackend(transport)
    tokens = backend.tokenize(sentence)
    matrix = backend.embed_tokens(tokens)
    assert matrix.shape == (len(tokens), backend.descriptor().embedding_dim)
    assert np.all(np.isfinite(matrix)), "non-finite embedding entries"


def check_style_embed_norm(transport, sentence: str) -> None:
    backend = RemoteBackend(transport)
    vec = backend.style_embed(sentence)
    assert abs(float(np.linalg.norm(vec)) - 1.0) <= 1e-6, "style embedding not unit norm"


def check_classify_distribution(transport, sentence: str, language: str) -> None:
    backend = RemoteBackend(transport)
    dist = backend.classify_style(sentence, language)
    assert abs(sum(dist.probabilities) - 1.0) <= 1e-6, "distribution does not sum to 1"


def check_paraphrase_deterministic(transport, sentence: str) -> None:
    backend = RemoteBackend(transport)
    first = backend.paraphrase(sentence, seed=3)
    second = backend.paraphrase(sentence, seed=3)
    assert first == second, "paraphrase not deterministic in (text, seed)"
    assert first, "paraphrase returned an empty text"


def check_error_body(transport) -> None:
    status, payload = transport.request("POST", "/v1/classify", {"text": "x"})
    assert status >= 400, f"missing field accepted with status {status}"
    assert "code" in payload and "message" in payload, f"error body malformed: {payload}"
    status, payload = transport.request("POST", "/v1/nonexistent", {})
    assert status >= 400, "unknown route accepted"
    assert "code" in payload and "message" in payload


def run_contract_checks(transport, sentence: str, language: str) -> list[str]:
    """Run every check; returns the list of check names that passed."""
    checks = [
        ("capabilities", lambda: check_capabilities(transport)),
        ("tokenize_roundtrip", lambda: check_tokenize_roundtrip(transport, sentence)),
        ("embed_shape", lambda: check_embed_shape(transport, sentence)),
        ("style_embed_norm", lambda: check_style_embed_norm(transport, sentence)),
        ("classify_distribution", lambda: check_classify_distribution(transport, sentence, language)),
        ("paraphrase_deterministic", lambda: check_paraphrase_deterministic(transport, sentence)),
        ("error_body", lambda: check_error_body(transport)),
    ]
    passed = []
    for name, check in checks:
        check()
        passed.append(name)
    return passed


# -- golden fixtures --------------------------------------------------------------------


def capture_golden_fixtures(transport, requests: list[dict], path: str | Path) -> None:
    """Record request/response pairs once; replay them forever after."""
    fixtures = []
    for req in requests:
        status, payload = transport.request(
            req["method"], req["path"], req.get("body"), req.get("params")
        )
        fixtures.append({"request": req, "status": status, "response": payload})
    Path(path).write_text(json.dumps(fixtures, indent=2, sort_keys=True), encoding="utf-8")


def _compare(expected, actual, path: str, float_tol: float) -> None:
    if isinstance(expected, dict):
        assert isinstance(actual, dict), f"{path}: expected object"
        assert set(expected) == set(actual), (
            f"{path}: keys differ {sorted(expected)} vs {sorted(actual)}"
        )
        for key in expected:
            _compare(expected[key], actual[key], f"{path}.{key}", float_tol)
    elif isinstance(expected, list):
        assert isinstance(actual, list) and len(actual) == len(expected), f"{path}: length differs"
        for i, (e, a) in enumerate(zip(expected, actual)):
            _compare(e, a, f"{path}[{i}]", float_tol)
    elif isinstance(expected, bool) or expected is None:
        assert expected == actual, f"{path}: {expected!r} != {actual!r}"
    elif isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        assert abs(float(expected) - float(actual)) <= float_tol, (
            f"{path}: {expected} != {actual} beyond {float_tol}"
        )
    else:
        assert expected == actual, f"{path}: {expected!r} != {actual!r}"


def replay_golden_fixtures(transport, path: str | Path, float_tol: float = 1e-4) -> int:
    """Replay recorded fixtures; floats within tolerance, strings exact.
    Returns the number of fixtures replayed."""
    fixtures = json.loads(Path(path).read_text(encoding="utf-8"))
    for i, fixture in enumerate(fixtures):
        req = fixture["request"]
        status, payload = transport.request(
            req["method"], req["path"], req.get("body"), req.get("params")
        )
        assert status == fixture["status"], (
            f"fixture {i}: status {status} != {fixture['status']}"
        )
        _compare(fixture["response"], payload, f"fixture[{i}]", float_tol)
    return len(fixtures)
