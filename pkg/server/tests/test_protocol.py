"""Protocol conformance: schemas, handshake, error bodies, golden fixtures,
and the primary package's contract suite run against this server."""

from pathlib import Path

import numpy as np
import pytest

from babelkit.backends.contract import replay_golden_fixtures, run_contract_checks
from babelkit.backends.remote import RemoteBackend

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_server.json"
SENTENCE = "The Court Shall Review The Motion."


class TestHandshake:
    def test_capabilities_fields(self, client):
        payload = client.get("/v1/capabilities").json()
        for field in ("embedding_dim", "vocab_size", "style_labels", "languages", "max_sequence_len"):
            assert field in payload
        assert payload["languages"] == ["en"]
        assert set(payload["capabilities"]) == {
            "tokenize", "detokenize", "embed", "style_embed", "paraphrase", "classify", "denoise",
        }

    def test_primary_client_connects(self, transport):
        backend = RemoteBackend(transport, endpoint="testclient")
        assert backend.descriptor().kind == "remote"
        assert backend.descriptor().embedding_dim == 64


class TestEndpoints:
    def test_tokenize_round_trip(self, client):
        ids = client.post("/v1/tokenize", json={"text": SENTENCE}).json()["ids"]
        text = client.post("/v1/detokenize", json={"ids": ids}).json()["text"]
        assert text == SENTENCE

    def test_embed_shape(self, client):
        payload = client.post("/v1/embed", json={"ids": [0, 1, 2]}).json()
        matrix = np.asarray(payload["embeddings"])
        assert matrix.shape == (3, 64)
        assert np.all(np.isfinite(matrix))

    def test_style_embed_unit_norm(self, client):
        vec = np.asarray(client.post("/v1/style_embed", json={"text": SENTENCE}).json()["embedding"])
        assert abs(float(np.linalg.norm(vec)) - 1.0) <= 1e-6

    def test_classify_sums_to_one(self, client):
        payload = client.post(
            "/v1/classify", json={"text": SENTENCE, "language": "en"}
        ).json()
        assert abs(sum(payload["distribution"].values()) - 1.0) <= 1e-6

    def test_classifier_separates_registers(self, client):
        formal = client.post(
            "/v1/classify",
            json={"text": "The Witness Shall Appear Before The Tribunal At The Appointed Hour.", "language": "en"},
        ).json()["distribution"]
        casual = client.post(
            "/v1/classify",
            json={"text": "the witness shows up at court when they tell them to.", "language": "en"},
        ).json()["distribution"]
        assert formal["formal"] > 0.5
        assert casual["casual"] > 0.5

    def test_paraphrase_deterministic_mode(self, client):
        body = {"text": "The Parties Shall Commence Work Forthwith.", "seed": 9}
        first = client.post("/v1/paraphrase", json=body, params={"deterministic": 1}).json()["text"]
        second = client.post("/v1/paraphrase", json=body, params={"deterministic": 1}).json()["text"]
        assert first == second
        assert "shall" not in first

    def test_denoise_shape(self, client):
        ids = client.post("/v1/tokenize", json={"text": "abc"}).json()["ids"]
        body = {"x_t": [[0.0] * 64] * 3, "t": 1, "condition_ids": ids}
        logits = np.asarray(client.post("/v1/denoise", json=body).json()["logits"])
        assert logits.shape[0] == 3
        assert np.all(np.isfinite(logits))


class TestErrorBodies:
    def test_missing_field(self, client):
        response = client.post("/v1/classify", json={"text": "x"})
        assert response.status_code == 400
        payload = response.json()
        assert payload["code"] == "missing_field"
        assert "message" in payload

    def test_undeclared_language(self, client):
        response = client.post("/v1/classify", json={"text": "x", "language": "zz"})
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_input"

    def test_unknown_character(self, client):
        response = client.post("/v1/tokenize", json={"text": "café"})
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_input"

    def test_oversized_text(self, client):
        response = client.post("/v1/tokenize", json={"text": "a" * 1000})
        assert response.status_code == 400

    def test_bad_denoise_shape(self, client):
        response = client.post(
            "/v1/denoise", json={"x_t": [[0.0, 1.0]], "t": 0, "condition_ids": [1]}
        )
        assert response.status_code == 400


class TestStartup:
    def test_refuses_to_start_on_missing_model(self, tmp_path):
        import json

        from babel_model_server.app import create_app
        from babel_model_server.config import load_config
        from babel_model_server.models import ModelError

        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "languages": ["en"],
            "classifiers": {"en": {"corpus": "does-not-exist.jsonl"}},
        }), encoding="utf-8")
        with pytest.raises((ModelError, FileNotFoundError)):
            create_app(load_config(bad))


class TestPrimaryContractSuite:
    def test_full_contract_passes(self, transport):
        passed = run_contract_checks(transport, SENTENCE, "en")
        assert len(passed) == 7

    def test_golden_fixtures_replay(self, transport):
        count = replay_golden_fixtures(transport, GOLDEN_PATH, float_tol=1e-4)
        assert count == 10
