"""HTTP client for the backend wire protocol.

Construction performs the capabilities handshake and fails fast when a
required field is missing. Requests run through a pluggable transport; the
bundled HttpTransport bounds in-flight concurrency with a semaphore.
"""

from __future__ import annotations

import threading

import numpy as np

from ..errors import ProtocolError, ValidationError
from .base import Backend, BackendDescriptor, StyleDistribution, TokenSequence

__all__ = ["HttpTransport", "RemoteBackend"]

_HANDSHAKE_FIELDS = ("embedding_dim", "vocab_size", "style_labels", "languages", "max_sequence_len")


class HttpTransport:
    """requests-based transport with a bounded in-flight limit."""

    def __init__(self, base_url: str, session=None, timeout: float = 60.0, max_in_flight: int = 4):
        import requests

        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def request(
        self, method: str, path: str, body: dict | None = None, params: dict | None = None
    ) -> tuple[int, dict]:
        with self._gate:
            try:
                response = self.session.request(
                    method,
                    self.base_url + path,
                    json=body,
                    params=params,
                    timeout=self.timeout,
                )
            except Exception as err:
                raise ProtocolError(f"transport failure on {method} {path}: {err}") from err
        try:
            payload = response.json()
        except ValueError:
            raise ProtocolError(
                f"non-JSON response ({response.status_code}) from {method} {path}"
            ) from None
        return response.status_code, payload


class RemoteBackend(Backend):
    """Backend proxy speaking the wire protocol of docs/protocol.md."""

    def __init__(self, transport, endpoint: str | None = None, table_chunk: int = 256):
        self.transport = transport
        self.endpoint = endpoint
        self.table_chunk = table_chunk
        self._table_cache: np.ndarray | None = None
        status, payload = transport.request("GET", "/v1/capabilities")
        if status != 200:
            raise ProtocolError(f"capabilities handshake failed with status {status}: {payload}")
        missing = [f for f in _HANDSHAKE_FIELDS if f not in payload]
        if missing:
            raise ProtocolError(f"capabilities handshake missing fields {missing}")
        self._descriptor = BackendDescriptor(
            kind="remote",
            embedding_dim=int(payload["embedding_dim"]),
            vocab_size=int(payload["vocab_size"]),
            style_labels=tuple(payload["style_labels"]),
            languages=tuple(payload["languages"]),
            max_sequence_len=int(payload["max_sequence_len"]),
            endpoint=endpoint,
        )

    @classmethod
    def connect(cls, url: str, max_in_flight: int = 4) -> "RemoteBackend":
        return cls(HttpTransport(url, max_in_flight=max_in_flight), endpoint=url)

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def _call(self, path: str, body: dict, params: dict | None = None) -> dict:
        status, payload = self.transport.request("POST", path, body, params)
        if status != 200:
            code = payload.get("code", "unknown")
            message = payload.get("message", str(payload))
            raise ProtocolError(f"{path} failed ({status}, {code}): {message}")
        return payload

    def tokenize(self, text: str) -> TokenSequence:
        payload = self._call("/v1/tokenize", {"text": text})
        return TokenSequence(tuple(int(i) for i in payload["ids"]), self._descriptor.vocab_size)

    def detokenize(self, tokens: TokenSequence) -> str:
        payload = self._call("/v1/detokenize", {"ids": list(tokens.ids)})
        return payload["text"]

    def embed_tokens(self, tokens: TokenSequence) -> np.ndarray:
        payload = self._call("/v1/embed", {"ids": list(tokens.ids)})
        matrix = np.asarray(payload["embeddings"], dtype=np.float64)
        if matrix.shape != (len(tokens), self._descriptor.embedding_dim):
            raise ProtocolError(f"embed returned shape {matrix.shape}")
        return matrix

    def embedding_table(self) -> np.ndarray:
        if self._table_cache is None:
            vocab = self._descriptor.vocab_size
            chunks = []
            for start in range(0, vocab, self.table_chunk):
                ids = tuple(range(start, min(start + self.table_chunk, vocab)))
                chunks.append(self.embed_tokens(TokenSequence(ids, vocab)))
            self._table_cache = np.concatenate(chunks, axis=0)
        return self._table_cache

    def style_embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValidationError("cannot embed an empty text")
        payload = self._call("/v1/style_embed", {"text": text})
        vec = np.asarray(payload["embedding"], dtype=np.float64)
        if vec.shape != (self._descriptor.embedding_dim,):
            raise ProtocolError(f"style_embed returned shape {vec.shape}")
        return vec

    def classify_style(self, text: str, language: str) -> StyleDistribution:
        payload = self._call("/v1/classify", {"text": text, "language": language})
        dist = payload["distribution"]
        try:
            probs = tuple(float(dist[label]) for label in self._descriptor.style_labels)
        except KeyError as missing:
            raise ProtocolError(f"classify response missing label {missing}") from None
        return StyleDistribution(self._descriptor.style_labels, probs)

    def paraphrase(self, text: str, seed: int = 0) -> str:
        if not text:
            raise ValidationError("cannot paraphrase an empty text")
        payload = self._call("/v1/paraphrase", {"text": text, "seed": int(seed)})
        return payload["text"]

    def denoise(self, x_t: np.ndarray, t: int, condition: TokenSequence) -> np.ndarray:
        body = {
            "x_t": np.asarray(x_t, dtype=np.float64).tolist(),
            "t": int(t),
            "condition_ids": list(condition.ids),
        }
        payload = self._call("/v1/denoise", body)
        logits = np.asarray(payload["logits"], dtype=np.float64)
        if logits.ndim != 2 or logits.shape[1] != self._descriptor.vocab_size:
            raise ProtocolError(f"denoise returned shape {logits.shape}")
        return logits
