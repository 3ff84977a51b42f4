"""In-process handler for the backend wire protocol.

Maps protocol requests onto any Backend instance. Serves two purposes:
hermetic tests of the remote client (via StubTransport, no sockets), and a
single place that documents the exact request/response shapes; the field
names here match docs/protocol.md.
"""

from __future__ import annotations

import numpy as np

from ..errors import BabelError, CapabilityError, NotReadyError, ValidationError
from .base import Backend, TokenSequence

__all__ = ["ProtocolHandler", "StubTransport"]


class ProtocolHandler:
    """Translate (method, path, body) triples into backend calls."""

    def __init__(self, backend: Backend):
        self.backend = backend

    def handle(
        self, method: str, path: str, body: dict | None = None, params: dict | None = None
    ) -> tuple[int, dict]:
        try:
            return self._dispatch(method, path, body or {}, params or {})
        except (ValidationError, CapabilityError) as err:
            return 400, {"code": "invalid_input", "message": str(err)}
        except NotReadyError as err:
            return 503, {"code": "not_ready", "message": str(err)}
        except KeyError as err:
            return 400, {"code": "missing_field", "message": f"missing field {err}"}
        except BabelError as err:
            return 500, {"code": "internal", "message": str(err)}

    def _dispatch(self, method: str, path: str, body: dict, params: dict) -> tuple[int, dict]:
        desc = self.backend.descriptor()
        if method == "GET" and path == "/v1/capabilities":
            return 200, {
                "embedding_dim": desc.embedding_dim,
                "vocab_size": desc.vocab_size,
                "style_labels": list(desc.style_labels),
                "languages": list(desc.languages),
                "max_sequence_len": desc.max_sequence_len,
            }
        if method != "POST":
            return 404, {"code": "not_found", "message": f"no route {method} {path}"}
        if path == "/v1/tokenize":
            tokens = self.backend.tokenize(body["text"])
            return 200, {"ids": list(tokens.ids)}
        if path == "/v1/detokenize":
            tokens = TokenSequence(tuple(int(i) for i in body["ids"]), desc.vocab_size)
            return 200, {"text": self.backend.detokenize(tokens)}
        if path == "/v1/embed":
            tokens = TokenSequence(tuple(int(i) for i in body["ids"]), desc.vocab_size)
            return 200, {"embeddings": self.backend.embed_tokens(tokens).tolist()}
        if path == "/v1/style_embed":
            return 200, {"embedding": self.backend.style_embed(body["text"]).tolist()}
        if path == "/v1/classify":
            dist = self.backend.classify_style(body["text"], body["language"])
            return 200, {"distribution": dist.as_dict()}
        if path == "/v1/paraphrase":
            return 200, {"text": self.backend.paraphrase(body["text"], int(body.get("seed", 0)))}
        if path == "/v1/denoise":
            x_t = np.asarray(body["x_t"], dtype=np.float64)
            condition = TokenSequence(
                tuple(int(i) for i in body["condition_ids"]), desc.vocab_size
            )
            logits = self.backend.denoise(x_t, int(body["t"]), condition)
            return 200, {"logits": logits.tolist()}
        return 404, {"code": "not_found", "message": f"no route {method} {path}"}


class StubTransport:
    """Transport adapter over a ProtocolHandler; used for socketless tests
    and the CLI's ``stub:`` endpoints."""

    def __init__(self, handler: ProtocolHandler):
        self.handler = handler

    def request(
        self, method: str, path: str, body: dict | None = None, params: dict | None = None
    ) -> tuple[int, dict]:
        return self.handler.handle(method, path, body, params)
