"""Translation clients: mocks for hermetic runs, a generic HTTP adapter
with retries for real systems, and a content-addressed disk cache."""

from __future__ import annotations

import hashlib
import json
import re
import time
from abc import ABC, abstractmethod
from pathlib import Path

from ..backends.base import stable_hash
from ..errors import TranslationError

__all__ = [
    "TranslationClient",
    "IdentityClient",
    "MockTranslator",
    "CachedTranslationClient",
    "HttpTranslationClient",
]


class TranslationClient(ABC):
    name: str

    @abstractmethod
    def translate(self, text: str, source_lang: str, target_lang: str) -> str: ...


class IdentityClient(TranslationClient):
    """Returns the input unchanged."""

    name = "identity"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        return text


class MockTranslator(TranslationClient):
    """Deterministic dictionary-based word mapper with a style-strip toggle.

    strip_mode:
      never  - plain word mapping, style markers and casing survive;
      always - lowercase and neutralize markers first, then map;
      hash   - strip exactly the texts whose keyed hash is even, a
               deterministic mix of both behaviours (``did_strip`` exposes
               the decision as the gold inconsistency label).
    """

    def __init__(
        self,
        word_map: dict[str, str],
        strip_mode: str = "never",
        strip_rules: tuple[tuple[str, str], ...] = (),
        name: str | None = None,
    ):
        if strip_mode not in ("never", "always", "hash"):
            raise TranslationError(f"unknown strip_mode {strip_mode!r}")
        self.word_map = dict(word_map)
        self.strip_mode = strip_mode
        self.strip_rules = tuple(strip_rules)
        self.name = name or f"mock-{strip_mode}"

    def did_strip(self, text: str) -> bool:
        if self.strip_mode == "never":
            return False
        if self.strip_mode == "always":
            return True
        return stable_hash(text, 0, "strip-toggle") % 2 == 0

    def _strip(self, text: str) -> str:
        out = text.lower()
        for marker, plain in sorted(self.strip_rules, key=lambda r: -len(r[0])):
            out = re.sub(rf"(?<![a-z]){re.escape(marker)}(?![a-z])", plain, out)
        return out

    def _map_words(self, text: str) -> str:
        return re.sub(r"[A-Za-z]+", lambda m: self.word_map.get(m.group(0), m.group(0)), text)

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        if self.did_strip(text):
            text = self._strip(text)
        return self._map_words(text)


class CachedTranslationClient(TranslationClient):
    """Disk cache keyed by (client name, language pair, text).

    A hit returns the stored translation byte-for-byte without touching the
    wrapped client, which makes evaluation reruns hermetic. Writes go
    through a temp file then an atomic rename, so concurrent readers never
    see partial files.
    """

    def __init__(self, inner: TranslationClient, cache_dir: str | Path):
        self.inner = inner
        self.name = inner.name
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _key(self, text: str, source_lang: str, target_lang: str) -> Path:
        payload = "\x00".join((self.inner.name, source_lang, target_lang, text))
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        path = self._key(text, source_lang, target_lang)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))["translation"]
        translation = self.inner.translate(text, source_lang, target_lang)
        record = {
            "client": self.inner.name,
            "source_lang": source_lang,
            "target_lang": target_lang,
            "text": text,
            "translation": translation,
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, ensure_ascii=False, sort_keys=True), encoding="utf-8")
        tmp.replace(path)
        return translation


class HttpTranslationClient(TranslationClient):
    """JSON-over-HTTP adapter: POST {text, source_lang, target_lang} to an
    endpoint, expect {"translation": ...} back.

    Credentials come only from the named environment variable and travel in
    the Authorization header. Transient failures are retried 3 times with
    exponential backoff before surfacing a TranslationError.
    """

    def __init__(
        self,
        name: str,
        endpoint: str,
        api_key_env: str | None = None,
        session=None,
        retries: int = 3,
        backoff: float = 0.2,
        sleep=time.sleep,
        timeout: float = 30.0,
    ):
        import os

        import requests

        self.name = name
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        self.timeout = timeout
        self.headers = {}
        if api_key_env:
            key = os.environ.get(api_key_env)
            if not key:
                raise TranslationError(f"environment variable {api_key_env} is not set")
            self.headers["Authorization"] = f"Bearer {key}"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        body = {"text": text, "source_lang": source_lang, "target_lang": target_lang}
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = self.session.post(
                    self.endpoint, json=body, headers=self.headers, timeout=self.timeout
                )
                if response.status_code >= 500:
                    raise TranslationError(f"server error {response.status_code}")
                if response.status_code >= 400:
                    raise TranslationError(
                        f"client error {response.status_code}: {response.text[:200]}"
                    )
                payload = response.json()
                if "translation" not in payload:
                    raise TranslationError("response missing 'translation' field")
                return payload["translation"]
            except TranslationError as err:
                last_error = err
                if "client error" in str(err):
                    break  # 4xx will not heal on retry
            except Exception as err:  # timeouts, connection resets
                last_error = err
            self.sleep(self.backoff * 2**attempt)
        raise TranslationError(
            f"{self.name}: translation failed after {self.retries} attempts: {last_error}"
        )
