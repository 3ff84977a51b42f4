"""Corpus ingestion (JSONL), deterministic splitting, and style profiles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..backends.base import stable_hash
from ..errors import CorpusError

__all__ = ["CorpusRecord", "StyleProfile", "load_corpus", "split_records", "load_profile"]

CORPUS_FIELDS = ("id", "domain", "lang", "text", "style")


@dataclass(frozen=True)
class CorpusRecord:
    """One style-labeled monolingual text."""

    id: str
    domain: str
    lang: str
    text: str
    style: str


def load_corpus(path: str | Path) -> list[CorpusRecord]:
    """Read a JSONL corpus; one record per line, fields exactly
    {"id","domain","lang","text","style"}. Errors carry line numbers."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"line {lineno}: invalid JSON ({err.msg})") from None
            if not isinstance(raw, dict):
                raise CorpusError(f"line {lineno}: expected an object")
            if set(raw) != set(CORPUS_FIELDS):
                missing = sorted(set(CORPUS_FIELDS) - set(raw))
                extra = sorted(set(raw) - set(CORPUS_FIELDS))
                raise CorpusError(
                    f"line {lineno}: fields must be exactly {list(CORPUS_FIELDS)}"
                    + (f", missing {missing}" if missing else "")
                    + (f", unexpected {extra}" if extra else "")
                )
            if any(not isinstance(raw[k], str) for k in CORPUS_FIELDS):
                raise CorpusError(f"line {lineno}: all fields must be strings")
            if not raw["text"]:
                raise CorpusError(f"line {lineno}: empty text")
            if raw["id"] in seen:
                raise CorpusError(f"line {lineno}: duplicate id {raw['id']!r}")
            seen.add(raw["id"])
            records.append(CorpusRecord(**raw))
    return records


def split_key(record_id: str, seed: int) -> int:
    """Stable per-record rank used by the train/test split."""
    return stable_hash(record_id, seed, "split")


def split_records(
    records: list[CorpusRecord], seed: int, train_fraction: float = 0.8
) -> tuple[list[CorpusRecord], list[CorpusRecord]]:
    """Deterministic train/test split by ranking records on a keyed hash of
    their id; the first round(train_fraction * n) ranks train."""
    if not 0 < train_fraction < 1:
        raise CorpusError(f"train_fraction must be in (0, 1), got {train_fraction}")
    ranked = sorted(records, key=lambda r: (split_key(r.id, seed), r.id))
    n_train = round(train_fraction * len(records))
    return ranked[:n_train], ranked[n_train:]


@dataclass(frozen=True)
class StyleProfile:
    """User-supplied exemplars defining the style correspondence.

    samples[label][language] holds at least one exemplar text for every
    declared label/language combination; labels are matched across
    languages by name.
    """

    name: str
    labels: tuple[str, ...]
    languages: tuple[str, ...]
    samples: dict[str, dict[str, tuple[str, ...]]]

    def __post_init__(self) -> None:
        if len(self.labels) < 1:
            raise CorpusError("profile declares no labels")
        for label in self.labels:
            per_lang = self.samples.get(label)
            if per_lang is None:
                raise CorpusError(f"profile {self.name!r}: no samples for label {label!r}")
            for language in self.languages:
                texts = per_lang.get(language, ())
                if len(texts) < 1:
                    raise CorpusError(
                        f"profile {self.name!r}: label {label!r} has no samples "
                        f"for language {language!r}"
                    )

    def exemplars(self, label: str, language: str) -> tuple[str, ...]:
        if label not in self.labels:
            raise CorpusError(f"label {label!r} not in profile {self.name!r}")
        return self.samples[label][language]


def load_profile(path: str | Path) -> StyleProfile:
    """Read a style profile from JSON:
    {"name", "labels", "languages", "samples": {label: {lang: [texts]}}}."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorpusError(f"profile file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise CorpusError(f"profile {path}: invalid JSON ({err.msg})") from None
    try:
        samples = {
            label: {lang: tuple(texts) for lang, texts in per_lang.items()}
            for label, per_lang in raw["samples"].items()
        }
        return StyleProfile(
            name=raw["name"],
            labels=tuple(raw["labels"]),
            languages=tuple(raw["languages"]),
            samples=samples,
        )
    except (KeyError, TypeError, AttributeError) as err:
        raise CorpusError(f"profile {path}: malformed structure ({err})") from None
