"""Synthetic two-style bilingual world for offline evaluation.

Generates a five-domain corpus in a source language ("en") and a toy
target language ("xx", a rot13 letter cipher of it), a word dictionary for
the mock translator, style-marker strip rules, and a style profile with
exemplars per label and language. Formal texts carry Title Case and formal
markers; casual texts are lowercase with casual markers, so character-level
models can separate and restore the styles.
"""

from __future__ import annotations

import codecs
import re
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusRecord, StyleProfile

DOMAINS = ("law", "literature", "wikipedia", "medicine", "education")

_POOLS = {
    "law": (
        ("court", "party", "tribunal", "counsel", "witness"),
        ("order", "review", "approve", "dismiss", "sign"),
        ("contract", "motion", "clause", "appeal", "penalty"),
    ),
    "literature": (
        ("poet", "hero", "stranger", "narrator", "king"),
        ("mourn", "praise", "recall", "forsake", "behold"),
        ("river", "moon", "garden", "winter", "silence"),
    ),
    "wikipedia": (
        ("article", "region", "species", "museum", "archive"),
        ("describe", "record", "cover", "cite", "define"),
        ("history", "population", "structure", "origin", "climate"),
    ),
    "medicine": (
        ("patient", "doctor", "nurse", "clinic", "surgeon"),
        ("treat", "monitor", "examine", "report", "assess"),
        ("dose", "symptom", "therapy", "infection", "recovery"),
    ),
    "education": (
        ("teacher", "student", "class", "tutor", "mentor"),
        ("teach", "explain", "practice", "grade", "revise"),
        ("lesson", "homework", "reading", "quiz", "project"),
    ),
}

_FORMAL_TEMPLATES = (
    "The {A} Shall {B} The {C} Pursuant To Section {N}.",
    "The {A} Shall Hereby {B} Every {C} Forthwith.",
    "Each {A} Shall {B} The {C} Herein Described.",
    "The {A} Is Hereby Directed To {B} The {C}.",
    "Pursuant To The {C}, The {A} Shall {B} It Forthwith.",
)

_CASUAL_TEMPLATES = (
    "yeah the {a} will just {b} the {c} you know.",
    "honestly the {a} is gonna {b} that {c} dude.",
    "the {a} kinda wants to {b} the {c} i guess.",
    "so the {a} will just {b} some {c} yeah.",
    "well the {a} is gonna {b} the {c} whatever.",
)

# Marker neutralisation applied by the style-stripping translator, in the
# source language, longest keys first.
STRIP_RULES: tuple[tuple[str, str], ...] = (
    ("pursuant to", "under"),
    ("forthwith", "at once"),
    ("hereby", "now"),
    ("herein", "here"),
    ("shall", "will"),
    ("gonna", "going to"),
    ("kinda", "a bit"),
    ("yeah", "so"),
    ("dude", "friend"),
)


def cipher_text(text: str) -> str:
    """Toy target language: rot13 over letters, case and punctuation kept."""
    return codecs.encode(text, "rot13")


def cipher_rules(rules: tuple[tuple[str, str], ...]) -> tuple[tuple[str, str], ...]:
    return tuple((cipher_text(a), cipher_text(b)) for a, b in rules)


def _word_forms(texts: list[str]) -> set[str]:
    forms: set[str] = set()
    for text in texts:
        forms.update(re.findall(r"[A-Za-z]+", text))
    return forms


@dataclass(frozen=True)
class SyntheticWorld:
    """Everything a desk-scale end-to-end run needs."""

    source_records: list[CorpusRecord]
    target_records: list[CorpusRecord]
    word_map: dict[str, str]
    strip_rules: tuple[tuple[str, str], ...]
    target_paraphrase_rules: tuple[tuple[str, str], ...]
    profile: StyleProfile
    source_language: str
    target_language: str


def _render(template: str, domain: str, rng: np.random.Generator, formal: bool) -> str:
    roles, verbs, objects = _POOLS[domain]
    a = roles[int(rng.integers(len(roles)))]
    b = verbs[int(rng.integers(len(verbs)))]
    c = objects[int(rng.integers(len(objects)))]
    n = int(rng.integers(1, 10))
    if formal:
        return template.format(A=a.capitalize(), B=b.capitalize(), C=c.capitalize(), N=n)
    return template.format(a=a, b=b, c=c)


def make_synthetic_world(
    records_per_style_per_domain: int = 24,
    seed: int = 0,
    source_language: str = "en",
    target_language: str = "xx",
    exemplars_per_label: int = 4,
) -> SyntheticWorld:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4242]))
    source_records: list[CorpusRecord] = []
    target_records: list[CorpusRecord] = []
    index = 0
    for domain in DOMAINS:
        for style, templates in (("formal", _FORMAL_TEMPLATES), ("casual", _CASUAL_TEMPLATES)):
            for _ in range(records_per_style_per_domain):
                template = templates[int(rng.integers(len(templates)))]
                text = _render(template, domain, rng, style == "formal")
                source_records.append(
                    CorpusRecord(
                        id=f"{source_language}-{index:04d}",
                        domain=domain,
                        lang=source_language,
                        text=text,
                        style=style,
                    )
                )
                target_records.append(
                    CorpusRecord(
                        id=f"{target_language}-{index:04d}",
                        domain=domain,
                        lang=target_language,
                        text=cipher_text(text),
                        style=style,
                    )
                )
                index += 1

    exemplar_rng = np.random.default_rng(np.random.SeedSequence([seed, 4343]))
    samples: dict[str, dict[str, tuple[str, ...]]] = {"formal": {}, "casual": {}}
    for style, templates in (("formal", _FORMAL_TEMPLATES), ("casual", _CASUAL_TEMPLATES)):
        texts = []
        for k in range(exemplars_per_label):
            domain = DOMAINS[k % len(DOMAINS)]
            template = templates[int(exemplar_rng.integers(len(templates)))]
            texts.append(_render(template, domain, exemplar_rng, style == "formal"))
        samples[style][source_language] = tuple(texts)
        samples[style][target_language] = tuple(cipher_text(t) for t in texts)

    profile = StyleProfile(
        name="synthetic-two-style",
        labels=("formal", "casual"),
        languages=(source_language, target_language),
        samples=samples,
    )

    all_texts = [r.text for r in source_records] + [t for s in samples.values() for t in s[source_language]]
    forms = _word_forms(all_texts)
    for _, replacement in STRIP_RULES:
        forms.update(_word_forms([replacement]))
    forms.update({f.lower() for f in forms})
    word_map = {form: cipher_text(form) for form in sorted(forms)}

    # Target-language paraphrase rules stay empty: in the toy target
    # language style lives in the casing, so lowercasing alone neutralizes
    # it, and substitution-free pairs keep denoiser training pairs
    # position-aligned.
    return SyntheticWorld(
        source_records=source_records,
        target_records=target_records,
        word_map=word_map,
        strip_rules=STRIP_RULES,
        target_paraphrase_rules=(),
        profile=profile,
        source_language=source_language,
        target_language=target_language,
    )
