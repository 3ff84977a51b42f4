"""Command-line entry point.

Subcommands: detect, repair, evaluate, sweep, train-toy, capabilities.
Exit codes: 0 success, 1 invalid input, 2 runtime failure. Every run echoes
its resolved configuration (defaults included) to the log; machine-readable
results go to --out, a human summary to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .applicator import GuidanceSet, train_denoiser
from .backends.base import Backend
from .backends.persist import load_reference_backend, save_reference_backend
from .backends.protocol import ProtocolHandler, StubTransport
from .backends.reference import ReferenceBackend, make_reference_backend
from .backends.remote import RemoteBackend
from .configs import DetectionConfig, DiffusionConfig, RepairConfig, TrainingConfig
from .detector import check_consistency
from .errors import BabelError, ConfigError, CorpusError, ValidationError
from .harness.corpus import StyleProfile, load_corpus, load_profile, split_records
from .harness.evaluate import evaluate_system, sweep_parameter
from .harness.report import emit_report
from .harness.synthetic import STRIP_RULES, cipher_text
from .harness.translate import (
    CachedTranslationClient,
    HttpTranslationClient,
    IdentityClient,
    MockTranslator,
)
from .repair import repair

log = logging.getLogger("babel")

DEFAULTS_HELP = (
    "defaults mirror the published configuration: h=0.5, tau=0.3, lambda=1000, "
    "T=800, candidates=4, sts-threshold=0.85; top-p=0.9 is this toolkit's choice "
    "(the source method uses nucleus sampling without printing p)"
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="babel",
        description="Detect and repair style drift in machine translations. " + DEFAULTS_HELP,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, need_corpus: bool = True) -> None:
        if need_corpus:
            p.add_argument("--corpus", required=True, help="JSONL corpus path")
        p.add_argument(
            "--backend",
            default="reference",
            help="reference | dir:PATH (saved toy backend) | stub:SEED (in-process "
            "wire-protocol stub) | remote:URL",
        )
        p.add_argument("--profile", default=None, help="style profile JSON (default: derived from corpus)")
        p.add_argument("--source-lang", default="en")
        p.add_argument("--target-lang", default="xx")
        p.add_argument(
            "--translator",
            default="mock-strip-hash",
            help="identity | mock | mock-strip | mock-strip-hash | http:URL",
        )
        p.add_argument("--dictionary", default=None, help="JSON word map for mock translators")
        p.add_argument("--cache-dir", default=None, help="translation cache (default $BABEL_CACHE_DIR)")
        p.add_argument("--h", type=float, default=0.5, help="detection threshold h in (0,1) [default 0.5]")
        p.add_argument("--tau", type=float, default=0.3, help="sampling temperature tau > 0 [default 0.3]")
        p.add_argument(
            "--lambda",
            dest="guidance_strength",
            type=float,
            default=1000.0,
            help="guidance strength lambda >= 0 [default 1000]",
        )
        p.add_argument("--T", type=int, default=800, help="diffusion steps T [default 800]")
        p.add_argument("--top-p", type=float, default=0.9, help="nucleus mass in (0,1] [default 0.9]")
        p.add_argument("--candidates", type=int, default=4, help="repair candidates [default 4]")
        p.add_argument(
            "--sts-threshold", type=float, default=0.85, help="semantic gate in [-1,1] [default 0.85]"
        )
        p.add_argument("--seed", type=int, default=0, help="master seed [default 0]")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers [default 1]")
        p.add_argument("--train-steps", type=int, default=300, help="toy denoiser training steps")
        p.add_argument("--train-batch", type=int, default=16, help="toy denoiser batch size")
        p.add_argument("--train-lr", type=float, default=1.0, help="toy denoiser learning rate")
        p.add_argument("--out", default=None, help="write machine-readable results here")

    p_detect = sub.add_parser("detect", help="flag stylistically inconsistent translations")
    add_common(p_detect)

    p_repair = sub.add_parser("repair", help="repair flagged translations")
    add_common(p_repair)

    p_eval = sub.add_parser("evaluate", help="full detect+repair evaluation with per-domain metrics")
    add_common(p_eval)
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")

    p_sweep = sub.add_parser("sweep", help="sweep h, tau, or lambda over a grid")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("h", "tau", "lambda"))
    p_sweep.add_argument("--values", required=True, help="comma-separated strictly increasing grid")

    p_train = sub.add_parser("train-toy", help="train the reference backend and save it")
    add_common(p_train)

    p_caps = sub.add_parser("capabilities", help="print a remote backend's handshake")
    p_caps.add_argument("--endpoint", required=True, help="remote:URL, http(s)://URL, or stub:SEED")
    p_caps.add_argument("--out", default=None)

    return parser


def _validated_configs(args: argparse.Namespace) -> RepairConfig:
    flag_map = {
        "--h": lambda: DetectionConfig(threshold=args.h),
        "--tau/--lambda/--T/--top-p/--seed": lambda: DiffusionConfig(
            total_steps=args.T,
            temperature=args.tau,
            guidance_strength=args.guidance_strength,
            top_p=args.top_p,
            rng_seed=args.seed,
        ),
    }
    built = {}
    for flag, make in flag_map.items():
        try:
            built[flag] = make()
        except ConfigError as err:
            raise ConfigError(f"{flag}: {err}") from None
    try:
        return RepairConfig(
            candidate_count=args.candidates,
            sts_threshold=args.sts_threshold,
            diffusion=built["--tau/--lambda/--T/--top-p/--seed"],
            detection=built["--h"],
        )
    except ConfigError as err:
        raise ConfigError(f"--candidates/--sts-threshold: {err}") from None


def _build_backend(spec: str, languages: tuple[str, ...]) -> Backend:
    if spec == "reference":
        return make_reference_backend(seed=0, languages=languages)
    if spec.startswith("dir:"):
        return load_reference_backend(spec[4:])
    if spec.startswith("stub:"):
        inner = make_reference_backend(seed=int(spec[5:]), languages=languages)
        return RemoteBackend(StubTransport(ProtocolHandler(inner)), endpoint=spec)
    if spec.startswith("remote:"):
        return RemoteBackend.connect(spec[len("remote:"):])
    raise ConfigError(f"--backend: unknown backend spec {spec!r}")


def _build_translator(args: argparse.Namespace, corpus_texts: list[str]):
    name = args.translator
    if name == "identity":
        client = IdentityClient()
    elif name.startswith("http:") or name.startswith("https:"):
        client = HttpTranslationClient(name=name, endpoint=name, api_key_env="BABEL_MT_API_KEY")
    elif name in ("mock", "mock-strip", "mock-strip-hash"):
        if args.dictionary:
            word_map = json.loads(Path(args.dictionary).read_text(encoding="utf-8"))
        else:
            import re

            forms: set[str] = set()
            for text in corpus_texts:
                forms.update(re.findall(r"[A-Za-z]+", text))
            for _, replacement in STRIP_RULES:
                forms.update(re.findall(r"[A-Za-z]+", replacement))
            forms.update({f.lower() for f in forms})
            word_map = {form: cipher_text(form) for form in forms}
        mode = {"mock": "never", "mock-strip": "always", "mock-strip-hash": "hash"}[name]
        client = MockTranslator(word_map, strip_mode=mode, strip_rules=STRIP_RULES, name=name)
    else:
        raise ConfigError(f"--translator: unknown translator {name!r}")
    cache_dir = args.cache_dir
    if cache_dir is None:
        import os

        cache_dir = os.environ.get("BABEL_CACHE_DIR")
    if cache_dir:
        client = CachedTranslationClient(client, cache_dir)
    return client


def _profile_from_corpus(records, languages: tuple[str, ...], exemplars: int = 4) -> StyleProfile:
    labels = tuple(sorted({r.style for r in records}))
    samples: dict[str, dict[str, tuple[str, ...]]] = {}
    for label in labels:
        samples[label] = {}
        for language in languages:
            texts = [r.text for r in records if r.style == label and r.lang == language]
            samples[label][language] = tuple(texts[:exemplars])
    return StyleProfile(
        name="derived-from-corpus", labels=labels, languages=languages, samples=samples
    )


def _prepare_world(args: argparse.Namespace, need_denoiser: bool):
    """Load corpus, split, build backend(s), fit detectors (and the toy
    denoiser when repairs will run)."""
    records = load_corpus(args.corpus)
    languages = (args.source_lang, args.target_lang)
    train, test = split_records(records, seed=args.seed)
    backend = _build_backend(args.backend, languages)
    profile = (
        load_profile(args.profile)
        if args.profile
        else _profile_from_corpus(train, languages)
    )

    if isinstance(backend, ReferenceBackend):
        for language in languages:
            texts = [r.text for r in train if r.lang == language]
            labels = [r.style for r in train if r.lang == language]
            if texts:
                backend.fit_style_classifier(language, texts, labels)
        if need_denoiser and not backend.denoiser.trained:
            target_texts = [r.text for r in train if r.lang == args.target_lang]
            if not target_texts:
                raise ValidationError(
                    f"no {args.target_lang!r} records in the train split to train the denoiser"
                )
            training = TrainingConfig(
                steps=args.train_steps,
                batch_size=args.train_batch,
                learning_rate=args.train_lr,
                total_steps=args.T,
                seed=args.seed,
            )
            log.info("training toy denoiser: %s", training)
            train_denoiser(target_texts, backend, training)
    backends = {language: backend for language in languages}
    eval_records = [r for r in test if r.lang == args.source_lang]
    translator = _build_translator(args, [r.text for r in records])
    return records, eval_records, backends, profile, translator


def _write_out(args: argparse.Namespace, payload: dict) -> None:
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )


def _cmd_detect(args: argparse.Namespace) -> int:
    config = _validated_configs(args)
    _, eval_records, backends, profile, translator = _prepare_world(args, need_denoiser=False)
    report = evaluate_system(
        eval_records,
        translator,
        profile,
        config,
        backends,
        args.target_lang,
        seed=args.seed,
        jobs=args.jobs,
        repair_flagged=False,
        keep_outcomes=True,
    )
    verdicts = [
        {
            "id": o.record.id,
            "domain": o.record.domain,
            "translation": o.translation,
            "source_label": o.verdict.source_label,
            "confidence": o.verdict.translation_confidence,
            "flagged": o.verdict.flagged,
        }
        for o in report.outcomes
    ]
    _write_out(args, {"threshold": args.h, "verdicts": verdicts})
    flagged = sum(v["flagged"] for v in verdicts)
    print(f"detect: {flagged}/{len(verdicts)} translations flagged at h={args.h}")
    return 0


def _cmd_repair(args: argparse.Namespace) -> int:
    config = _validated_configs(args)
    _, eval_records, backends, profile, translator = _prepare_world(args, need_denoiser=True)
    results = []
    repaired = 0
    for record in eval_records:
        translation = translator.translate(record.text, record.lang, args.target_lang)
        verdict = check_consistency(
            record.text, record.lang, translation, args.target_lang,
            config.detection, backends, profile.labels,
        )
        if not verdict.flagged:
            continue
        guidance = GuidanceSet.from_texts(
            list(profile.exemplars(verdict.source_label, args.target_lang)),
            args.target_lang,
            backends[args.target_lang],
        )
        outcome = repair(
            record.text, record.lang, translation, args.target_lang,
            guidance, config, backends, seed=args.seed, label_order=profile.labels,
        )
        repaired += 0 if outcome.fallback_to_original else 1
        results.append(
            {
                "id": record.id,
                "translation": translation,
                "final_text": outcome.final_text,
                "fallback_to_original": outcome.fallback_to_original,
                "selected_index": outcome.selected_index,
                "candidates": [asdict(c) for c in outcome.candidates],
            }
        )
    _write_out(args, {"repairs": results})
    print(f"repair: {repaired}/{len(results)} flagged translations repaired")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _validated_configs(args)
    _, eval_records, backends, profile, translator = _prepare_world(args, need_denoiser=True)
    report = evaluate_system(
        eval_records, translator, profile, config, backends,
        args.target_lang, seed=args.seed, jobs=args.jobs,
    )
    if args.out:
        emit_report(report, args.out, fmt=args.format)
    avg = report.average
    print(
        f"evaluate[{translator.name}]: bias {avg.bias_ratio:.2%} -> {avg.revised_bias_ratio:.2%}, "
        f"style {avg.style_score:.3f} -> {avg.revised_style_score:.3f}, "
        f"sts {'n/a' if avg.sts_mean is None else f'{avg.sts_mean:.3f}'}"
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _validated_configs(args)
    try:
        grid = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: not a numeric list: {args.values!r}") from None
    if not grid:
        raise ConfigError("--values: empty grid")
    need_denoiser = args.param in ("tau", "lambda")
    _, eval_records, backends, profile, translator = _prepare_world(args, need_denoiser)
    gold = None
    if args.param == "h" and isinstance(translator, MockTranslator):
        gold = [translator.did_strip(r.text) for r in eval_records]
    elif args.param == "h" and isinstance(translator, CachedTranslationClient) and isinstance(
        translator.inner, MockTranslator
    ):
        gold = [translator.inner.did_strip(r.text) for r in eval_records]
    result = sweep_parameter(
        args.param, grid, eval_records, translator, profile, config, backends,
        args.target_lang, seed=args.seed, gold=gold,
    )
    _write_out(args, result.to_dict())
    print(f"sweep {args.param}: {len(result.values)} grid points")
    return 0


def _cmd_train_toy(args: argparse.Namespace) -> int:
    _validated_configs(args)
    if not args.out:
        raise ConfigError("--out: train-toy needs an output directory")
    _, _, backends, _, _ = _prepare_world(args, need_denoiser=True)
    backend = backends[args.target_lang]
    if not isinstance(backend, ReferenceBackend):
        raise ConfigError("--backend: train-toy requires the reference backend")
    save_reference_backend(backend, args.out)
    print(f"train-toy: saved trained backend under {args.out}")
    return 0


def _cmd_capabilities(args: argparse.Namespace) -> int:
    spec = args.endpoint
    if spec.startswith("stub:"):
        backend = RemoteBackend(
            StubTransport(ProtocolHandler(make_reference_backend(seed=int(spec[5:])))),
            endpoint=spec,
        )
    else:
        url = spec[len("remote:"):] if spec.startswith("remote:") else spec
        backend = RemoteBackend.connect(url)
    desc = backend.descriptor()
    payload = {
        "kind": desc.kind,
        "embedding_dim": desc.embedding_dim,
        "vocab_size": desc.vocab_size,
        "style_labels": list(desc.style_labels),
        "languages": list(desc.languages),
        "max_sequence_len": desc.max_sequence_len,
        "endpoint": desc.endpoint,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(payload, indent=2))
    return 0


_COMMANDS = {
    "detect": _cmd_detect,
    "repair": _cmd_repair,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "train-toy": _cmd_train_toy,
    "capabilities": _cmd_capabilities,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return 0 if exit_.code in (0, None) else 1
    log.info("resolved config: %s", json.dumps(vars(args), sort_keys=True, default=str))
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValidationError, CorpusError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except BabelError as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
