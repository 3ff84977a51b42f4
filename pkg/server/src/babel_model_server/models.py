"""Model zoo behind the wire protocol.

Desk-scale implementations trained from corpora or loaded from npz
checkpoints: a character tokenizer, seeded token embeddings, a hashed
n-gram sentence/style embedder, per-language logistic style classifiers, a
rule-based paraphraser with an optional sampling mode, and an affine
denoiser. Larger transformer-backed models can be substituted behind the
same endpoints by loading their outputs into the same interfaces.
"""

from __future__ import annotations

import json
import math
import re
import threading
from pathlib import Path

import numpy as np

from .config import ClassifierSpec, DenoiserSpec, ServerConfig


class ModelError(Exception):
    pass


class NotReady(ModelError):
    pass


def fnv1a(data: str, seed: int) -> int:
    value = (0xCBF29CE484222325 ^ (seed * 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
    for byte in data.encode("utf-8"):
        value ^= byte
        value = (value * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return value


class CharTokenizer:
    def __init__(self, alphabet: str):
        self.alphabet = alphabet
        self.index = {ch: i for i, ch in enumerate(alphabet)}

    @property
    def vocab_size(self) -> int:
        return len(self.alphabet)

    def encode(self, text: str) -> list[int]:
        try:
            return [self.index[ch] for ch in text]
        except KeyError as missing:
            raise ModelError(f"character {missing} outside the server alphabet") from None

    def decode(self, ids: list[int]) -> str:
        if any(not 0 <= i < self.vocab_size for i in ids):
            raise ModelError("token id outside the vocabulary")
        return "".join(self.alphabet[i] for i in ids)


class TokenEmbedder:
    """Per-token seeded Gaussian rows; any row recomputable in isolation."""

    def __init__(self, vocab_size: int, dim: int, seed: int):
        self.dim = dim
        rows = [
            np.random.default_rng(np.random.SeedSequence([seed, 11, v])).standard_normal(dim)
            / math.sqrt(dim)
            for v in range(vocab_size)
        ]
        self.table = np.stack(rows)

    def rows(self, ids: list[int]) -> np.ndarray:
        return self.table[ids]


class NgramEmbedder:
    """Signed hashed character 1..3-gram vector, unit norm."""

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.seed = seed

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ModelError("cannot embed an empty text")
        vec = np.zeros(self.dim)
        for n in range(1, 4):
            for i in range(len(text) - n + 1):
                h = fnv1a(text[i : i + n], self.seed)
                vec[h % self.dim] += 1.0 if (h >> 63) & 1 else -1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ModelError("degenerate n-gram vector")
        return vec / norm


class StyleClassifier:
    """Multinomial logistic head over hashed n-gram features."""

    FEATURE_DIM = 2048

    def __init__(self, labels: tuple[str, ...], seed: int):
        self.labels = labels
        self.features = NgramEmbedder(self.FEATURE_DIM, seed ^ 0x5A5A)
        self.weights: np.ndarray | None = None
        self.bias: np.ndarray | None = None

    def fit(self, texts: list[str], labels: list[str], steps: int, lr: float) -> None:
        x = np.stack([self.features.embed(t) for t in texts])
        y = np.zeros((len(texts), len(self.labels)))
        for i, label in enumerate(labels):
            y[i, self.labels.index(label)] = 1.0
        w = np.zeros((len(self.labels), self.FEATURE_DIM))
        b = np.zeros(len(self.labels))
        for _ in range(steps):
            logits = x @ w.T + b
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            grad = (p - y) / len(texts)
            w -= lr * (grad.T @ x + 1e-4 * w)
            b -= lr * grad.sum(axis=0)
        self.weights, self.bias = w, b

    def predict(self, text: str) -> dict[str, float]:
        if self.weights is None:
            raise NotReady("classifier not loaded")
        logits = self.weights @ self.features.embed(text) + self.bias
        logits -= logits.max()
        p = np.exp(logits)
        p /= p.sum()
        return {label: float(v) for label, v in zip(self.labels, p)}

    def save(self, path: Path) -> None:
        np.savez(path, weights=self.weights, bias=self.bias, labels=list(self.labels))

    def load(self, path: Path) -> None:
        data = np.load(path, allow_pickle=False)
        self.weights = data["weights"]
        self.bias = data["bias"]


PARAPHRASE_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("pursuant to", ("under", "according to")),
    ("notwithstanding", ("despite", "even with")),
    ("forthwith", ("at once", "right away")),
    ("hereby", ("now", "with this")),
    ("herein", ("here", "in this text")),
    ("shall", ("will", "must")),
    ("commence", ("start", "begin")),
    ("terminate", ("end", "stop")),
    ("utilize", ("use", "apply")),
    ("gonna", ("going to",)),
    ("wanna", ("want to",)),
    ("kinda", ("a bit",)),
    ("yeah", ("yes",)),
    ("dude", ("friend",)),
)


class Paraphraser:
    """Lowercase and neutralize style markers.

    Sampling mode picks among synonym alternatives with a seeded generator;
    deterministic mode always takes the first alternative, so the output
    depends on the text alone.
    """

    def paraphrase(self, text: str, seed: int, deterministic: bool) -> str:
        if not text:
            raise ModelError("cannot paraphrase an empty text")
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 23]))
        out = text.lower()
        for marker, choices in sorted(PARAPHRASE_TABLE, key=lambda r: -len(r[0])):
            pick = choices[0] if deterministic else choices[int(rng.integers(len(choices)))]
            out = re.sub(rf"(?<![a-z]){re.escape(marker)}(?![a-z])", pick, out)
        return out


class AffineDenoiser:
    """Per-position affine map over gated diffusion-state features."""

    TIME_DIM = 8

    def __init__(self, vocab_size: int, dim: int, seed: int):
        self.vocab_size = vocab_size
        self.dim = dim
        feature_dim = 3 * dim + self.TIME_DIM
        rng = np.random.default_rng(np.random.SeedSequence([seed, 31]))
        self.weights = 0.01 * rng.standard_normal((vocab_size, feature_dim))
        self.bias = np.zeros(vocab_size)
        self.time_scale: int | None = None

    def _features(self, x_t: np.ndarray, t: int, cond: np.ndarray) -> np.ndarray:
        if self.time_scale is None:
            raise NotReady("denoiser not loaded")
        rows = x_t.shape[0]
        signal = math.sqrt((self.time_scale - min(t, self.time_scale)) / self.time_scale)
        gate = 1.0 if t > 0 else 0.0
        aligned = np.zeros((rows, self.dim))
        take = min(rows, cond.shape[0])
        aligned[:take] = cond[:take]
        phase = t / self.time_scale
        k = np.arange(self.TIME_DIM // 2)
        angles = math.pi * phase * (2.0**k)
        time_f = np.broadcast_to(
            np.concatenate([np.sin(angles), np.cos(angles)]), (rows, self.TIME_DIM)
        )
        mean_cond = np.broadcast_to(cond.mean(axis=0), (rows, self.dim))
        return np.concatenate([signal * x_t, time_f, gate * aligned, mean_cond], axis=1)

    def logits(self, x_t: np.ndarray, t: int, cond: np.ndarray) -> np.ndarray:
        out = self._features(x_t, t, cond) @ self.weights.T + self.bias
        if not np.all(np.isfinite(out)):
            raise ModelError("denoiser produced non-finite logits")
        return out

    def train(
        self,
        texts: list[str],
        tokenizer: CharTokenizer,
        embedder: TokenEmbedder,
        paraphraser: Paraphraser,
        spec: DenoiserSpec,
    ) -> None:
        self.time_scale = spec.total_steps
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 41]))
        prepared = []
        for text in texts:
            target = tokenizer.encode(text)
            condition = tokenizer.encode(paraphraser.paraphrase(text, 0, True))
            prepared.append((np.array(target), embedder.rows(target), embedder.rows(condition)))
        for _ in range(spec.steps):
            grad_w = np.zeros_like(self.weights)
            grad_b = np.zeros_like(self.bias)
            positions = 0
            for _ in range(spec.batch_size):
                target, target_rows, cond_rows = prepared[int(rng.integers(len(prepared)))]
                t = int(rng.integers(0, spec.total_steps + 1))
                b = math.sqrt((spec.total_steps - t) / spec.total_steps)
                x_t = math.sqrt(b) * target_rows + math.sqrt(1 - b) * rng.standard_normal(
                    target_rows.shape
                )
                features = self._features(x_t, t, cond_rows)
                logits = features @ self.weights.T + self.bias
                logits -= logits.max(axis=1, keepdims=True)
                p = np.exp(logits)
                p /= p.sum(axis=1, keepdims=True)
                p[np.arange(len(target)), target] -= 1.0
                grad_w += p.T @ features
                grad_b += p.sum(axis=0)
                positions += len(target)
            self.weights -= spec.learning_rate * grad_w / positions
            self.bias -= spec.learning_rate * grad_b / positions

    def save(self, path: Path) -> None:
        np.savez(path, weights=self.weights, bias=self.bias, time_scale=self.time_scale)

    def load(self, path: Path) -> None:
        data = np.load(path, allow_pickle=False)
        self.weights = data["weights"]
        self.bias = data["bias"]
        self.time_scale = int(data["time_scale"])


def read_style_corpus(path: Path) -> tuple[list[str], list[str]]:
    if not path.exists():
        raise ModelError(f"model corpus not found: {path}")
    texts, labels = [], []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                texts.append(row["text"])
                labels.append(row["style"])
            except (json.JSONDecodeError, KeyError) as err:
                raise ModelError(f"{path}:{lineno}: malformed corpus line ({err})") from None
    if not texts:
        raise ModelError(f"{path}: empty corpus")
    return texts, labels


class ModelZoo:
    """All loaded models plus a lock per model for runtimes that need
    serialized inference (numpy does not, but the hook is the contract)."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.tokenizer = CharTokenizer(config.alphabet)
        self.embedder = TokenEmbedder(self.tokenizer.vocab_size, config.embedding_dim, config.seed)
        self.style_embedder = NgramEmbedder(config.embedding_dim, config.seed)
        self.paraphraser = Paraphraser()
        self.classifiers: dict[str, StyleClassifier] = {}
        self.denoiser: AffineDenoiser | None = None
        self.locks = {"denoiser": threading.Lock()}

        for language, spec in config.classifiers.items():
            self.classifiers[language] = self._build_classifier(spec, language)
        if config.denoiser is not None:
            self.denoiser = self._build_denoiser(config.denoiser)

    def _build_classifier(self, spec: ClassifierSpec, language: str) -> StyleClassifier:
        classifier = StyleClassifier(self.config.style_labels, self.config.seed)
        if spec.checkpoint:
            classifier.load(self.config.resolve(spec.checkpoint))
        else:
            texts, labels = read_style_corpus(self.config.resolve(spec.corpus))
            classifier.fit(texts, labels, steps=spec.steps, lr=spec.learning_rate)
        return classifier

    def _build_denoiser(self, spec: DenoiserSpec) -> AffineDenoiser:
        denoiser = AffineDenoiser(
            self.tokenizer.vocab_size, self.config.embedding_dim, self.config.seed
        )
        if spec.checkpoint:
            denoiser.load(self.config.resolve(spec.checkpoint))
        else:
            texts, _ = read_style_corpus(self.config.resolve(spec.corpus))
            denoiser.train(texts, self.tokenizer, self.embedder, self.paraphraser, spec)
        return denoiser

    @property
    def capabilities(self) -> list[str]:
        loaded = ["tokenize", "detokenize", "embed", "style_embed", "paraphrase"]
        if self.classifiers:
            loaded.append("classify")
        if self.denoiser is not None:
            loaded.append("denoise")
        return loaded
