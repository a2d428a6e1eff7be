"""Tokenization, vocabulary, and skip-gram word embeddings.

The vocabulary reserves ids 0..3 for <pad>, <bos>, <eos>, <unk>; remaining
ids are assigned in descending frequency order with lexicographic
tie-breaking so builds are stable across runs. Embeddings are trained with
skip-gram negative sampling on the story corpus itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN]

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation into separate tokens, split on whitespace.

    "This is a store." -> [this, is, a, store, .]; deterministic, and
    idempotent under join-with-spaces + re-tokenize.
    """
    return _TOKEN_RE.findall(text.lower())


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)


@dataclass
class Vocab:
    """Bijective token<->id map with fixed reserved ids."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    counts: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    def ids_of(self, tokens: list[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def tokens_of(self, ids: list[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocab(corpus: list[list[str]], min_count: int = 1) -> Vocab:
    """Assign ids after the 4 reserved slots, most frequent first.

    Frequency ties break lexicographically. Tokens below min_count are not
    entered and resolve to <unk> at lookup time.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for sent in corpus:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count and t not in RESERVED),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = RESERVED + kept
    token_to_id = {t: i for i, t in enumerate(id_to_token)}
    return Vocab(token_to_id, id_to_token, counts)


@dataclass
class EmbeddingTable:
    """vocab_size x embed_dim matrix of word vectors."""

    vectors: np.ndarray
    trainable: bool = True

    @property
    def vocab_size(self) -> int:
        return self.vectors.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class SkipgramConfig:
    embed_dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    seed: int = 0


def skipgram_pairs(sentence: list[int], window: int) -> list[tuple[int, int]]:
    """(center, context) pairs within the window, not crossing sentences."""
    pairs = []
    for i, center in enumerate(sentence):
        lo = max(0, i - window)
        hi = min(len(sentence), i + window + 1)
        for j in range(lo, hi):
            if j != i:
                pairs.append((center, sentence[j]))
    return pairs


def _negative_table(corpus: list[list[int]], vocab_size: int) -> np.ndarray:
    """Unigram^(3/4) negative-sampling distribution over ids seen in the corpus."""
    counts = np.zeros(vocab_size, dtype=np.float64)
    for sent in corpus:
        for idx in sent:
            counts[idx] += 1.0
    weights = counts**0.75
    total = weights.sum()
    if total == 0:
        raise ValueError("empty corpus")
    return weights / total


def train_skipgram(
    corpus: list[list[int]], vocab_size: int, cfg: SkipgramConfig
) -> tuple[EmbeddingTable, list[float]]:
    """Skip-gram with negative sampling over token-id sentences.

    Single-threaded and fully seeded, so results are reproducible. The
    learning rate decays linearly over the run, as is conventional. Returns
    the input-vector table and the mean loss per epoch.
    """
    if cfg.window < 1 or cfg.negatives < 1:
        raise ValueError("window and negatives must be >= 1")
    n_tokens = sum(len(s) for s in corpus)
    if n_tokens < cfg.window + 1:
        raise ValueError(f"corpus of {n_tokens} tokens is shorter than window+1 ({cfg.window + 1})")

    rng = np.random.default_rng(cfg.seed)
    bound = 0.5 / cfg.embed_dim
    w_in = rng.uniform(-bound, bound, size=(vocab_size, cfg.embed_dim))
    w_out = np.zeros((vocab_size, cfg.embed_dim))

    probs = _negative_table(corpus, vocab_size)
    pairs = [p for sent in corpus for p in skipgram_pairs(sent, cfg.window)]
    if not pairs:
        raise ValueError("no training pairs; corpus sentences are too short")

    epoch_losses: list[float] = []
    total_steps = max(1, cfg.epochs * len(pairs))
    step = 0
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        for center, context in pairs:
            lr = cfg.lr * max(1.0 - step / total_steps, 1e-4)
            step += 1
            negatives = []
            while len(negatives) < cfg.negatives:
                cand = int(rng.choice(vocab_size, p=probs))
                if cand != context:
                    negatives.append(cand)

            v = w_in[center]
            grad_v = np.zeros_like(v)
            for target, label in [(context, 1.0)] + [(n, 0.0) for n in negatives]:
                u = w_out[target]
                score = 1.0 / (1.0 + np.exp(-np.dot(v, u)))
                loss_sum += -np.log(score + 1e-12) if label else -np.log(1.0 - score + 1e-12)
                coeff = score - label
                grad_v += coeff * u
                w_out[target] = u - lr * coeff * v
            w_in[center] = v - lr * grad_v
        epoch_losses.append(loss_sum / len(pairs))
    return EmbeddingTable(w_in), epoch_losses


def save_embeddings(path, table: EmbeddingTable, vocab: Vocab) -> None:
    """Text format: "vocab_size embed_dim" header, then "token v1 ... vD" rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{table.vocab_size} {table.embed_dim}\n")
        for idx in range(table.vocab_size):
            row = " ".join(repr(float(v)) for v in table.vectors[idx])
            fh.write(f"{vocab.token_of(idx)} {row}\n")


def load_embeddings(path) -> tuple[np.ndarray, list[str]]:
    """Read the text embedding format; returns (vectors, tokens)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError("embedding header must be 'vocab_size embed_dim'", line=1)
        vocab_size, embed_dim = int(header[0]), int(header[1])
        vectors = np.zeros((vocab_size, embed_dim))
        tokens: list[str] = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != embed_dim + 1:
                raise DataError(
                    f"expected 1 token + {embed_dim} values, got {len(parts)} fields", line=lineno
                )
            row = lineno - 2
            if row >= vocab_size:
                raise DataError("more rows than the declared vocab_size", line=lineno)
            tokens.append(parts[0])
            vectors[row] = [float(v) for v in parts[1:]]
    if len(tokens) != vocab_size:
        raise DataError(f"declared {vocab_size} rows, found {len(tokens)}")
    return vectors, tokens
