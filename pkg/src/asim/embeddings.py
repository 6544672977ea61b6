"""Vocabularies, embedding tables, and desk-scale GloVe pre-training.

Embedding files use the plain GloVe text format (word then floats, space
separated, no header). Vocabulary files hold one token per line in index
order. Indices 0 and 1 are reserved for padding and out-of-vocabulary.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError, EmptyVocabError, ParseError

PAD_INDEX = 0
OOV_INDEX = 1
PAD_TOKEN = "<pad>"
OOV_TOKEN = "<oov>"

# single shared out-of-vocabulary vector, drawn once with a fixed seed
_OOV_SEED = 20240
_OOV_SCALE = 0.05

GLOVE_X_MAX = 100.0
GLOVE_ALPHA = 0.75


@dataclass
class Vocabulary:
    tokens: list[str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, OOV_INDEX)

    def __contains__(self, token):
        return token in self.index

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.tokens:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        if tokens[:2] != [PAD_TOKEN, OOV_TOKEN]:
            raise ParseError(f"not a vocabulary file (missing {PAD_TOKEN}/{OOV_TOKEN} header)",
                             path=path)
        return cls(tokens)


def build_vocab(corpus, min_count: int = 1) -> Vocabulary:
    """Count tokens over an iterable of token sequences and keep the ones
    seen at least min_count times, ordered by falling frequency then
    lexicographically."""
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    for seq in corpus:
        counts.update(seq)
    if not counts:
        raise EmptyVocabError("corpus produced no tokens")
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    return Vocabulary([PAD_TOKEN, OOV_TOKEN] + kept)


def oov_vector(dim: int) -> np.ndarray:
    rng = np.random.default_rng(_OOV_SEED)
    return rng.uniform(-_OOV_SCALE, _OOV_SCALE, size=dim)


@dataclass
class EmbeddingTable:
    dim: int
    vectors: np.ndarray            # |vocab| x dim, rows aligned with vocab
    trainable: bool = False

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.dim:
            raise ConfigError(
                f"vector matrix shape {self.vectors.shape} inconsistent with dim {self.dim}")


def load_embeddings(path, vocab: Vocabulary, dim: int) -> tuple[EmbeddingTable, float]:
    """Read a GloVe text file into a table aligned with ``vocab``.

    Vocabulary words absent from the file get the shared OOV vector; the
    pad row is zero. Returns the table and the coverage fraction over real
    (non-reserved) vocabulary entries.
    """
    vectors = np.tile(oov_vector(dim), (len(vocab), 1))
    vectors[PAD_INDEX] = 0.0
    vectors[OOV_INDEX] = oov_vector(dim)
    covered = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) <= 1:
                continue
            word, values = parts[0], parts[1:]
            if lineno == 1 and len(values) != dim:
                raise ConfigError(
                    f"{path}:1: file carries {len(values)}-dimensional vectors, expected {dim}")
            if len(values) != dim:
                raise ParseError(f"expected {dim} floats, found {len(values)}",
                                 path=path, line=lineno)
            try:
                row = np.array([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"bad float: {exc}", path=path, line=lineno) from None
            idx = vocab.index.get(word)
            if idx is not None and idx >= 2:
                vectors[idx] = row
                covered += 1
    real = max(len(vocab) - 2, 1)
    return EmbeddingTable(dim=dim, vectors=vectors), covered / real


def save_embeddings(table: EmbeddingTable, vocab: Vocabulary, path) -> None:
    """Write real-token rows in GloVe text format at 6 decimal digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx in range(2, len(vocab)):
            vals = " ".join(f"{v:.6f}" for v in table.vectors[idx])
            fh.write(f"{vocab.tokens[idx]} {vals}\n")


def lookup(table: EmbeddingTable, vocab: Vocabulary, token: str) -> np.ndarray:
    return table.vectors[vocab.id_of(token)]


def nearest_neighbors(table: EmbeddingTable, vocab: Vocabulary, token: str,
                      top_k: int = 10) -> list[tuple[str, float]]:
    """Cosine-nearest real tokens; empty list when the query is OOV."""
    idx = vocab.index.get(token)
    if idx is None or idx < 2:
        return []
    vecs = table.vectors[2:]
    norms = np.linalg.norm(vecs, axis=1)
    norms[norms == 0.0] = 1.0
    query = table.vectors[idx]
    sims = vecs @ query / (norms * max(np.linalg.norm(query), 1e-12))
    order = np.argsort(-sims)
    out = []
    for j in order:
        if j + 2 == idx:
            continue
        out.append((vocab.tokens[j + 2], float(sims[j])))
        if len(out) == top_k:
            break
    return out


@dataclass
class CooccurrenceCounts:
    counts: dict[tuple[int, int], float]
    window: int
    symmetric: bool = True


def count_cooccurrence(corpus, vocab: Vocabulary, window: int) -> CooccurrenceCounts:
    """Distance-weighted symmetric counts: a pair at distance d adds 1/d.

    Reserved/unknown tokens get no counts of their own but still occupy
    positions, so distances are measured over the raw token stream.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    counts: dict[tuple[int, int], float] = {}
    for seq in corpus:
        ids = [vocab.index.get(t, OOV_INDEX) for t in seq]
        n = len(ids)
        for pos in range(n):
            a = ids[pos]
            if a < 2:
                continue
            for d in range(1, min(window, n - 1 - pos) + 1):
                b = ids[pos + d]
                if b < 2:
                    continue
                w = 1.0 / d
                counts[(a, b)] = counts.get((a, b), 0.0) + w
                counts[(b, a)] = counts.get((b, a), 0.0) + w
    return CooccurrenceCounts(counts=counts, window=window)


def glove_weight(x: float) -> float:
    return min(1.0, (x / GLOVE_X_MAX) ** GLOVE_ALPHA)


def glove_objective(counts: CooccurrenceCounts, w, w_ctx, b, b_ctx) -> float:
    """Sum over nonzero cells of f(x) * (w_i . w~_j + b_i + b~_j - log x)^2."""
    total = 0.0
    for (i, j), x in counts.counts.items():
        diff = w[i] @ w_ctx[j] + b[i] + b_ctx[j] - np.log(x)
        total += glove_weight(x) * diff * diff
    return total


def train_glove(counts: CooccurrenceCounts, vocab: Vocabulary, dim: int,
                epochs: int, lr: float = 0.05,
                seed: int = 0) -> tuple[EmbeddingTable, list[float]]:
    """AdaGrad fit of vectors to log co-occurrence counts.

    Returns the table (final vector = w + w~, pad row zero, OOV row from
    the shared policy) and the objective evaluated before training and
    after each epoch.
    """
    if not counts.counts:
        raise EmptyVocabError("no co-occurrence counts to train on")
    size = len(vocab)
    rng = np.random.default_rng(seed)
    w = (rng.random((size, dim)) - 0.5) / (dim + 1)
    w_ctx = (rng.random((size, dim)) - 0.5) / (dim + 1)
    b = (rng.random(size) - 0.5) / (dim + 1)
    b_ctx = (rng.random(size) - 0.5) / (dim + 1)
    gsq_w = np.ones((size, dim))
    gsq_wc = np.ones((size, dim))
    gsq_b = np.ones(size)
    gsq_bc = np.ones(size)

    cells = sorted(counts.counts.items())
    losses = [glove_objective(counts, w, w_ctx, b, b_ctx)]
    for _ in range(epochs):
        order = rng.permutation(len(cells))
        for ci in order:
            (i, j), x = cells[ci]
            diff = w[i] @ w_ctx[j] + b[i] + b_ctx[j] - np.log(x)
            fdiff = 2.0 * glove_weight(x) * diff
            gw = fdiff * w_ctx[j]
            gwc = fdiff * w[i]
            w[i] -= lr * gw / np.sqrt(gsq_w[i])
            w_ctx[j] -= lr * gwc / np.sqrt(gsq_wc[j])
            b[i] -= lr * fdiff / np.sqrt(gsq_b[i])
            b_ctx[j] -= lr * fdiff / np.sqrt(gsq_bc[j])
            gsq_w[i] += gw * gw
            gsq_wc[j] += gwc * gwc
            gsq_b[i] += fdiff * fdiff
            gsq_bc[j] += fdiff * fdiff
        loss = glove_objective(counts, w, w_ctx, b, b_ctx)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"GloVe objective diverged (lr={lr}); try a smaller learning rate")
        losses.append(loss)

    vectors = w + w_ctx
    vectors[PAD_INDEX] = 0.0
    vectors[OOV_INDEX] = oov_vector(dim)
    return EmbeddingTable(dim=dim, vectors=vectors), losses
