"""Log content encoding.

Tokens are the five canonical fields. Each token maps to a hashed
character-n-gram vector (FastText-style subword bagging, no training), tokens
are weighted by TF-IDF with one log entry per document, and a log's content
embedding is the weighted mean of its token vectors. The FDA path instead
uses one scalar per field: the weighted projection of the token vector onto a
fixed seeded unit direction.

Network embeddings come from skip-gram with negative sampling over walks.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .ingest import LogRecord

EMPTY_TOKEN = ""
N_TOKENS = 5
NGRAM_MIN, NGRAM_MAX = 3, 5


def tokenize(rec: LogRecord) -> tuple:
    return (
        str(rec.event_id),
        rec.process_name.lower(),
        rec.base_file_name.lower(),
        rec.logon_type.lower(),
        rec.parent_process_name.lower(),
    )


def node_key(rec: LogRecord) -> str:
    """Vocabulary item for network embeddings: the log's event type and process.

    Keying walks by log type (not by graph-local node id) lets embeddings
    learned on the training graph transfer to logs of a later graph.
    """
    return f"{rec.event_id}:{rec.process_name}"


def char_ngrams(token: str) -> list[str]:
    wrapped = f"<{token}>"
    return [
        wrapped[i:i + n]
        for n in range(NGRAM_MIN, NGRAM_MAX + 1)
        for i in range(len(wrapped) - n + 1)
    ]


@lru_cache(maxsize=65536)
def _word_vec_cached(token: str, e: int, seed: int) -> np.ndarray:
    vec = np.zeros(e)
    if token == EMPTY_TOKEN:
        vec.flags.writeable = False
        return vec
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    grams = char_ngrams(token)
    for gram in grams:
        h = int.from_bytes(hashlib.blake2b(gram.encode(), digest_size=8, key=key).digest(), "little")
        vec[h % e] += -1.0 if h >> 63 else 1.0
    vec /= len(grams)
    vec.flags.writeable = False
    return vec


def word_vec(token: str, e: int = 100, seed: int = 0) -> np.ndarray:
    """Hashed bag of 3-5 character n-grams; read-only, zero for the empty token."""
    if e < 1:
        raise ConfigError("embedding dimension must be >= 1")
    return _word_vec_cached(token, e, seed)


@dataclass
class TfIdfModel:
    doc_count: int
    doc_freq: dict = field(default_factory=dict)
    n_tokens: int = N_TOKENS

    def idf(self, token: str) -> float:
        return math.log((1 + self.doc_count) / (1 + self.doc_freq.get(token, 0))) + 1.0

    def weights(self, tv: Sequence[str]) -> np.ndarray:
        counts = Counter(tv)
        n = len(tv)
        return np.array([
            0.0 if t == EMPTY_TOKEN else counts[t] / n * self.idf(t) for t in tv
        ])


def fit_tfidf(corpus: Iterable[Sequence[str]]) -> TfIdfModel:
    doc_count = 0
    df: Counter = Counter()
    n_tokens = None
    for tv in corpus:
        doc_count += 1
        n_tokens = len(tv)
        df.update(t for t in set(tv) if t != EMPTY_TOKEN)
    if doc_count == 0:
        raise ConfigError("cannot fit TF-IDF on an empty corpus")
    return TfIdfModel(doc_count, dict(sorted(df.items())), n_tokens)


def token_matrix(tv: Sequence[str], e: int, seed: int) -> np.ndarray:
    return np.stack([word_vec(t, e, seed) for t in tv])


def content_embed(tv: Sequence[str], tfidf: TfIdfModel, e: int = 100, seed: int = 0,
                  weights: np.ndarray | None = None) -> np.ndarray:
    """TF-IDF weighted mean of the token vectors: (1/n) * sum_i w_i u_i."""
    w = tfidf.weights(tv) if weights is None else weights
    return w @ token_matrix(tv, e, seed) / len(tv)


@lru_cache(maxsize=64)
def projection(e: int, seed: int) -> np.ndarray:
    r = np.random.default_rng([seed & 0xFFFFFFFF, 0x5CA1A2]).standard_normal(e)
    r /= np.linalg.norm(r)
    r.flags.writeable = False
    return r


def field_scalars(tv: Sequence[str], tfidf: TfIdfModel, seed: int = 0, e: int = 100) -> np.ndarray:
    """Per-field scalar w_i * <u_i, r> for a fixed seeded unit vector r."""
    return tfidf.weights(tv) * (token_matrix(tv, e, seed) @ projection(e, seed))


class Encoder:
    """Batch encoder over a fitted TF-IDF model; caches per-token work."""

    def __init__(self, tfidf: TfIdfModel, e: int = 100, seed: int = 0):
        self.tfidf = tfidf
        self.e = e
        self.seed = seed
        self._proj = projection(e, seed)

    def scalars(self, tv: Sequence[str]) -> np.ndarray:
        return field_scalars(tv, self.tfidf, self.seed, self.e)

    def content(self, tv: Sequence[str]) -> np.ndarray:
        return content_embed(tv, self.tfidf, self.e, self.seed)

    def encode_many(self, token_vectors: Sequence[Sequence[str]]) -> tuple[np.ndarray, np.ndarray]:
        """Return (field scalars N x n, content embeddings N x e)."""
        n_docs = len(token_vectors)
        n = self.tfidf.n_tokens
        vocab: dict[str, int] = {}
        ids = np.empty((n_docs, n), dtype=np.int64)
        w = np.empty((n_docs, n))
        for i, tv in enumerate(token_vectors):
            ids[i] = [vocab.setdefault(t, len(vocab)) for t in tv]
            w[i] = self.tfidf.weights(tv)
        vecs = np.zeros((max(len(vocab), 1), self.e))
        for t, j in vocab.items():
            vecs[j] = word_vec(t, self.e, self.seed)
        proj = vecs @ self._proj
        scal = w * proj[ids]
        content = np.einsum("ik,ike->ie", w, vecs[ids]) / n
        return scal, content


def _sentences(walk_corpus) -> list[tuple]:
    out = []
    for walk in walk_corpus:
        if hasattr(walk, "samples"):
            out.append((walk.target,) + tuple(walk.samples))
        else:
            out.append(tuple(walk))
    return out


def network_embed(walk_corpus: Iterable, e: int = 100, epochs: int = 5, lr: float = 0.025,
                  neg_k: int = 5, seed: int = 0, window: int = 5,
                  batch_size: int = 256) -> dict[Hashable, np.ndarray]:
    """Skip-gram with negative sampling over walks treated as sentences.

    Walks are NeighborSamples (target first, then its samples) or plain token
    sequences. Minibatched SGD with linear learning-rate decay; deterministic
    for a given seed.
    """
    sentences = [s for s in _sentences(walk_corpus) if s]
    if not sentences:
        raise ConfigError("cannot train network embeddings on an empty walk corpus")
    vocab: dict = {}
    for s in sentences:
        for tok in s:
            vocab.setdefault(tok, len(vocab))
    V = len(vocab)
    counts = np.zeros(V)
    centers, contexts = [], []
    for s in sentences:
        idx = np.fromiter((vocab[t] for t in s), dtype=np.int64, count=len(s))
        np.add.at(counts, idx, 1.0)
        for off in range(1, window + 1):
            if off >= len(idx):
                break
            centers += [idx[:-off], idx[off:]]
            contexts += [idx[off:], idx[:-off]]

    rng = np.random.default_rng(seed)
    w_in = (rng.random((V, e)) - 0.5) / e
    w_out = np.zeros((V, e))
    if not centers:
        return {tok: w_in[i].copy() for tok, i in vocab.items()}
    centers = np.concatenate(centers)
    contexts = np.concatenate(contexts)
    noise = counts ** 0.75
    noise /= noise.sum()
    cdf = np.cumsum(noise)
    n_pairs = len(centers)
    total = epochs * -(-n_pairs // batch_size)
    step = 0
    for _ in range(epochs):
        perm = rng.permutation(n_pairs)
        for start in range(0, n_pairs, batch_size):
            sel = perm[start:start + batch_size]
            c, o = centers[sel], contexts[sel]
            negs = np.minimum(np.searchsorted(cdf, rng.random((len(sel), neg_k))), V - 1)
            alpha = lr * max(1.0 - step / total, 1e-4)
            step += 1
            vc = w_in[c]
            uo = w_out[o]
            un = w_out[negs]
            g_pos = _sigmoid(np.einsum("be,be->b", vc, uo)) - 1.0
            g_neg = _sigmoid(np.einsum("be,bke->bk", vc, un))
            grad_c = g_pos[:, None] * uo + np.einsum("bk,bke->be", g_neg, un)
            _scatter_add(w_out, o, -alpha * g_pos[:, None] * vc)
            _scatter_add(w_out, negs.ravel(), (-alpha * g_neg[:, :, None] * vc[:, None, :]).reshape(-1, e))
            _scatter_add(w_in, c, -alpha * grad_c)
    return {tok: w_in[i].copy() for tok, i in vocab.items()}


def _scatter_add(target: np.ndarray, rows: np.ndarray, values: np.ndarray) -> None:
    # Row-wise accumulate with duplicates. A one-hot matmul beats np.add.at
    # by a wide margin while the vocabulary is small.
    V = len(target)
    if V * len(rows) > 8_000_000:
        np.add.at(target, rows, values)
        return
    onehot = np.zeros((V, len(rows)))
    onehot[rows, np.arange(len(rows))] = 1.0
    target += onehot @ values


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))
