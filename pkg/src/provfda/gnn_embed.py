"""Recurrent neighbor aggregation (the GNN-style embedding path).

A stacked bidirectional LSTM with fixed seeded weights runs over the
sequence of sampled-neighbor embeddings (network embedding concatenated with
content embedding). Per-position forward and backward outputs are
concatenated, averaged over the window, and projected to the output size.
Weights are never trained; recurrent blocks are rescaled to spectral radius
0.9 so the recurrence stays contractive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .encoder import Encoder, node_key, tokenize
from .errors import ConfigError
from .sampler import RwrConfig, sample

SPECTRAL_RADIUS = 0.9


@dataclass(frozen=True)
class LstmCell:
    w_ih: np.ndarray  # (4h, d), gate order i, f, g, o
    w_hh: np.ndarray  # (4h, h)
    b: np.ndarray     # (4h,)

    @property
    def hidden(self) -> int:
        return self.w_hh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.w_ih.shape[1]


@dataclass(frozen=True)
class BiRnnWeights:
    layers: tuple  # ((forward LstmCell, backward LstmCell), ...)
    proj: np.ndarray  # (out_dim, 2 * last hidden)
    seed: int = 0

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].input_dim

    @property
    def out_dim(self) -> int:
        return self.proj.shape[0]


def _cell(rng: np.random.Generator, d: int, h: int, input_scale: float) -> LstmCell:
    w_ih = rng.standard_normal((4 * h, d)) * (input_scale / np.sqrt(d))
    w_hh = rng.standard_normal((4 * h, h)) / np.sqrt(h)
    for g in range(4):
        block = w_hh[g * h:(g + 1) * h]
        radius = np.max(np.abs(np.linalg.eigvals(block)))
        block *= SPECTRAL_RADIUS / radius
    b = np.zeros(4 * h)
    b[h:2 * h] = 1.0  # forget-gate bias
    return LstmCell(w_ih, w_hh, b)


def make_weights(input_dim: int, hidden=(64, 32), out_dim: int = 100, seed: int = 0,
                 input_scale: float = 1.0) -> BiRnnWeights:
    if input_dim < 1 or out_dim < 1 or not hidden or min(hidden) < 1:
        raise ConfigError("dimensions must be positive")
    layers = []
    d = input_dim
    for li, h in enumerate(hidden):
        fwd = _cell(np.random.default_rng([seed, li, 0]), d, h, input_scale)
        bwd = _cell(np.random.default_rng([seed, li, 1]), d, h, input_scale)
        layers.append((fwd, bwd))
        d = 2 * h
    proj = np.random.default_rng([seed, 0xB10C]).standard_normal((out_dim, d))
    proj /= np.linalg.norm(proj, 2)
    return BiRnnWeights(tuple(layers), proj, seed)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_pass(X: np.ndarray, cell: LstmCell, reverse: bool = False) -> np.ndarray:
    """Hidden states for every position of a (K, d) or (B, K, d) sequence.

    With ``reverse`` the sequence is consumed last-to-first; outputs stay
    aligned with input positions.
    """
    squeeze = X.ndim == 2
    X3 = X[None] if squeeze else X
    B, K, _ = X3.shape
    h = cell.hidden
    pre = X3 @ cell.w_ih.T + cell.b
    w_hh_t = cell.w_hh.T
    hs = np.zeros((B, h))
    cs = np.zeros((B, h))
    out = np.empty((B, K, h))
    steps = range(K - 1, -1, -1) if reverse else range(K)
    for t in steps:
        z = pre[:, t] + hs @ w_hh_t
        i = _sigmoid(z[:, :h])
        f = _sigmoid(z[:, h:2 * h])
        g = np.tanh(z[:, 2 * h:3 * h])
        o = _sigmoid(z[:, 3 * h:])
        cs = f * cs + i * g
        hs = o * np.tanh(cs)
        out[:, t] = hs
    return out[0] if squeeze else out


def bidirectional(X: np.ndarray, weights: BiRnnWeights) -> np.ndarray:
    """Top-layer forward (+) backward outputs per position."""
    for fwd, bwd in weights.layers:
        X = np.concatenate([lstm_pass(X, fwd), lstm_pass(X, bwd, reverse=True)], axis=-1)
    return X


def aggregate(samples, weights: BiRnnWeights) -> np.ndarray:
    """Mean over the window of bidirectional outputs, then the fixed projection.

    Accepts one (K, d) sequence or a (B, K, d) batch.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim not in (2, 3) or X.shape[-2] < 1:
        raise ConfigError("expected a non-empty (K, d) sequence or (B, K, d) batch")
    if X.shape[-1] != weights.input_dim:
        raise ConfigError(f"input dimension {X.shape[-1]} != aggregator input {weights.input_dim}")
    return bidirectional(X, weights).mean(axis=-2) @ weights.proj.T


class GnnEmbedding(NamedTuple):
    values: np.ndarray
    missing_network: int  # sampled logs that fell back to a zero network vector


def node_inputs(records, encoder: Encoder, net_table: Mapping, e: int,
                contents: np.ndarray | None = None,
                content_gain: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-log pre-aggregation rows [network (+) content] and a missing-network mask."""
    n = len(records)
    if contents is None:
        contents = np.stack([encoder.content(tokenize(r)) for r in records]) if n else np.zeros((0, e))
    contents = contents * content_gain
    net = np.zeros((n, e))
    missing = np.zeros(n, dtype=bool)
    for i, rec in enumerate(records):
        vec = net_table.get(node_key(rec))
        if vec is None:
            missing[i] = True
        else:
            net[i] = vec
    return np.concatenate([net, contents], axis=1), missing


def balance_blocks(net_table: Mapping, records, contents: np.ndarray) -> tuple[dict, float]:
    """Rescale so both input halves have mean row norm 1 over ``records``.

    Returns the rescaled network table and the gain to apply to content
    vectors. Uniform per-block scaling keeps relative magnitudes (for
    example the larger content norm of rare tokens) intact.
    """
    norms = [np.linalg.norm(net_table[k]) for k in map(node_key, records) if k in net_table]
    net_mean = float(np.mean(norms)) if norms else 0.0
    scale = 1.0 / net_mean if net_mean > 0 else 1.0
    table = {k: v * scale for k, v in net_table.items()}
    c_mean = float(np.linalg.norm(contents, axis=1).mean()) if len(contents) else 0.0
    return table, (1.0 / c_mean if c_mean > 0 else 1.0)


def embed_node_gnn(graph, v: int, rwr_cfg: RwrConfig, encoder: Encoder, net_table: Mapping,
                   weights: BiRnnWeights, content_gain: float = 1.0) -> GnnEmbedding:
    ns = sample(graph, v, rwr_cfg)
    recs = [graph.records[s] for s in ns.samples]
    X, missing = node_inputs(recs, encoder, net_table, encoder.e, content_gain=content_gain)
    return GnnEmbedding(aggregate(X, weights), int(missing.sum()))
