"""Frequency-domain features of a node's sampled-neighbor window.

For each log-feature column x of the (window x L) sample matrix:

    F_k = sum_n x_n exp(-2 pi i (n-1)(k-1) / N)      k = 1..N
    r_k = Re(F_k)^2 + Im(F_k)^2
    R_k = ln(r_k + 1) / C
    keep k = 1..L_f,  L_f = floor(N/2) + 1

Columns are concatenated in order, each as a contiguous block of L_f values,
giving a vector of length L * L_f.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .encoder import Encoder, tokenize
from .errors import ConfigError, DataError
from .sampler import RwrConfig, sample


@dataclass(frozen=True)
class FdaConfig:
    window: int = 40
    log_constant: float = 1.0

    def __post_init__(self):
        if self.window < 2:
            raise ConfigError("DFT window must be >= 2")
        if not self.log_constant > 0:
            raise ConfigError("log constant C must be > 0")


def half_length(window: int) -> int:
    return window // 2 + 1


def feature_length(window: int, n_fields: int) -> int:
    return n_fields * half_length(window)


def dft_direct(x) -> np.ndarray:
    """O(N^2) DFT written exactly as the 1-based sum; the normative reference."""
    x = [float(v) for v in x]
    N = len(x)
    if N < 2:
        raise ConfigError("DFT window must be >= 2")
    out = np.empty(N, dtype=complex)
    for k in range(1, N + 1):
        acc = 0j
        for n in range(1, N + 1):
            acc += x[n - 1] * cmath.exp(-2j * math.pi * (n - 1) * (k - 1) / N)
        out[k - 1] = acc
    return out


def dft_column(x) -> np.ndarray:
    """DFT of one real column (fast transform; agrees with :func:`dft_direct`)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ConfigError("DFT window must be a vector of length >= 2")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite value in DFT input")
    return np.fft.fft(x)


def to_feature(S: np.ndarray, cfg: FdaConfig = FdaConfig()) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != cfg.window:
        raise ConfigError(f"sample matrix must have {cfg.window} rows, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(S), axis=0))[0])
        raise DataError(f"non-finite value in sample matrix column {bad}")
    spec = np.fft.rfft(S, axis=0)
    r = spec.real ** 2 + spec.imag ** 2
    R = np.log1p(r)
    if cfg.log_constant != 1.0:
        R /= cfg.log_constant
    return R.T.reshape(-1)


def to_features(batch: np.ndarray, cfg: FdaConfig = FdaConfig()) -> np.ndarray:
    """Vectorized :func:`to_feature` over a (B, window, L) stack."""
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 3 or batch.shape[1] != cfg.window:
        raise ConfigError(f"expected (B, {cfg.window}, L) stack, got shape {batch.shape}")
    if not np.all(np.isfinite(batch)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(batch), axis=(0, 1)))[0])
        raise DataError(f"non-finite value in sample matrix column {bad}")
    spec = np.fft.rfft(batch, axis=1)
    R = np.log1p(spec.real ** 2 + spec.imag ** 2)
    if cfg.log_constant != 1.0:
        R /= cfg.log_constant
    return R.transpose(0, 2, 1).reshape(len(batch), -1)


def sample_matrix(samples, node_scalars: np.ndarray) -> np.ndarray:
    """Rows are the sampled nodes' field scalars in walk order."""
    return node_scalars[np.asarray(samples, dtype=np.int64)]


def embed_node_fda(graph, v: int, rwr_cfg: RwrConfig, encoder: Encoder,
                   fda_cfg: FdaConfig = FdaConfig(),
                   node_scalars: np.ndarray | None = None) -> np.ndarray:
    """sample -> per-log field scalars -> window matrix -> feature.

    Pass ``node_scalars`` (one row per graph node, from
    :meth:`Encoder.encode_many`) to skip re-encoding the sampled logs.
    """
    ns = sample(graph, v, rwr_cfg)
    if node_scalars is not None:
        S = sample_matrix(ns.samples, node_scalars)
    else:
        S = np.stack([encoder.scalars(tokenize(graph.records[s])) for s in ns.samples])
    return to_feature(S, fda_cfg)
