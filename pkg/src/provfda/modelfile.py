"""Binary model container.

Layout (all integers and floats little-endian)::

    offset  size   field
    0       8      magic  b"PFDAMDL\\x00"
    8       4      u32    format version (currently 1)
    12      8      u64    header length H
    20      H      UTF-8 JSON header, keys sorted, separators "," and ":"
    ...     8*4    f64    loss_train, delta, tau, content_gain
    ...     8*C*D  f64    centroids, row-major (C = n_clusters, D = dim)
    ...     8*C    u64    member counts
    ...     8*T*E  f64    network table rows, in header "net_keys" order
    end-4   4      u32    CRC-32 of every preceding byte

The header carries the pipeline config, the TF-IDF statistics, the shape
fields (n_clusters, dim, net_dim), the clusterer name, the normalize flag and
the sorted list of network-table keys. Serialization is canonical, so equal
models produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .detector import ClusterModel
from .encoder import TfIdfModel
from .errors import ModelFormatError
from .pipeline import PipelineConfig, TrainedModel

MAGIC = b"PFDAMDL\x00"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


def _header(model: TrainedModel) -> dict:
    c = model.cluster
    keys = sorted(model.net_table)
    net_dim = len(next(iter(model.net_table.values()))) if keys else 0
    return {
        "config": model.config.to_dict(),
        "tfidf": {
            "doc_count": model.tfidf.doc_count,
            "n_tokens": model.tfidf.n_tokens,
            "doc_freq": model.tfidf.doc_freq,
        },
        "n_clusters": c.n_clusters,
        "dim": c.dim,
        "clusterer": c.clusterer,
        "normalize": c.normalize,
        "net_keys": keys,
        "net_dim": net_dim,
    }


def dumps(model: TrainedModel) -> bytes:
    c = model.cluster
    head = json.dumps(_header(model), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")
    parts = [
        _PREFIX.pack(MAGIC, VERSION, len(head)),
        head,
        np.array([c.loss_train, c.delta, c.tau, model.content_gain], dtype="<f8").tobytes(),
        np.ascontiguousarray(c.centroids, dtype="<f8").tobytes(),
        np.asarray(c.member_counts, dtype="<u8").tobytes(),
    ]
    for key in sorted(model.net_table):
        parts.append(np.asarray(model.net_table[key], dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def loads(data: bytes) -> TrainedModel:
    if len(data) < _PREFIX.size + 4:
        raise ModelFormatError("model file is truncated")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise ModelFormatError("model file checksum mismatch")
    pos = _PREFIX.size
    try:
        head = json.loads(data[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    pos += hlen
    try:
        C, D = head["n_clusters"], head["dim"]
        keys, E = head["net_keys"], head["net_dim"]
        sizes = (4, C * D, C, len(keys) * E)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model header missing field {exc}") from None
    if pos + 8 * sum(sizes) != len(data) - 4:
        raise ModelFormatError("model body length does not match header")

    def take(n, dtype):
        nonlocal pos
        arr = np.frombuffer(data, dtype=dtype, count=n, offset=pos).copy()
        pos += 8 * n
        return arr

    loss_train, delta, tau, gain = take(4, "<f8").astype(float)
    centroids = take(C * D, "<f8").astype(float).reshape(C, D)
    counts = take(C, "<u8").astype(np.int64)
    net = take(len(keys) * E, "<f8").astype(float).reshape(len(keys), E)

    config = PipelineConfig.from_dict(head["config"])
    t = head["tfidf"]
    tfidf = TfIdfModel(int(t["doc_count"]), dict(t["doc_freq"]), int(t["n_tokens"]))
    cluster = ClusterModel(centroids, counts, float(delta), float(loss_train), float(tau),
                           bool(head["normalize"]), head["clusterer"])
    return TrainedModel(config, tfidf, cluster, {k: net[i] for i, k in enumerate(keys)}, float(gain))


def save(model: TrainedModel, path) -> None:
    Path(path).write_bytes(dumps(model))


def load(path) -> TrainedModel:
    return loads(Path(path).read_bytes())
