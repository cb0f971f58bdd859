"""Threshold clustering detector.

Training is single-pass leader clustering: each vector joins the centroid it
is most cosine-similar to when that similarity reaches ``delta`` (the centroid
becomes the running mean of its members), otherwise it seeds a new cluster.
Membership is order-dependent by design.

The training loss is the mean over training vectors of the squared L2
distance to the closest final centroid. A test vector's score is its own
squared distance to the closest centroid; it is anomalous when the score
exceeds ``tau * loss_train``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

_CHUNK_ELEMS = 4_000_000


@dataclass
class ClusterModel:
    centroids: np.ndarray
    member_counts: np.ndarray
    delta: float = 0.72
    loss_train: float = 0.0
    tau: float = 1.0
    normalize: bool = False
    clusterer: str = "statistical"

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    @property
    def threshold(self) -> float:
        return self.tau * self.loss_train


class DetectionResult(NamedTuple):
    score: float
    assigned_cluster: int | None
    is_anomaly: bool


@dataclass
class LeaderResult:
    centroids: np.ndarray
    member_counts: np.ndarray
    assignments: np.ndarray
    # similarity of each vector to the centroid it was compared against at
    # assignment time (-inf for the first vector)
    best_similarity: np.ndarray = field(repr=False)


def _as_matrix(vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ConfigError("expected a non-empty list of equal-length vectors")
    if not np.all(np.isfinite(X)):
        raise ConfigError("training vectors must be finite")
    return X


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def cosine(a, b) -> float:
    """Cosine similarity; 0 when either vector is zero."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def leader_cluster(X: np.ndarray, delta: float) -> LeaderResult:
    n, d = X.shape
    cap = 16
    cent = np.empty((cap, d))
    unit = np.empty((cap, d))
    counts = np.zeros(cap, dtype=np.int64)
    assign = np.empty(n, dtype=np.int64)
    best = np.full(n, -np.inf)
    k = 0
    for i in range(n):
        x = X[i]
        nx = np.sqrt(x @ x)
        j = -1
        if k and nx > 0:
            sims = unit[:k] @ x / nx
            j = int(np.argmax(sims))
            best[i] = sims[j]
            if sims[j] < delta:
                j = -1
        elif k:
            best[i] = 0.0
        if j < 0:
            if k == cap:
                cap *= 2
                cent = np.resize(cent, (cap, d))
                unit = np.resize(unit, (cap, d))
                counts = np.resize(counts, cap)
            j = k
            k += 1
            cent[j] = x
            counts[j] = 1
        else:
            counts[j] += 1
            cent[j] += (x - cent[j]) / counts[j]
        c = cent[j]
        nc = np.sqrt(c @ c)
        unit[j] = c / nc if nc > 0 else 0.0
        assign[i] = j
    return LeaderResult(cent[:k].copy(), counts[:k].copy(), assign, best)


def min_sq_distances(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared L2 distance to, and index of, the closest centroid per row.

    The argmin is located with the expanded (BLAS) form; the returned
    distance is recomputed directly from the difference vector.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    c_sq = np.einsum("cd,cd->c", centroids, centroids)
    step = max(1, _CHUNK_ELEMS // max(1, len(centroids)))
    for s in range(0, n, step):
        block = X[s:s + step]
        approx = c_sq[None, :] - 2.0 * (block @ centroids.T)
        j = np.argmin(approx, axis=1)
        diff = block - centroids[j]
        idx[s:s + step] = j
        dist[s:s + step] = np.einsum("bd,bd->b", diff, diff)
    return dist, idx


def train(vectors, delta: float = 0.72, tau: float = 1.0, normalize: bool = False) -> ClusterModel:
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    if not tau > 0:
        raise ConfigError("tau must be > 0")
    X = _as_matrix(vectors)
    if normalize:
        X = _unit_rows(X)
    res = leader_cluster(X, delta)
    dist, _ = min_sq_distances(X, res.centroids)
    return ClusterModel(res.centroids, res.member_counts, delta, float(dist.mean()), tau, normalize)


def train_kmeans(vectors, k: int = 8, tau: float = 1.0, seed: int = 0, normalize: bool = False,
                 delta: float = 0.72) -> ClusterModel:
    from sklearn.cluster import KMeans

    X = _as_matrix(vectors)
    if normalize:
        X = _unit_rows(X)
    k = max(1, min(k, len(np.unique(X, axis=0))))
    km = KMeans(n_clusters=k, n_init=4, random_state=seed).fit(X)
    centroids = np.asarray(km.cluster_centers_, dtype=float)
    dist, idx = min_sq_distances(X, centroids)
    counts = np.bincount(idx, minlength=k)
    return ClusterModel(centroids, counts, delta, float(dist.mean()), tau, normalize, "kmeans")


def _prepare(model: ClusterModel, X: np.ndarray) -> np.ndarray:
    if X.shape[-1] != model.dim:
        raise ConfigError(f"vector dimension {X.shape[-1]} != model dimension {model.dim}")
    return _unit_rows(np.atleast_2d(X)) if model.normalize else X


def score(model: ClusterModel, v) -> DetectionResult:
    v = np.asarray(v, dtype=float)
    dist, idx = min_sq_distances(_prepare(model, v), model.centroids)
    s = float(dist[0])
    return DetectionResult(s, int(idx[0]), s > model.threshold)


def score_many(model: ClusterModel, vectors) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    return min_sq_distances(_prepare(model, X), model.centroids)


def roc_auc(labels: Sequence[bool], scores: Sequence[float]) -> float | None:
    """Area under the ROC curve from a full threshold sweep (ties averaged)."""
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each distinct score when sweeping high -> low
    cut = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(y)[cut]
    fps = (cut + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def evaluate(labels: Sequence[bool], scores: Sequence[float], threshold: float) -> dict:
    """Point metrics at ``score > threshold`` plus threshold-free AUC.

    AUC is None when only one class is present.
    """
    y = np.asarray(labels, dtype=bool)
    pred = np.asarray(scores, dtype=float) > threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    tn = int(np.sum(~pred & ~y))
    tpr = tp / (tp + fn) if tp + fn else 0.0
    fpr = fp / (fp + tn) if fp + tn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * precision * tpr / (precision + tpr) if precision + tpr else 0.0
    return {
        "tpr": tpr,
        "fpr": fpr,
        "precision": precision,
        "recall": tpr,
        "f1": f1,
        "accuracy": (tp + tn) / len(y) if len(y) else 0.0,
        "auc": roc_auc(y, scores),
        "tp": tp, "fp": fp, "tn": tn, "fn": fn,
    }


def evaluate_model(model: ClusterModel, vectors, labels) -> dict:
    scores, _ = score_many(model, vectors)
    return evaluate(labels, scores, model.threshold)
