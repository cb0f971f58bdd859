"""Reference experiments: end-to-end detection, latency benchmark, ablation."""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import detector, pipeline
from .ingest import record_to_json
from .pipeline import PipelineConfig, TrainedModel
from .provgraph import build_graph
from .synthgen import BehaviorProfile, InjectionSpec, gen_benign, inject, split_by_time


@dataclass(frozen=True)
class ReferenceConfig:
    users: int = 10
    logs_per_user: int = 5000
    seed: int = 42
    train_fraction: float = 0.75
    profile: BehaviorProfile = field(default_factory=BehaviorProfile)
    injection: InjectionSpec = field(default_factory=InjectionSpec)


@dataclass
class ReferenceCorpus:
    train: list
    test: list
    labels: list
    splices: list


def reference_corpus(cfg: ReferenceConfig = ReferenceConfig()) -> ReferenceCorpus:
    """Benign streams split chronologically per user; the older part trains,
    anomalies are injected into the newer part to form the test set."""
    benign = gen_benign(cfg.profile, cfg.users, cfg.logs_per_user, cfg.seed)
    train, held_out = split_by_time(benign, cfg.train_fraction)
    mixed = inject(held_out, cfg.injection, cfg.seed)
    return ReferenceCorpus(train, mixed.records, mixed.labels, mixed.splices)


def record_bytes(records) -> np.ndarray:
    """Size of each record as one JSON line (newline included)."""
    return np.array([
        len(record_to_json(r).encode()) + 1 for r in records
    ], dtype=np.int64)


@dataclass
class PathRun:
    config: PipelineConfig
    model: TrainedModel
    fit_seconds: float
    detect_seconds: float
    scores: np.ndarray
    labels: np.ndarray
    metrics: dict
    result: pipeline.DetectResult
    train_windows: list
    train_features: np.ndarray


def run_path(corpus: ReferenceCorpus, config: PipelineConfig,
             train_windows: list | None = None, test_windows: list | None = None) -> PathRun:
    fr = pipeline.fit(corpus.train, config, train_windows)
    t0 = time.perf_counter()
    dr = pipeline.detect(fr.model, corpus.test, test_windows)
    dt = time.perf_counter() - t0
    y = pipeline.node_labels(dr.graph, corpus.labels)
    metrics = detector.evaluate(y, dr.scores, fr.model.cluster.threshold)
    metrics["n_clusters"] = fr.model.cluster.n_clusters
    metrics["loss_train"] = fr.model.cluster.loss_train
    return PathRun(config, fr.model, fr.seconds, dt, dr.scores, y, metrics, dr, fr.windows, fr.features)


@dataclass
class LatencyStats:
    n_records: int
    warm_runs: int
    run_means_s: list
    mean_s: float
    std_s: float
    p95_s: float
    records_per_s: float
    bytes_per_s: float
    cv: float  # run-to-run coefficient of variation of throughput

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def measure_latency(model: TrainedModel, records: Sequence, n_records: int = 1000,
                    warm_runs: int = 3, graph=None) -> LatencyStats:
    """Per-record detection latency at batch size 1.

    Each timed call encodes the record's log, samples its neighborhood on the
    published graph, builds the feature vector and scores it. One untimed
    warm-up pass precedes ``warm_runs`` timed passes over the same records;
    garbage collection runs between passes, never inside one.
    """
    if warm_runs < 1:
        raise ValueError("warm_runs must be >= 1")
    graph = graph if graph is not None else build_graph(records)
    feat = pipeline.featurizer_for(model, graph)
    n = len(graph)
    nodes = np.unique(np.linspace(0, n - 1, min(n_records, n)).astype(np.int64)).tolist()
    sizes = record_bytes([graph.records[v] for v in nodes])
    cluster = model.cluster
    clock = time.perf_counter

    def one_pass():
        lat = np.empty(len(nodes))
        for i, v in enumerate(nodes):
            t = clock()
            feat.detect_one(v, cluster)
            lat[i] = clock() - t
        return lat

    one_pass()
    # like timeit: collect up front, keep the collector out of timed passes
    was_enabled = gc.isenabled()
    gc.disable()
    runs = []
    try:
        for _ in range(warm_runs):
            gc.collect()
            runs.append(one_pass())
    finally:
        if was_enabled:
            gc.enable()
    means = np.array([r.mean() for r in runs])
    totals = np.array([r.sum() for r in runs])
    thr = len(nodes) / totals
    allv = np.concatenate(runs)
    return LatencyStats(
        n_records=len(nodes),
        warm_runs=warm_runs,
        run_means_s=means.tolist(),
        mean_s=float(means.mean()),
        std_s=float(means.std()),
        p95_s=float(np.percentile(allv, 95)),
        records_per_s=float(thr.mean()),
        bytes_per_s=float(sizes.sum() / totals.mean()),
        cv=float(thr.std() / thr.mean()),
    )


def run_report(run: PathRun, latency: LatencyStats | None = None) -> dict:
    """Metrics, latency/throughput and the config needed to repeat the run."""
    keep = ("tpr", "fpr", "auc", "precision", "recall", "f1", "accuracy",
            "tp", "fp", "tn", "fn", "n_clusters", "loss_train")
    report = {
        "metrics": {k: run.metrics[k] for k in keep},
        "fit_seconds": run.fit_seconds,
        "detect_seconds": run.detect_seconds,
        "config": run.config.to_dict(),
        "seed": run.config.rwr.seed,
    }
    if latency is not None:
        report["latency"] = {"mean_s": latency.mean_s, "std_s": latency.std_s,
                             "p95_s": latency.p95_s, "runs_s": latency.run_means_s}
        report["throughput"] = {"records_per_s": latency.records_per_s,
                                "bytes_per_s": latency.bytes_per_s, "cv": latency.cv}
    return report


def bench(corpus: ReferenceCorpus, base: PipelineConfig = PipelineConfig(),
          n_records: int = 1000, warm_runs: int = 3, runs: dict | None = None) -> dict:
    """Both paths on the same corpus with the same sampling seed.

    ``runs`` may map a path name to a finished :class:`PathRun` to reuse.
    """
    out = {}
    runs = runs or {}
    test_windows = None
    train_windows = None
    for path in ("fda", "gnn"):
        run = runs.get(path)
        if run is None:
            cfg = replace(base, path=path).validate()
            run = run_path(corpus, cfg, train_windows, test_windows)
        train_windows, test_windows = run.train_windows, run.result.windows
        lat = measure_latency(run.model, corpus.test, n_records, warm_runs, run.result.graph)
        out[path] = run_report(run, lat)
    f, g = out["fda"], out["gnn"]
    out["throughput_ratio"] = f["throughput"]["records_per_s"] / g["throughput"]["records_per_s"]
    out["latency_ratio"] = f["latency"]["mean_s"] / g["latency"]["mean_s"]
    return out


@dataclass(frozen=True)
class Variant:
    name: str
    path: str
    use_rwr: bool
    clusterer: str

    @property
    def label(self) -> str:
        parts = (["RWR"] if self.use_rwr else []) + [self.path.upper(), self.clusterer]
        return " + ".join(parts)


VARIANTS = (
    Variant("v1", "gnn", True, "statistical"),
    Variant("v2", "gnn", False, "statistical"),
    Variant("v3", "gnn", False, "kmeans"),
    Variant("v4", "fda", True, "statistical"),
    Variant("v5", "fda", True, "kmeans"),
    Variant("v6", "fda", False, "statistical"),
    Variant("v7", "fda", False, "kmeans"),
)

# (with RWR, without RWR) and (FDA, GNN) pairs that share every other choice
RWR_PAIRS = (("v1", "v2"), ("v4", "v6"), ("v5", "v7"))
TIME_PAIRS = (("v4", "v1"), ("v6", "v2"), ("v7", "v3"))


def ablate(corpus: ReferenceCorpus, base: PipelineConfig = PipelineConfig(),
           n_records: int = 300, warm_runs: int = 3, runs: dict | None = None) -> list[dict]:
    """AUC and mean per-record detection time (seconds) for each variant.

    Variants sharing a path and sampling mode reuse the same features and
    differ only in the clusterer. ``runs`` may map ``(path, use_rwr)`` to a
    finished statistical-clusterer :class:`PathRun` to reuse.
    """
    rows = {}
    windows: dict = {}
    runs = runs or {}
    for path in ("gnn", "fda"):
        for use_rwr in (True, False):
            group = [v for v in VARIANTS if v.path == path and v.use_rwr == use_rwr]
            if not group:
                continue
            cfg = replace(base, path=path, use_rwr=use_rwr,
                          detector=replace(base.detector, clusterer="statistical")).validate()
            tw, sw = windows.get(use_rwr, (None, None))
            run = runs.get((path, use_rwr)) or run_path(corpus, cfg, tw, sw)
            windows[use_rwr] = (run.train_windows, run.result.windows)
            for v in group:
                model, scores = run.model, run.scores
                if v.clusterer == "kmeans":
                    dc = replace(cfg.detector, clusterer="kmeans")
                    km = detector.train_kmeans(run.train_features, dc.kmeans_k, dc.tau,
                                               cfg.rwr.seed, dc.normalize, dc.delta)
                    model = TrainedModel(replace(cfg, detector=dc), model.tfidf, km,
                                         model.net_table, model.content_gain)
                    scores, _ = detector.score_many(km, run.result.features)
                lat = measure_latency(model, corpus.test, n_records, warm_runs, run.result.graph)
                rows[v.name] = {
                    "variant": v.name,
                    "method": v.label,
                    "auc": detector.roc_auc(run.labels, scores),
                    "time_per_record_s": lat.mean_s,
                    "n_clusters": model.cluster.n_clusters,
                }
    return [rows[v.name] for v in VARIANTS]


def ablation_ordering(rows: Sequence[dict]) -> dict:
    """Check the matched-pair orderings on an ablation table."""
    by = {r["variant"]: r for r in rows}
    return {
        "rwr_beats_no_rwr": all(by[a]["auc"] > by[b]["auc"] for a, b in RWR_PAIRS),
        "fda_faster_than_gnn": all(
            by[a]["time_per_record_s"] < by[b]["time_per_record_s"] for a, b in TIME_PAIRS),
    }
