"""End-to-end wiring: records -> graph -> encodings -> node features -> detector."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from . import detector
from .encoder import Encoder, TfIdfModel, fit_tfidf, network_embed, node_key, tokenize
from .errors import ConfigError
from .fda import FdaConfig, feature_length, to_feature, to_features
from .gnn_embed import BiRnnWeights, aggregate, balance_blocks, make_weights, node_inputs
from .ingest import LogRecord
from .provgraph import ProvGraph, build_graph
from .sampler import NeighborSample, RwrConfig, direct_window, sample, sample_all

PATHS = ("fda", "gnn")
CLUSTERERS = ("statistical", "kmeans")


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int = 100
    seed: int = 7
    sg_epochs: int = 5
    sg_neg: int = 5
    sg_window: int = 5
    sg_lr: float = 0.025
    sg_max_walks: int = 1000


@dataclass(frozen=True)
class GnnConfig:
    hidden: tuple = (64, 32)
    seed: int = 11
    input_scale: float = 1.0


@dataclass(frozen=True)
class DetectorConfig:
    delta: float = 0.72
    tau: float = 1.0
    clusterer: str = "statistical"
    kmeans_k: int = 8
    normalize: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    rwr: RwrConfig = field(default_factory=RwrConfig)
    fda: FdaConfig = field(default_factory=FdaConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    gnn: GnnConfig = field(default_factory=GnnConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    path: str = "fda"
    use_rwr: bool = True

    def validate(self) -> "PipelineConfig":
        if self.path not in PATHS:
            raise ConfigError(f"path must be one of {PATHS}, got {self.path!r}")
        if self.detector.clusterer not in CLUSTERERS:
            raise ConfigError(f"clusterer must be one of {CLUSTERERS}")
        if self.fda.window != self.rwr.walk_length:
            raise ConfigError(
                f"DFT window ({self.fda.window}) must equal walk length ({self.rwr.walk_length})")
        if self.encoder.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1")
        if not 0.0 < self.detector.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if not self.detector.tau > 0:
            raise ConfigError("tau must be > 0")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        parts = {
            "rwr": RwrConfig, "fda": FdaConfig, "encoder": EncoderConfig,
            "gnn": GnnConfig, "detector": DetectorConfig,
        }
        kwargs = {}
        for key, value in d.items():
            if key in parts:
                sub = dict(value)
                if key == "gnn" and "hidden" in sub:
                    sub["hidden"] = tuple(sub["hidden"])
                kwargs[key] = parts[key](**sub)
            elif key in {f.name for f in fields(cls)}:
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**kwargs).validate()

    @property
    def feature_dim(self) -> int:
        if self.path == "fda":
            return feature_length(self.fda.window, 5)
        return self.encoder.embed_dim


@dataclass
class TrainedModel:
    config: PipelineConfig
    tfidf: TfIdfModel
    cluster: detector.ClusterModel
    net_table: dict = field(default_factory=dict)
    content_gain: float = 1.0

    def weights(self) -> BiRnnWeights | None:
        if self.config.path != "gnn":
            return None
        e = self.config.encoder.embed_dim
        g = self.config.gnn
        return make_weights(2 * e, g.hidden, e, g.seed, g.input_scale)


class GraphFeaturizer:
    """Holds one published graph plus per-node encodings for a model."""

    def __init__(self, graph: ProvGraph, config: PipelineConfig, tfidf: TfIdfModel,
                 net_table: dict | None = None, weights: BiRnnWeights | None = None,
                 content_gain: float = 1.0):
        self.graph = graph
        self.config = config
        e = config.encoder.embed_dim
        self.encoder = Encoder(tfidf, e, config.encoder.seed)
        self.tokens = [tokenize(r) for r in graph.records]
        if self.tokens:
            self.scalars, self.contents = self.encoder.encode_many(self.tokens)
        else:
            self.scalars, self.contents = np.zeros((0, 5)), np.zeros((0, e))
        self.net_table = net_table or {}
        self.weights = weights
        self.content_gain = content_gain
        self.inputs = None
        self.missing_network = None
        if config.path == "gnn" and weights is not None:
            self.attach_network(self.net_table, weights, content_gain)

    def attach_network(self, net_table: dict, weights: BiRnnWeights, content_gain: float) -> None:
        self.net_table = net_table
        self.weights = weights
        self.content_gain = content_gain
        self.inputs, self.missing_network = node_inputs(
            self.graph.records, self.encoder, net_table, self.encoder.e, self.contents, content_gain)

    def window(self, v: int) -> NeighborSample:
        if self.config.use_rwr:
            return sample(self.graph, v, self.config.rwr)
        return direct_window(self.graph, v, self.config.rwr.walk_length)

    def windows(self, nodes=None) -> list[NeighborSample]:
        return sample_all(self.graph, self.config.rwr, nodes, rwr=self.config.use_rwr)

    def features(self, windows: Sequence[NeighborSample], batch: int = 512) -> np.ndarray:
        if not windows:
            return np.zeros((0, self.config.feature_dim))
        idx = np.array([w.samples for w in windows], dtype=np.int64)
        if self.config.path == "fda":
            return to_features(self.scalars[idx], self.config.fda)
        out = np.empty((len(idx), self.config.encoder.embed_dim))
        for s in range(0, len(idx), batch):
            out[s:s + batch] = aggregate(self.inputs[idx[s:s + batch]], self.weights)
        return out

    def detect_one(self, v: int, cluster: detector.ClusterModel) -> detector.DetectionResult:
        """Per-record path at batch size 1: encode the log, sample, featurize, score."""
        rec = self.graph.records[v]
        tv = tokenize(rec)
        win = self.window(v)
        if self.config.path == "fda":
            self.scalars[v] = self.encoder.scalars(tv)
            feat = to_feature(self.scalars[np.asarray(win.samples)], self.config.fda)
        else:
            row, _ = node_inputs([rec], self.encoder, self.net_table, self.encoder.e,
                                 self.encoder.content(tv)[None], self.content_gain)
            self.inputs[v] = row[0]
            feat = aggregate(self.inputs[np.asarray(win.samples)], self.weights)
        return detector.score(cluster, feat)


def walk_sentences(graph: ProvGraph, windows: Sequence[NeighborSample], max_walks: int) -> list[list[str]]:
    """Skip-gram corpus keyed by log type, evenly strided down to ``max_walks``."""
    step = max(1, -(-len(windows) // max_walks)) if max_walks > 0 else 1
    recs = graph.records
    return [
        [node_key(recs[w.target])] + [node_key(recs[s]) for s in w.samples]
        for w in windows[::step]
    ]


@dataclass
class FitResult:
    model: TrainedModel
    graph: ProvGraph
    features: np.ndarray
    windows: list
    seconds: float


def fit(records: Sequence[LogRecord], config: PipelineConfig,
        windows: list | None = None) -> FitResult:
    """Train a model on benign records. ``windows`` may be passed in to reuse
    samples computed for the same graph and sampling config."""
    config.validate()
    t0 = time.perf_counter()
    graph = build_graph(records)
    if len(graph) == 0:
        raise ConfigError("training corpus is empty")
    tfidf = fit_tfidf(tokenize(r) for r in graph.records)
    feat = GraphFeaturizer(graph, config, tfidf)
    if windows is None:
        windows = feat.windows()
    net_table: dict = {}
    gain = 1.0
    if config.path == "gnn":
        ec = config.encoder
        sentences = walk_sentences(graph, windows, ec.sg_max_walks)
        raw = network_embed(sentences, ec.embed_dim, ec.sg_epochs, ec.sg_lr, ec.sg_neg,
                            ec.seed, ec.sg_window)
        net_table, gain = balance_blocks(raw, graph.records, feat.contents)
        model_stub = TrainedModel(config, tfidf, None, net_table, gain)
        feat.attach_network(net_table, model_stub.weights(), gain)
    X = feat.features(windows)
    dc = config.detector
    if dc.clusterer == "kmeans":
        cluster = detector.train_kmeans(X, dc.kmeans_k, dc.tau, config.rwr.seed, dc.normalize, dc.delta)
    else:
        cluster = detector.train(X, dc.delta, dc.tau, dc.normalize)
    model = TrainedModel(config, tfidf, cluster, net_table, gain)
    return FitResult(model, graph, X, windows, time.perf_counter() - t0)


def featurizer_for(model: TrainedModel, graph: ProvGraph) -> GraphFeaturizer:
    return GraphFeaturizer(graph, model.config, model.tfidf, model.net_table, model.weights(),
                           model.content_gain)


@dataclass
class DetectResult:
    graph: ProvGraph
    featurizer: GraphFeaturizer
    features: np.ndarray
    scores: np.ndarray
    clusters: np.ndarray
    windows: list

    def by_source(self) -> tuple[np.ndarray, np.ndarray]:
        """Scores and nearest-cluster ids re-ordered to input record order."""
        order = np.argsort(np.asarray(self.graph.source_index), kind="stable")
        return self.scores[order], self.clusters[order]


def detect(model: TrainedModel, records: Sequence[LogRecord], windows: list | None = None) -> DetectResult:
    graph = build_graph(records)
    feat = featurizer_for(model, graph)
    if windows is None:
        windows = feat.windows()
    X = feat.features(windows)
    if len(X):
        scores, clusters = detector.score_many(model.cluster, X)
    else:
        scores, clusters = np.zeros(0), np.zeros(0, dtype=np.int64)
    return DetectResult(graph, feat, X, scores, clusters, windows)


def node_labels(graph: ProvGraph, labels: Sequence[bool]) -> np.ndarray:
    """Map per-input-record labels onto graph node order."""
    lab = np.asarray(labels, dtype=bool)
    return lab[np.asarray(graph.source_index, dtype=np.int64)]
