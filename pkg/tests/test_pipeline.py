from dataclasses import replace

import numpy as np
import pytest

from provfda import pipeline
from provfda.detector import roc_auc
from provfda.errors import ConfigError
from provfda.fda import FdaConfig
from provfda.pipeline import DetectorConfig, PipelineConfig
from provfda.sampler import RwrConfig
from provfda.workers import detect_parallel


def test_defaults():
    cfg = PipelineConfig().validate()
    assert (cfg.rwr.walk_length, cfg.rwr.hop_limit, cfg.encoder.embed_dim,
            cfg.detector.delta, cfg.fda.window) == (40, 3, 100, 0.72, 40)
    assert cfg.feature_dim == 105
    assert replace(cfg, path="gnn").feature_dim == 100


@pytest.mark.parametrize("cfg", [
    PipelineConfig(path="lstm"),
    PipelineConfig(fda=FdaConfig(window=32)),
    PipelineConfig(detector=DetectorConfig(clusterer="dbscan")),
    PipelineConfig(detector=DetectorConfig(delta=1.5)),
])
def test_validation_errors(cfg):
    with pytest.raises(ConfigError):
        cfg.validate()


def test_dict_roundtrip():
    cfg = PipelineConfig(rwr=RwrConfig(walk_length=20), fda=FdaConfig(window=20), path="gnn")
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"bogus": 1})


@pytest.mark.parametrize("which", ["fda_fit", "gnn_fit"])
def test_training_mean_score_equals_loss(which, request, small_corpus):
    fr = request.getfixturevalue(which)
    dr = pipeline.detect(fr.model, small_corpus[0])
    assert abs(dr.scores.mean() - fr.model.cluster.loss_train) <= 1e-9
    assert fr.model.cluster.n_clusters >= 1 and fr.model.cluster.loss_train >= 0


@pytest.mark.parametrize("which", ["fda_fit", "gnn_fit"])
def test_detect_one_matches_batch(which, request, small_corpus):
    fr = request.getfixturevalue(which)
    dr = pipeline.detect(fr.model, small_corpus[1].records)
    for v in range(0, len(dr.graph), 97):
        r = dr.featurizer.detect_one(v, fr.model.cluster)
        assert r.score == pytest.approx(dr.scores[v], rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("which", ["fda_fit", "gnn_fit"])
def test_parallel_equals_serial(which, request, small_corpus):
    fr = request.getfixturevalue(which)
    serial = pipeline.detect(fr.model, small_corpus[1].records)
    par = detect_parallel(fr.model, small_corpus[1].records, workers=3, chunk=64, queue_size=2)
    assert np.array_equal(serial.scores, par.scores)
    assert np.array_equal(serial.clusters, par.clusters)


def test_small_corpus_detection_above_chance(fda_fit, small_corpus):
    # sanity only; the reference-scale threshold lives in the acceptance suite
    mixed = small_corpus[1]
    dr = pipeline.detect(fda_fit.model, mixed.records)
    y = pipeline.node_labels(dr.graph, mixed.labels)
    assert roc_auc(y, dr.scores) > 0.6
    scores, _ = dr.by_source()
    assert len(scores) == len(mixed.records)


def test_fit_deterministic(small_corpus, small_config):
    a = pipeline.fit(small_corpus[0][:300], small_config)
    b = pipeline.fit(small_corpus[0][:300], small_config)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.model.cluster.centroids, b.model.cluster.centroids)


def test_empty_inputs(fda_fit):
    with pytest.raises(ConfigError):
        pipeline.fit([], PipelineConfig())
    assert len(pipeline.detect(fda_fit.model, []).scores) == 0


def test_kmeans_fit(small_corpus, small_config):
    cfg = replace(small_config, detector=DetectorConfig(clusterer="kmeans", kmeans_k=4))
    fr = pipeline.fit(small_corpus[0][:400], cfg)
    assert fr.model.cluster.clusterer == "kmeans" and fr.model.cluster.n_clusters == 4
