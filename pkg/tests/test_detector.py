import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import auc_pairs, leader_loop, min_sq_dist_loop
from provfda import detector
from provfda.errors import ConfigError


def mixture(seed=0, per=10, dim=6, noise=0.02):
    rng = np.random.default_rng(seed)
    dirs = np.eye(dim)[:3] * 5.0
    X = np.concatenate([d + noise * rng.standard_normal((per, dim)) for d in dirs])
    return X[rng.permutation(len(X))]


def test_identical_vectors():
    m = detector.train(np.tile([1.0, 2.0, 3.0], (20, 1)))
    assert m.n_clusters == 1 and m.loss_train == 0.0


def test_orthogonal_split():
    assert detector.train(np.eye(2), delta=0.72).n_clusters == 2


def test_three_direction_mixture():
    X = mixture()
    m = detector.train(X, 0.72)
    assert m.n_clusters == 3
    cents, counts, _ = leader_loop(X.tolist(), 0.72)
    assert np.allclose(m.centroids, cents, atol=1e-12)
    assert m.member_counts.tolist() == counts
    want = np.mean([min_sq_dist_loop(x, cents) for x in X.tolist()])
    assert m.loss_train == pytest.approx(want, abs=1e-9)


def test_score_examples():
    X = mixture()
    m = detector.train(X, 0.72, tau=1.0)
    r = detector.score(m, m.centroids[1])
    assert r.score == 0.0 and r.assigned_cluster == 1 and not r.is_anomaly
    resid = [min_sq_dist_loop(x, m.centroids.tolist()) for x in X.tolist()]
    far = X[int(np.argmax(resid))]
    big = detector.ClusterModel(m.centroids, m.member_counts, m.delta, m.loss_train,
                                tau=max(resid) / m.loss_train * 1.01)
    r = detector.score(big, far)
    assert r.score <= max(resid) + 1e-12 and not r.is_anomaly
    out = np.zeros(6)
    out[5] = 5.0
    r = detector.score(m, out)
    assert r.score == pytest.approx(min_sq_dist_loop(out, m.centroids.tolist()))
    assert r.is_anomaly and r.score > m.threshold


def test_dimension_mismatch():
    m = detector.train(np.eye(3))
    with pytest.raises(ConfigError):
        detector.score(m, np.zeros(4))


@pytest.mark.parametrize("kw", [dict(delta=0.0), dict(delta=1.0), dict(tau=0.0)])
def test_train_validation(kw):
    with pytest.raises(ConfigError):
        detector.train(np.eye(2), **kw)


def test_empty_and_nonfinite_rejected():
    with pytest.raises(ConfigError):
        detector.train(np.zeros((0, 3)))
    with pytest.raises(ConfigError):
        detector.train([[1.0, np.nan]])


def test_zero_vector_is_singleton_not_crash():
    X = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.1], [0.0, 0.0]])
    m = detector.train(X)
    cents, _, assign = leader_loop(X.tolist(), 0.72)
    assert m.n_clusters == len(cents) == 3
    assert detector.cosine([0, 0], [1, 0]) == 0.0


def test_training_mean_score_equals_loss():
    X = np.random.default_rng(0).standard_normal((500, 20))
    for normalize in (False, True):
        m = detector.train(X, 0.3, normalize=normalize)
        s, _ = detector.score_many(m, X)
        assert abs(s.mean() - m.loss_train) <= 1e-9


def test_min_sq_distances_chunked():
    rng = np.random.default_rng(1)
    X, C = rng.standard_normal((50, 4)), rng.standard_normal((9, 4))
    d, idx = detector.min_sq_distances(X, C)
    brute = ((X[:, None] - C[None]) ** 2).sum(-1)
    assert np.array_equal(idx, brute.argmin(1)) and np.allclose(d, brute.min(1), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (40, 5), elements=st.floats(-10, 10, allow_nan=False)), st.floats(0.05, 0.9))
def test_delta_monotone(X, d1):
    d2 = min(0.99, d1 + 0.05)
    assert detector.train(X, d2).n_clusters >= detector.train(X, d1).n_clusters


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6,), elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0.01, 100.0))
def test_argmax_scale_invariance(v, c):
    C = mixture(3)[:8]
    sims = [detector.cosine(v, x) for x in C]
    sims_c = [detector.cosine(c * v, x) for x in C]
    # identical up to rounding, so the winner stays a winner
    assert sims_c[int(np.argmax(sims))] >= max(sims_c) - 1e-12


def test_kmeans_clusterer():
    X = mixture(per=20)
    m = detector.train_kmeans(X, k=3, seed=0)
    assert m.clusterer == "kmeans" and m.n_clusters == 3 and m.member_counts.sum() == 60
    s, _ = detector.score_many(m, X)
    assert abs(s.mean() - m.loss_train) <= 1e-9
    assert detector.train_kmeans(np.ones((5, 2)), k=8).n_clusters == 1


def test_auc_examples():
    assert detector.roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert detector.roc_auc([1, 1, 0, 0], [0.1, 0.2, 0.8, 0.9]) == 0.0
    assert detector.roc_auc([1, 0], [0.5, 0.5]) == 0.5
    assert detector.roc_auc([1, 1], [0.1, 0.2]) is None


def test_auc_twenty_point_oracle():
    rng = np.random.default_rng(3)
    y = rng.random(20) < 0.4
    s = np.round(rng.random(20), 1)  # coarse values force ties
    assert detector.roc_auc(y, s) == pytest.approx(auc_pairs(y, s), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 6)), min_size=2, max_size=40))
def test_auc_matches_concordance(pairs):
    y = [p[0] for p in pairs]
    s = [float(p[1]) for p in pairs]
    got = detector.roc_auc(y, s)
    if all(y) or not any(y):
        assert got is None
    else:
        assert got == pytest.approx(auc_pairs(y, s), abs=1e-12)


def test_auc_chance_level():
    rng = np.random.default_rng(4)
    assert abs(detector.roc_auc(rng.random(20000) < 0.3, rng.random(20000)) - 0.5) < 0.05


def test_evaluate_point_metrics():
    m = detector.evaluate([1, 1, 0, 0, 0], [5.0, 0.5, 2.0, 0.1, 0.2], threshold=1.0)
    assert (m["tp"], m["fn"], m["fp"], m["tn"]) == (1, 1, 1, 2)
    assert m["tpr"] == 0.5 and m["fpr"] == pytest.approx(1 / 3)
    assert m["precision"] == 0.5 and m["f1"] == 0.5 and m["accuracy"] == 0.6
    single = detector.evaluate([0, 0, 0], [1.0, 2.0, 3.0], 1.5)
    assert single["auc"] is None and single["fp"] == 2


def test_evaluate_model():
    X = mixture()
    m = detector.train(X)
    out = detector.evaluate_model(m, np.vstack([X, np.full((3, 6), 9.0)]), [0] * 30 + [1] * 3)
    assert out["auc"] == 1.0 and out["tp"] == 3
