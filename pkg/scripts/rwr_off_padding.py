"""Sensitivity of the RWR-off FDA baseline to how short neighbor windows are filled.

The direct-neighbor window has to reach the DFT length; this compares cyclic
repetition (the shipped behavior), zero rows and repeating the target itself.

    python scripts/rwr_off_padding.py
"""

import argparse
from dataclasses import replace

import numpy as np

from provfda import detector, experiment, pipeline
from provfda.fda import to_features
from provfda.provgraph import build_graph
from provfda.pipeline import PipelineConfig
from provfda.sampler import NeighborSample, direct_window


def windows(graph, length, mode):
    out = []
    for v in range(len(graph)):
        w = direct_window(graph, v, length)
        nb = graph.undirected_neighbors(v)
        if mode == "cyclic" or w.degenerate or len(nb) >= length:
            out.append(w)
        elif mode == "self":
            out.append(NeighborSample(v, tuple(nb) + (v,) * (length - len(nb))))
        else:  # zero: pad with a sentinel index pointing at an all-zero row
            out.append(NeighborSample(v, tuple(nb) + (-1,) * (length - len(nb))))
    return out


def features(feat, wins):
    scal = np.vstack([feat.scalars, np.zeros((1, feat.scalars.shape[1]))])
    idx = np.array([w.samples for w in wins])
    return to_features(scal[idx], feat.config.fda)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--users", type=int, default=10)
    ap.add_argument("--logs", type=int, default=5000)
    args = ap.parse_args()
    corpus = experiment.reference_corpus(
        experiment.ReferenceConfig(users=args.users, logs_per_user=args.logs))
    cfg = replace(PipelineConfig(), use_rwr=False)
    fr = pipeline.fit(corpus.train, cfg)
    test_graph = build_graph(corpus.test)
    test_feat = pipeline.featurizer_for(fr.model, test_graph)
    y = pipeline.node_labels(test_graph, corpus.labels)
    train_feat = pipeline.featurizer_for(fr.model, fr.graph)
    for mode in ("cyclic", "zero", "self"):
        Xtr = features(train_feat, windows(fr.graph, cfg.rwr.walk_length, mode))
        Xte = features(test_feat, windows(test_graph, cfg.rwr.walk_length, mode))
        model = detector.train(Xtr, cfg.detector.delta, cfg.detector.tau)
        scores, _ = detector.score_many(model, Xte)
        print(f"{mode:7s} auc={detector.roc_auc(y, scores):.4f} clusters={model.n_clusters}")


if __name__ == "__main__":
    main()
