"""Parallel detection over a published graph with bounded queues.

One producer enqueues node chunks, ``workers`` threads sample and featurize
them, and a single scorer thread applies the detector. Both queues are
bounded, so a slow stage blocks its upstream instead of buffering. Sampling
is seeded per node, which makes the output identical to the serial path
regardless of scheduling.
"""

from __future__ import annotations

import queue
import threading

import numpy as np

from . import detector
from .pipeline import DetectResult, TrainedModel, featurizer_for
from .provgraph import build_graph

_DONE = object()


def detect_parallel(model: TrainedModel, records, workers: int = 4, chunk: int = 256,
                    queue_size: int = 8) -> DetectResult:
    if workers < 1:
        raise ValueError("workers must be >= 1")
    graph = build_graph(records)
    feat = featurizer_for(model, graph)
    n = len(graph)
    dim = model.config.feature_dim
    X = np.zeros((n, dim))
    scores = np.zeros(n)
    clusters = np.zeros(n, dtype=np.int64)
    windows: list = [None] * n
    jobs: queue.Queue = queue.Queue(maxsize=queue_size)
    done: queue.Queue = queue.Queue(maxsize=queue_size)
    errors: list = []

    def work():
        while True:
            item = jobs.get()
            if item is _DONE:
                done.put(_DONE)
                return
            start, stop = item
            try:
                win = feat.windows(range(start, stop))
                done.put((start, stop, win, feat.features(win)))
            except Exception as exc:  # surfaced after join
                errors.append(exc)
                done.put((start, stop, None, None))

    def score():
        finished = 0
        while finished < workers:
            item = done.get()
            if item is _DONE:
                finished += 1
                continue
            start, stop, win, F = item
            if F is None:
                continue
            windows[start:stop] = win
            X[start:stop] = F
            scores[start:stop], clusters[start:stop] = detector.score_many(model.cluster, F)

    threads = [threading.Thread(target=work, daemon=True) for _ in range(workers)]
    scorer = threading.Thread(target=score, daemon=True)
    for t in threads:
        t.start()
    scorer.start()
    for start in range(0, n, chunk):
        jobs.put((start, min(n, start + chunk)))
    for _ in threads:
        jobs.put(_DONE)
    for t in threads:
        t.join()
    scorer.join()
    if errors:
        raise errors[0]
    return DetectResult(graph, feat, X, scores, clusters, windows)
