"""Independent reference computations used by the tests.

Everything here is deliberately naive (plain loops, math module) and shares
no code with the package beyond its data types.
"""

from __future__ import annotations

import math
from collections import deque


def dft_loop(x):
    """Real/imaginary parts via the cosine and sine sums, 1-based indices."""
    N = len(x)
    out = []
    for k in range(1, N + 1):
        a = sum(x[n - 1] * math.cos(2 * math.pi * (n - 1) * (k - 1) / N) for n in range(1, N + 1))
        b = sum(-x[n - 1] * math.sin(2 * math.pi * (n - 1) * (k - 1) / N) for n in range(1, N + 1))
        out.append(complex(a, b))
    return out


def fda_feature_loop(S, C=1.0):
    """Column-by-column: DFT, squared modulus, log, keep the first half."""
    N = len(S)
    L = len(S[0])
    keep = N // 2 + 1
    feat = []
    for col in range(L):
        spec = dft_loop([S[n][col] for n in range(N)])
        for k in range(keep):
            r = spec[k].real ** 2 + spec[k].imag ** 2
            feat.append(math.log(r + 1.0) / C)
    return feat


def expected_edges(records):
    """Edge multiset implied by the construction rules for records given in
    insertion order (each user's records already timestamp-sorted).

    Returns a sorted list of (src, dst, kind_name).
    """
    edges = []
    by_user = {}
    for v, rec in enumerate(records):
        by_user.setdefault(rec.user_id, []).append(v)
    for nodes in by_user.values():
        chain = []           # first node at each distinct timestamp
        chain_of_ts = {}
        followers = {}
        for v in nodes:
            ts = records[v].timestamp
            if ts in chain_of_ts and chain[-1] == chain_of_ts[ts]:
                followers.setdefault(ts, []).append(v)
            else:
                chain_of_ts[ts] = v
                chain.append(v)
        for a, b in zip(chain, chain[1:]):
            edges.append((a, b, "sequential"))
        for ts, fol in followers.items():
            for i, v in enumerate(fol):
                edges.append((chain_of_ts[ts], v, "concurrent_attach"))
                for u in fol[:i]:
                    edges.append((u, v, "concurrent_internal"))
        for i, w in enumerate(nodes):
            ppn = records[w].parent_process_name
            if not ppn:
                continue
            parent = None
            for u in reversed(nodes[:i]):
                r = records[u]
                if r.event_id in (4688, 4689) and r.process_name == ppn:
                    parent = u
                    break
            if parent is None:
                for u in reversed(nodes[:i]):
                    r = records[u]
                    if r.event_id in (4688, 4689) and r.base_file_name == ppn:
                        parent = u
                        break
            if parent is not None:
                edges.append((parent, w, "causal"))
    return sorted(edges)


def bfs_distances(adj, source, max_depth=None):
    """adj: dict node -> iterable of neighbors (undirected)."""
    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        if max_depth is not None and dist[u] >= max_depth:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def auc_pairs(labels, scores):
    """Mann-Whitney concordance: P(score_pos > score_neg) + 0.5 P(tie)."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def tfidf_weight(token, doc, corpus):
    """tf * smoothed idf with one log entry per document; '' weighs 0."""
    if token == "":
        return 0.0
    tf = doc.count(token) / len(doc)
    df = sum(1 for d in corpus if token in d)
    return tf * (math.log((1 + len(corpus)) / (1 + df)) + 1.0)


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_scalar(xs, w_ih, w_hh, b):
    """Hidden states of one LSTM direction, one scalar at a time.

    Gate order i, f, g, o; w_ih rows 4h x d, w_hh rows 4h x h (lists).
    """
    h = len(w_hh[0])
    hs = [0.0] * h
    cs = [0.0] * h
    out = []
    for x in xs:
        z = []
        for r in range(4 * h):
            acc = b[r]
            for j, xv in enumerate(x):
                acc += w_ih[r][j] * xv
            for j in range(h):
                acc += w_hh[r][j] * hs[j]
            z.append(acc)
        new_c, new_h = [], []
        for j in range(h):
            i = _sig(z[j])
            f = _sig(z[h + j])
            g = math.tanh(z[2 * h + j])
            o = _sig(z[3 * h + j])
            c = f * cs[j] + i * g
            new_c.append(c)
            new_h.append(o * math.tanh(c))
        cs, hs = new_c, new_h
        out.append(list(hs))
    return out


def leader_loop(X, delta):
    """Plain-loop leader clustering with running-mean centroids."""
    cents, counts, assign = [], [], []

    def cos(a, b):
        na = math.sqrt(sum(v * v for v in a))
        nb = math.sqrt(sum(v * v for v in b))
        if na == 0 or nb == 0:
            return 0.0
        return sum(p * q for p, q in zip(a, b)) / (na * nb)

    for x in X:
        best, j = -2.0, -1
        for c_idx, c in enumerate(cents):
            s = cos(x, c)
            if s > best:
                best, j = s, c_idx
        if j >= 0 and best >= delta:
            counts[j] += 1
            cents[j] = [c + (xv - c) / counts[j] for c, xv in zip(cents[j], x)]
        else:
            cents.append(list(x))
            counts.append(1)
            j = len(cents) - 1
        assign.append(j)
    return cents, counts, assign


def min_sq_dist_loop(x, cents):
    return min(sum((a - b) ** 2 for a, b in zip(x, c)) for c in cents)
