"""n-hop random walk with restart (RWR) neighbor sampling."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError
from .provgraph import ProvGraph
from .rng import INV53, M1, M2, GOLDEN, MASK64, derive


@dataclass(frozen=True)
class RwrConfig:
    walk_length: int = 40
    hop_limit: int = 3
    restart_probability: float = 0.15
    seed: int = 42

    def __post_init__(self):
        if self.walk_length < 1:
            raise ConfigError("walk_length must be >= 1")
        if self.hop_limit < 1:
            raise ConfigError("hop_limit must be >= 1")
        if not 0.0 <= self.restart_probability < 1.0:
            raise ConfigError("restart_probability must lie in [0, 1)")


@dataclass(frozen=True)
class NeighborSample:
    target: int
    samples: tuple
    degenerate: bool = False  # isolated target; samples are copies of it


def ball(graph: ProvGraph, v: int, n: int) -> dict[int, int]:
    """BFS distances from ``v`` on the undirected view, truncated at ``n`` hops."""
    dist = {v: 0}
    frontier = deque([v])
    while frontier:
        u = frontier.popleft()
        d = dist[u]
        if d == n:
            continue
        for w in graph.undirected_neighbors(u):
            if w not in dist:
                dist[w] = d + 1
                frontier.append(w)
    return dist


def hop_distance(graph: ProvGraph, u: int, v: int) -> int | None:
    """Exact undirected BFS distance, or None when unreachable."""
    graph.undirected_neighbors(v)  # validates v
    if u == v:
        graph.undirected_neighbors(u)
        return 0
    seen = {u}
    frontier = [u]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            for w in graph.undirected_neighbors(x):
                if w == v:
                    return d
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return None


def sample(graph: ProvGraph, v: int, cfg: RwrConfig) -> NeighborSample:
    """Collect ``walk_length`` visited nodes of a restarting walk from ``v``.

    Each step first draws a uniform; below ``restart_probability`` the walker
    jumps back to ``v``. Otherwise it moves to a uniformly chosen distinct
    neighbor, emits it unless it is ``v``, and jumps back to ``v`` once the
    new position is ``hop_limit`` hops away.
    """
    nbrs = graph.undirected_neighbors(v)
    k = cfg.walk_length
    if not nbrs:
        return NeighborSample(v, (v,) * k, degenerate=True)
    n = cfg.hop_limit
    dist = ball(graph, v, n)
    # SplitMix64 inlined; identical to rng.SplitMix64.uniform/below
    state = derive(cfg.seed, v)
    p = cfg.restart_probability
    undirected = graph.undirected_neighbors
    out = []
    cur = v
    while len(out) < k:
        state = (state + GOLDEN) & MASK64
        z = ((state ^ (state >> 30)) * M1) & MASK64
        z = ((z ^ (z >> 27)) * M2) & MASK64
        if ((z ^ (z >> 31)) >> 11) * INV53 < p:
            cur = v
            continue
        options = nbrs if cur == v else undirected(cur)
        state = (state + GOLDEN) & MASK64
        z = ((state ^ (state >> 30)) * M1) & MASK64
        z = ((z ^ (z >> 27)) * M2) & MASK64
        cur = options[((z ^ (z >> 31)) * len(options)) >> 64]
        if cur != v:
            out.append(cur)
        if dist[cur] >= n:
            cur = v
    return NeighborSample(v, tuple(out))


def direct_window(graph: ProvGraph, v: int, length: int) -> NeighborSample:
    """RWR-off window: direct neighbors in adjacency order, cyclically
    repeated (or truncated) to ``length``."""
    nbrs = graph.undirected_neighbors(v)
    if not nbrs:
        return NeighborSample(v, (v,) * length, degenerate=True)
    reps = -(-length // len(nbrs))
    return NeighborSample(v, (nbrs * reps)[:length])


def sample_all(graph: ProvGraph, cfg: RwrConfig, nodes: Iterable[int] | None = None,
               rwr: bool = True) -> list[NeighborSample]:
    nodes = range(len(graph)) if nodes is None else nodes
    if rwr:
        return [sample(graph, v, cfg) for v in nodes]
    return [direct_window(graph, v, cfg.walk_length) for v in nodes]
