"""Log provenance graph: one node per log, typed edges per the four rules.

Rule 1  consecutive distinct timestamps of a user form a Sequential chain.
Rule 2  a log whose parent process matches an earlier 4688/4689 log of the
        same user gets a directed Causal edge from that log.
Rule 3  later logs repeating the chain tail's timestamp attach to that tail.
Rule 4  those same-timestamp followers are pairwise connected.

The first log seen at a timestamp joins the chain; every further log of the
same user with that timestamp is a concurrent follower of it. A group of g
followers therefore carries g attach edges and g(g-1)/2 internal edges.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import UnknownNodeError
from .ingest import LogRecord

PROCESS_EVENTS = frozenset({4688, 4689})


class EdgeKind(IntEnum):
    SEQUENTIAL = 0
    CAUSAL = 1
    CONCURRENT_ATTACH = 2
    CONCURRENT_INTERNAL = 3


class Neighbor(NamedTuple):
    node: int
    kind: EdgeKind
    reverse: bool = False  # True only on the child's view of a Causal edge


@dataclass
class _UserState:
    chain_tail: int
    chain_ts: int
    followers: list = field(default_factory=list)  # same-timestamp logs after the tail
    by_process: dict = field(default_factory=dict)
    by_base: dict = field(default_factory=dict)


class ProvGraph:
    def __init__(self):
        self.records: list[LogRecord] = []
        self.adjacency: list[list[Neighbor]] = []
        self.edges: list[tuple[int, int, EdgeKind]] = []
        self.source_index: list[int] = []
        self._users: dict[str, _UserState] = {}
        self._undirected: list[tuple | None] = []

    def __len__(self):
        return len(self.records)

    @property
    def per_user_chain_tail(self) -> dict[str, int]:
        return {u: st.chain_tail for u, st in self._users.items()}

    def _link(self, u: int, w: int, kind: EdgeKind) -> None:
        self.edges.append((u, w, kind))
        if kind is EdgeKind.CAUSAL:
            self.adjacency[u].append(Neighbor(w, kind, False))
            self.adjacency[w].append(Neighbor(u, kind, True))
        else:
            self.adjacency[u].append(Neighbor(w, kind))
            self.adjacency[w].append(Neighbor(u, kind))
        self._undirected[u] = None
        self._undirected[w] = None

    def add_log(self, rec: LogRecord, source_index: int | None = None) -> int:
        v = len(self.records)
        self.records.append(rec)
        self.adjacency.append([])
        self._undirected.append(None)
        self.source_index.append(v if source_index is None else source_index)

        st = self._users.get(rec.user_id)
        if st is None:
            st = self._users[rec.user_id] = _UserState(chain_tail=v, chain_ts=rec.timestamp)
        elif rec.timestamp != st.chain_ts:
            self._link(st.chain_tail, v, EdgeKind.SEQUENTIAL)
            st.chain_tail = v
            st.chain_ts = rec.timestamp
            st.followers = []
        else:
            self._link(st.chain_tail, v, EdgeKind.CONCURRENT_ATTACH)
            for u in st.followers:
                self._link(u, v, EdgeKind.CONCURRENT_INTERNAL)
            st.followers.append(v)

        ppn = rec.parent_process_name
        if ppn:
            parent = st.by_process.get(ppn)
            if parent is None:
                parent = st.by_base.get(ppn)
            if parent is not None:
                self._link(parent, v, EdgeKind.CAUSAL)
        if rec.event_id in PROCESS_EVENTS:
            st.by_process[rec.process_name] = v
            if rec.base_file_name:
                st.by_base[rec.base_file_name] = v
        return v

    def _check(self, v: int) -> None:
        if not 0 <= v < len(self.records):
            raise UnknownNodeError(v)

    def neighbors(self, v: int) -> list[Neighbor]:
        self._check(v)
        return list(self.adjacency[v])

    def undirected_neighbors(self, v: int) -> tuple:
        """Distinct adjacent node ids in first-insertion order."""
        self._check(v)
        cached = self._undirected[v]
        if cached is None:
            cached = tuple(dict.fromkeys(nb.node for nb in self.adjacency[v]))
            self._undirected[v] = cached
        return cached

    def edge_counts(self) -> Counter:
        return Counter(kind for _, _, kind in self.edges)

    def users(self) -> list[str]:
        return list(self._users)

    def write_edge_list(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for u, w, kind in self.edges:
                fh.write(f"{u} {w} {kind.name.lower()}\n")

    def write_node_table(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node_id", "source_index", "user_id", "timestamp", "event_id",
                             "process_name", "base_file_name", "logon_type", "parent_process_name"])
            for v, rec in enumerate(self.records):
                writer.writerow([v, self.source_index[v], rec.user_id, rec.timestamp, rec.event_id,
                                 rec.process_name, rec.base_file_name, rec.logon_type,
                                 rec.parent_process_name])


def neighbors(graph: ProvGraph, v: int) -> list[Neighbor]:
    return graph.neighbors(v)


def arrival_order(records: Sequence[LogRecord]) -> list[int]:
    """Input indices in insertion order: arrival slots kept, each user's slots
    refilled with that user's records sorted by timestamp (stable)."""
    slots: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        slots.setdefault(rec.user_id, []).append(i)
    order = [0] * len(records)
    for idxs in slots.values():
        ranked = sorted(idxs, key=lambda i: records[i].timestamp)
        for slot, i in zip(idxs, ranked):
            order[slot] = i
    return order


def build_graph(records: Iterable[LogRecord]) -> ProvGraph:
    records = list(records)
    graph = ProvGraph()
    for i in arrival_order(records):
        graph.add_log(records[i], source_index=i)
    return graph
