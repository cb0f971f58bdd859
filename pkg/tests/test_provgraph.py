import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from conftest import rec
from oracles import expected_edges
from provfda.errors import UnknownNodeError
from provfda.provgraph import EdgeKind, ProvGraph, arrival_order, build_graph, neighbors
from provfda.synthgen import BehaviorProfile, gen_benign

S, C, A, I = (EdgeKind.SEQUENTIAL, EdgeKind.CAUSAL,
              EdgeKind.CONCURRENT_ATTACH, EdgeKind.CONCURRENT_INTERNAL)


def edge_set(g):
    return sorted((u, w, k.name.lower()) for u, w, k in g.edges)


def test_three_record_chain():
    g = build_graph([rec(ts=1), rec(ts=2), rec(ts=3)])
    assert g.edges == [(0, 1, S), (1, 2, S)]
    assert len(neighbors(g, 1)) == 2


def test_same_timestamp_followers():
    g = build_graph([rec(ts=1), rec(ts=1, proc="a.exe"), rec(ts=1, proc="b.exe")])
    assert g.edges == [(0, 1, A), (0, 2, A), (1, 2, I)]


def test_followers_after_chain():
    g = build_graph([rec(ts=1), rec(ts=2), rec(ts=2, proc="x"), rec(ts=2, proc="y"), rec(ts=3)])
    assert g.edges == [(0, 1, S), (1, 2, A), (1, 3, A), (2, 3, I), (1, 4, S)]


def test_causal_edge_on_process_name():
    parent = rec(ts=1, event=4688, proc="cmd.exe", base="cmd.exe", parent="explorer.exe")
    child = rec(ts=2, event=4688, proc="whoami.exe", parent="cmd.exe")
    g = build_graph([parent, child])
    assert sorted(g.edges) == [(0, 1, S), (0, 1, C)]
    assert edge_set(g) == expected_edges(g.records)
    assert (1, C, False) in [tuple(n) for n in g.neighbors(0)]
    assert (0, C, True) in [tuple(n) for n in g.neighbors(1)]


def test_causal_falls_back_to_base_file_name():
    parent = rec(ts=1, event=4688, proc="python.exe", base="tool.py")
    child = rec(ts=2, event=4798, proc="x.exe", parent="tool.py")
    assert (0, 1, C) in build_graph([parent, child]).edges


def test_causal_prefers_process_name_and_most_recent():
    recs = [rec(ts=1, event=4688, proc="a.exe", base="cmd.exe"),
            rec(ts=2, event=4688, proc="cmd.exe"),
            rec(ts=3, event=4689, proc="cmd.exe"),
            rec(ts=4, event=4624, proc="cmd.exe"),  # not a process event
            rec(ts=5, event=4688, proc="z.exe", parent="cmd.exe")]
    g = build_graph(recs)
    assert [e for e in g.edges if e[2] is C] == [(2, 4, C)]


def test_causal_requires_process_event_and_same_user():
    recs = [rec(user="a", ts=1, event=4624, proc="cmd.exe"),
            rec(user="b", ts=2, event=4688, proc="cmd.exe"),
            rec(user="a", ts=3, event=4688, proc="z.exe", parent="cmd.exe")]
    assert not [e for e in build_graph(recs).edges if e[2] is C]


def test_sole_node_and_empty_graph():
    g = build_graph([rec()])
    assert neighbors(g, 0) == []
    assert len(build_graph([])) == 0
    with pytest.raises(UnknownNodeError):
        neighbors(g, 1)
    with pytest.raises(UnknownNodeError):
        g.undirected_neighbors(-1)


def test_four_way_group_internal_count():
    g = build_graph([rec(ts=1)] + [rec(ts=2, proc=f"p{i}") for i in range(5)])
    # node 1 is the chain tail at t=2, nodes 2..5 form a 4-way follower group
    for v in range(2, 6):
        internal = [n for n in g.neighbors(v) if n.kind is I]
        assert len(internal) == 3


def test_three_users_disjoint_components():
    recs = []
    for t in range(1, 8):
        for u in ("P1", "P2", "P3"):
            recs.append(rec(user=u, ts=t * 10 + (t % 2), event=4688, proc="cmd.exe", parent="cmd.exe"))
    g = build_graph(recs)
    users = [r.user_id for r in g.records]
    assert all(users[u] == users[w] for u, w, _ in g.edges)
    seen = set()
    comps = 0
    for v in range(len(g)):
        if v in seen:
            continue
        comps += 1
        stack = [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            for w in g.undirected_neighbors(x):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    assert comps == 3


def test_hundred_records_ten_users():
    rng = random.Random(0)
    recs = [rec(user=f"u{rng.randrange(10)}", ts=rng.randrange(1, 30), proc=f"p{rng.randrange(4)}.exe")
            for _ in range(100)]
    g = build_graph(recs)
    assert len(g) == 100
    want_seq = sum(len({r.timestamp for r in recs if r.user_id == u}) - 1
                   for u in {r.user_id for r in recs})
    assert g.edge_counts()[S] == want_seq
    assert edge_set(g) == expected_edges(g.records)


def test_out_of_order_timestamps_are_sorted_per_user():
    recs = [rec(user="a", ts=3), rec(user="b", ts=9), rec(user="a", ts=1), rec(user="a", ts=2)]
    order = arrival_order(recs)
    assert order == [2, 1, 3, 0]
    g = build_graph(recs)
    assert [r.timestamp for r in g.records] == [1, 9, 2, 3]
    assert g.source_index == order
    assert g.edges == [(0, 2, S), (2, 3, S)]


def test_build_equals_folded_add_log():
    recs = gen_benign(BehaviorProfile(concurrency=0.4), 3, 200, seed=3)
    g1 = build_graph(recs)
    g2 = ProvGraph()
    for i in arrival_order(recs):
        g2.add_log(recs[i], i)
    assert g1.edges == g2.edges and g1.adjacency == g2.adjacency


def test_dumps(tmp_path):
    g = build_graph([rec(ts=1), rec(ts=1, proc="b")])
    g.write_edge_list(tmp_path / "e.txt")
    g.write_node_table(tmp_path / "n.csv")
    assert (tmp_path / "e.txt").read_text() == "0 1 concurrent_attach\n"
    lines = (tmp_path / "n.csv").read_text().splitlines()
    assert lines[0].startswith("node_id,source_index,user_id") and len(lines) == 3


def test_chain_tail_tracking():
    g = build_graph([rec(user="a", ts=1), rec(user="a", ts=2), rec(user="a", ts=2, proc="q"),
                     rec(user="b", ts=5)])
    assert g.per_user_chain_tail == {"a": 1, "b": 3}


# -- property tests -----------------------------------------------------------

record_lists = st.lists(
    st.builds(
        rec,
        user=st.sampled_from(["a", "b", "c"]),
        ts=st.integers(1, 6),
        event=st.sampled_from([4624, 4688, 4689, 4798]),
        proc=st.sampled_from(["cmd.exe", "x.exe", "y.exe"]),
        base=st.sampled_from(["", "cmd.exe", "y.exe"]),
        parent=st.sampled_from(["", "cmd.exe", "x.exe", "y.exe"]),
    ),
    max_size=40,
)


@settings(max_examples=200, deadline=None)
@given(record_lists)
def test_matches_rule_oracle(recs):
    g = build_graph(recs)
    assert len(g) == len(recs)
    assert edge_set(g) == expected_edges(g.records)
    assert all(u != w for u, w, _ in g.edges)


@settings(max_examples=100, deadline=None)
@given(record_lists)
def test_group_edge_counts(recs):
    g = build_graph(recs)
    groups = Counter((r.user_id, r.timestamp) for r in g.records)
    attach = Counter()
    internal = Counter()
    for u, w, k in g.edges:
        key = (g.records[w].user_id, g.records[w].timestamp)
        if k is A:
            attach[key] += 1
        elif k is I:
            internal[key] += 1
    for key, size in groups.items():
        followers = size - 1
        assert attach[key] == followers
        assert internal[key] == followers * (followers - 1) // 2


@settings(max_examples=100, deadline=None)
@given(record_lists)
def test_sequential_is_timestamp_path(recs):
    g = build_graph(recs)
    for user in g.users():
        seq = [(u, w) for u, w, k in g.edges if k is S and g.records[u].user_id == user]
        nodes = [v for v, r in enumerate(g.records) if r.user_id == user]
        distinct = len({g.records[v].timestamp for v in nodes})
        assert len(seq) == distinct - 1
        outs = Counter(u for u, _ in seq)
        ins = Counter(w for _, w in seq)
        assert max(outs.values(), default=0) <= 1 and max(ins.values(), default=0) <= 1
        assert all(g.records[u].timestamp < g.records[w].timestamp for u, w in seq)


@settings(max_examples=100, deadline=None)
@given(record_lists)
def test_every_non_sole_node_connected(recs):
    g = build_graph(recs)
    per_user = Counter(r.user_id for r in g.records)
    for v, r in enumerate(g.records):
        if per_user[r.user_id] > 1:
            assert g.undirected_neighbors(v)


@settings(max_examples=100, deadline=None)
@given(record_lists, st.randoms())
def test_group_permutation_invariance(recs, rnd):
    """Shuffling records inside each (user, timestamp) group leaves the edge
    multiset unchanged once nodes are identified by their record content."""
    base = build_graph(recs)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    other = build_graph(sorted(shuffled, key=lambda r: (r.user_id, r.timestamp)))
    ref = build_graph(sorted(recs, key=lambda r: (r.user_id, r.timestamp)))

    def kinds(g):
        return Counter(k for _, _, k in g.edges if k is not C)

    assert kinds(other) == kinds(ref) == kinds(base)
