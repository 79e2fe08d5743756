"""Decomposition computation, validation, transforms, and PACE I/O."""

import random

import pytest

from qbfcompress.decomp import (DecompError, check_td, compute_pd, compute_td,
                                is_m_local, label_td, make_almost_c_nice,
                                make_td, read_td, restrict, write_td)
from qbfcompress.graphs import make_graph, primal_graph

from fixtures import reference_ltd2, reference_qbf, reference_td1, reference_td2


def ref_graph():
    return primal_graph(reference_qbf().matrix)


def test_reference_tds_are_valid_width_2():
    g = ref_graph()
    for td in (reference_td1(), reference_td2()):
        assert check_td(g, td).ok
        assert td.width == 2


def test_exact_strategy_finds_width_2():
    td = compute_td(ref_graph(), "exact-tiny")
    assert check_td(ref_graph(), td).ok
    assert td.width == 2


def test_heuristics_are_valid():
    g = ref_graph()
    for strategy in ("min-fill", "min-degree"):
        td = compute_td(g, strategy)
        assert check_td(g, td).ok
        assert td.width >= 2


def test_unknown_strategy():
    with pytest.raises(DecompError):
        compute_td(ref_graph(), "nope")


def test_check_td_catches_violations():
    g = ref_graph()
    td = reference_td2()
    # vertex dropped from every bag
    bad = make_td(td.parent, td.root,
                  {t: td.bags[t] - {4} for t in td.nodes})
    rep = check_td(g, bad)
    assert not rep.ok
    assert any("vertex" in v for v in rep.violations)
    # edge x-y never covered: x only survives in a bag without y
    bad = make_td(td.parent, td.root,
                  {1: {1, 3}, 2: {1, 3}, 3: {1, 3, 4}, 4: {1, 3, 4},
                   5: {1, 2}})
    rep = check_td(g, bad)
    assert any("edge" in v for v in rep.violations)
    # connectedness broken: 4 reappears at the root with a gap at node 4
    bad = make_td(td.parent, td.root,
                  {1: {1, 2, 3}, 2: {1, 2, 3}, 3: {1, 3, 4}, 4: {1, 3},
                   5: {1, 3, 4}})
    rep = check_td(g, bad)
    assert any("connectedness" in v for v in rep.violations)
    # shape broken: root does not self-parent
    bad = make_td({1: 2, 2: 1}, 1, {1: {1, 2, 3}, 2: {1, 3, 4}})
    rep = check_td(g, bad)
    assert any("shape" in v for v in rep.violations)


def test_make_almost_c_nice():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(2, 9)
        edges = set()
        for _ in range(rng.randint(1, 2 * n)):
            a, b = rng.sample(range(1, n + 1), 2)
            edges.add((a, b))
        g = make_graph(range(1, n + 1), edges)
        td = compute_td(g, "min-fill")
        for c in (1, 2, 3):
            nice = make_almost_c_nice(td, c)
            assert nice.width == td.width
            assert check_td(g, nice).ok
            ch = nice.children()
            for t in nice.nodes:
                assert len(ch[t]) <= 2
                union = set()
                for u in ch[t]:
                    union |= nice.bags[u]
                assert len(nice.bags[t] - union) <= c


def test_label_td_gives_every_clause_a_node():
    q = reference_qbf()
    td = make_almost_c_nice(compute_td(ref_graph(), "min-fill"), 3)
    ltd = label_td(td, q.matrix)
    assert ltd.td.width == td.width
    assert check_td(ref_graph(), ltd.td).ok
    assert sorted(ltd.label.values()) == [0, 1, 2, 3]
    for t, i in ltd.label.items():
        vs = {abs(l) for l in q.matrix.clauses[i]}
        assert vs <= ltd.td.bags[t]
    assert ltd.lnode(0) == ltd.lnode_map()[0]


def test_restrict_subtree():
    td = reference_td2()
    sub = restrict(td, 2)  # x lives in t1, t2 only
    assert sub.nodes == frozenset({1, 2})
    assert sub.root == 2
    sub = restrict(td, 1)  # w lives everywhere
    assert sub.nodes == td.nodes
    with pytest.raises(DecompError):
        restrict(td, 99)


def test_pd_is_path():
    g = ref_graph()
    pd = compute_pd(g)
    assert pd.is_path()
    assert check_td(g, pd).ok


def test_m_local_counts():
    td = reference_td2()
    assert not is_m_local(td, 2)  # w sits in all five bags
    assert is_m_local(td, 5)


def test_pace_round_trip():
    td = reference_td2()
    again = read_td(write_td(td))
    g = ref_graph()
    assert check_td(g, again).ok
    assert again.width == td.width
    assert len(again.nodes) == len(td.nodes)
    # label lines survive as comments
    text = write_td(reference_ltd2().td, labels={1: 0, 2: 1, 3: 2, 4: 3})
    assert "l 1 1" in text
    read_td(text)


def test_read_td_errors():
    with pytest.raises(DecompError):
        read_td("b 1 1 2\n")  # no header
    with pytest.raises(DecompError):
        read_td("s td 2 2 2\nb 1 1 2\nb 2 1 2\n")  # disconnected
