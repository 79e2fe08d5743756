"""Finite-domain instances: format, semantics, and the analogous reduction."""

import pytest

from qbfcompress import randgen
from qbfcompress.compressor import CompressError
from qbfcompress.decomp import make_td
from qbfcompress.formula import CNF, EXISTS, FORALL, make_matrix, make_qbf
from qbfcompress.oracle import OracleError, evaluate
from qbfcompress.qcsp import (Constraint, LabeledTd, QcspError, _flatten,
                              _merge_equalities, apply_qcsp_assignment,
                              compress_qcsp, evaluate_qcsp,
                              evaluate_qcsp_naive, label_qcsp_td, make_qcsp,
                              parse_qcsp, qcsp_primal_graph, reduce_s,
                              serialize_qcsp)

SAMPLE = """\
c toy instance over domain {0,1,2}
qcsp 3 3 2 2
e 1 0
a 2 3 0
s 1 2
t 0 0
t 1 1
t 2 2
s 2 3
t 0 0
t 0 1
t 0 2
t 1 0
t 2 0
"""


def test_parse_basic():
    q = parse_qcsp(SAMPLE)
    assert q.domain_size == 3
    assert q.blocks == ((EXISTS, frozenset({1})), (FORALL, frozenset({2, 3})))
    assert q.constraints[0].scope == (1, 2)
    assert (2, 2) in q.constraints[0].allowed
    assert len(q.constraints[1].allowed) == 5


def test_round_trip():
    q = parse_qcsp(SAMPLE)
    assert parse_qcsp(serialize_qcsp(q)) == q


@pytest.mark.parametrize("text", [
    "e 1 0\ns 1\nt 0\n",                   # missing header
    "qcsp 2 1\ne 1 0\ns 1\nt 0\n",         # short header
    "qcsp 2 1 1 1\ne x 0\ns 1\nt 0\n",     # bad integer
    "qcsp 2 1 1 1\nt 0\n",                 # tuple before scope
    "qcsp 2 1 1 1\nwhat\n",                # unrecognized line
])
def test_parse_errors(text):
    with pytest.raises(QcspError):
        parse_qcsp(text)


def test_apply_assignment():
    q = parse_qcsp(SAMPLE)
    r = apply_qcsp_assignment(q, {2: 0})
    # first table collapses to 1=0, second to 3 unconstrained (full) table
    tables = {c.scope: c.allowed for c in r.constraints}
    assert tables[(1,)] == frozenset({(0,)})
    assert tables[(3,)] == frozenset({(0,), (1,), (2,)})
    # an assignment no tuple extends leaves a falsified marker
    r = apply_qcsp_assignment(q, {1: 0, 2: 1})
    assert any(c.scope == () and not c.allowed for c in r.constraints)
    assert r.constant_value() is False


def test_known_verdicts():
    # diagonal table: exists 1 forall 2 . 1=2 is false, forall/exists is true
    diag = Constraint((1, 2), frozenset({(a, a) for a in range(3)}))
    q = make_qcsp(3, [(EXISTS, {1}), (FORALL, {2})], [diag])
    assert not evaluate_qcsp(q)
    assert not evaluate_qcsp_naive(q)
    q = make_qcsp(3, [(FORALL, {2}), (EXISTS, {1})], [diag])
    assert evaluate_qcsp(q)
    assert evaluate_qcsp_naive(q)


def test_two_paths_agree_on_random_instances():
    for q in randgen.qcsp_suite(7, 80, max_vars=7):
        assert evaluate_qcsp(q) == evaluate_qcsp_naive(q)


def test_open_instance_rejected():
    q = make_qcsp(2, [], [Constraint((1,), frozenset({(0,)}))])
    with pytest.raises(OracleError):
        evaluate_qcsp(q)
    with pytest.raises(OracleError):
        evaluate_qcsp_naive(q)


def test_boolean_embedding_matches_qbf_oracle():
    # over domain {0,1} a table constraint is a CNF: one clause per
    # forbidden tuple ruling that combination out
    import itertools
    for q in randgen.qcsp_suite(13, 40, domain_size=2, max_vars=7):
        clauses = []
        for c in q.constraints:
            for tup in itertools.product((0, 1), repeat=len(c.scope)):
                if tup in c.allowed:
                    continue
                clauses.append({-v if b else v for v, b in zip(c.scope, tup)})
        if not clauses:
            assert evaluate_qcsp(q)
            continue
        used = {abs(l) for cl in clauses for l in cl}
        blocks = [(quant, vs & used) for quant, vs in q.blocks]
        qbf = make_qbf(blocks, make_matrix(CNF, clauses))
        assert evaluate(qbf, limit=None) == evaluate_qcsp(q)


def test_flatten_tables():
    c = _flatten((1, 2), [[("eq0", 1), ("ne0", 2)]], 3)
    assert c.scope == (1, 2)
    assert c.allowed == frozenset({(0, 1), (0, 2)})
    c = _flatten((1, 2), [[("eqv", 1, 2)], [("eqc", 1, 2), ("eq0", 2)]], 3)
    assert c.allowed == frozenset({(0, 0), (1, 1), (2, 2), (2, 0)})
    # contradictory branch contributes nothing
    c = _flatten((1,), [[("eq0", 1), ("ne0", 1)]], 2)
    assert c.allowed == frozenset()
    with pytest.raises(QcspError):
        _flatten((1,), [[("what", 1)]], 2)


def test_merge_equalities():
    diag = frozenset({(a, a) for a in range(2)})
    q = make_qcsp(2, [(EXISTS, {1, 2, 3})],
                  [Constraint((1, 2), diag),
                   Constraint((2, 3), frozenset({(0, 1), (1, 0)}))])
    m = _merge_equalities(q)
    # 1 and 2 collapse into one variable; the xor table survives renamed
    assert len(m.variables()) == 2
    assert all(len(set(c.scope)) == len(c.scope) for c in m.constraints)
    assert evaluate_qcsp_naive(m) == evaluate_qcsp_naive(q)
    # a universal inner variable must not be merged away
    q = make_qcsp(2, [(EXISTS, {1}), (FORALL, {2})], [Constraint((1, 2), diag)])
    m = _merge_equalities(q)
    assert len(m.variables()) == 2


def test_reduce_equivalence_on_random_instances():
    for q in randgen.qcsp_suite(21, 30, max_vars=7):
        res = compress_qcsp(q)
        assert res.reduced.rank == q.rank + 1
        assert evaluate_qcsp(res.reduced, limit=None) == evaluate_qcsp(q)


def test_reduce_preconditions():
    diag = Constraint((1, 2), frozenset({(a, a) for a in range(2)}))
    ends_exists = make_qcsp(2, [(FORALL, {2}), (EXISTS, {1})], [diag])
    with pytest.raises(CompressError):
        compress_qcsp(ends_exists)
    q = make_qcsp(2, [(EXISTS, {1}), (FORALL, {2})], [diag])
    td = make_td({1: 1}, 1, {1: {1, 2}})
    # labeling must hit every constraint
    with pytest.raises(CompressError):
        reduce_s(q, LabeledTd(td, {}, None))
    # and every scope variable must be introduced at the label node
    bad = make_td({1: 2, 2: 2}, 2, {1: {1, 2}, 2: {1, 2}})
    with pytest.raises(CompressError):
        reduce_s(q, LabeledTd(bad, {2: 0}, None))
    # mixed arities are rejected
    mixed = make_qcsp(2, [(FORALL, {1, 2})],
                      [diag, Constraint((1,), frozenset({(0,)}))])
    assert mixed.arity() is None
    with pytest.raises(CompressError):
        compress_qcsp(mixed)


def test_label_td_makes_dedicated_leaves():
    q = parse_qcsp(SAMPLE)
    g = qcsp_primal_graph(q)
    from qbfcompress.decomp import check_td, compute_td
    td = compute_td(g, "min-fill")
    ltd = label_qcsp_td(td, q.constraints)
    assert check_td(g, ltd.td).ok
    assert ltd.td.width == td.width
    assert sorted(ltd.label.values()) == [0, 1]
    for t, i in ltd.label.items():
        assert ltd.td.bags[t] == frozenset(q.constraints[i].scope)
        assert not ltd.td.children()[t]
