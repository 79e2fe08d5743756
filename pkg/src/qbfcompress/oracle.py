"""Semantics: QBF evaluation, projected counting, QSat->PQSat.

Two independent evaluation paths:

* evaluate() runs symbolic block-by-block elimination over BDD factors
  (bucket elimination: existential variables merge the factors that
  mention them; universal quantification distributes over the
  conjunction, dually for DNF matrices).  This is what makes verifying
  the compressed instances feasible -- they have far too many variables
  for enumeration.
* evaluate_naive() is the literal textbook recursion: enumerate all
  assignments of the outermost block, simplify, recurse.  The two paths
  are cross-checked against each other in the test suite.
"""

import itertools
import sys

from . import formula
from ._core import Bdd
from .decomp import min_fill_order
from .formula import CNF, EXISTS, FORALL, apply_assignment, normalize_prefix
from .graphs import primal_graph

sys.setrecursionlimit(200000)

DEFAULT_LIMIT = 24


class OracleError(Exception):
    pass


class LimitError(OracleError):
    pass


def _check_limit(q, limit):
    if limit is None:
        return
    n = len(q.matrix.variables())
    if n > limit:
        raise LimitError("instance has %d variables, limit is %d" % (n, limit))


def _var_levels(q):
    """BDD order: free vars on top, then blocks outer to inner.  Within a
    block, variables that the min-fill ordering eliminates first sit at
    the deepest levels, so bucket elimination quantifies cheap bottom
    variables first."""
    g = primal_graph(q.matrix)
    pos = {v: i for i, v in enumerate(min_fill_order(g))}
    groups = [sorted(q.free_vars(), key=lambda v: (-pos[v], v))]
    for _, vs in q.blocks:
        groups.append(sorted(vs, key=lambda v: (-pos[v], v)))
    level = {}
    for group in groups:
        for v in group:
            level[v] = len(level)
    return level


def _eliminate(q):
    """Quantify away all blocks; returns (bdd, factor list, level map).

    For a CNF matrix the factors are conjunctive, for DNF disjunctive.
    """
    level = _var_levels(q)
    bdd = Bdd(len(level))
    conj = q.matrix.kind == CNF
    factors = []
    for cl in q.matrix.clauses:
        f = 0 if conj else 1
        for lit in sorted(cl, key=abs):
            node = bdd.var(level[abs(lit)], lit > 0)
            f = bdd.apply_or(f, node) if conj else bdd.apply_and(f, node)
        factors.append(f)
    for quant, vs in reversed(q.blocks):
        merging = (quant == EXISTS) if conj else (quant == FORALL)
        lvls = {level[v] for v in vs}
        if merging:
            # bucket elimination, deepest variable first
            for lv in sorted(lvls, reverse=True):
                bucket = [f for f in factors if lv in bdd.support(f)]
                if not bucket:
                    continue
                factors = [f for f in factors if lv not in bdd.support(f)]
                merged = bucket[0]
                for f in bucket[1:]:
                    merged = bdd.apply_and(merged, f) if conj \
                        else bdd.apply_or(merged, f)
                factors.append(bdd.quantify(merged, {lv}, exists=conj))
        else:
            # the dual quantifier distributes over the factor combination
            factors = [bdd.quantify(f, lvls & bdd.support(f), exists=not conj)
                       for f in factors]
    return bdd, factors, level, conj


def _combine(bdd, factors, conj):
    out = 1 if conj else 0
    for f in sorted(factors):
        out = bdd.apply_and(out, f) if conj else bdd.apply_or(out, f)
    return out


def evaluate(q, limit=DEFAULT_LIMIT):
    if q.free_vars():
        raise OracleError("formula is open: %s" % sorted(q.free_vars()))
    _check_limit(q, limit)
    bdd, factors, _, conj = _eliminate(q)
    return _combine(bdd, factors, conj) == 1


def evaluate_naive(q, limit=16):
    """Independent second path: per-block truth-table enumeration."""
    if q.free_vars():
        raise OracleError("formula is open: %s" % sorted(q.free_vars()))
    _check_limit(q, limit)
    return _naive_rec(q)


def _naive_rec(q):
    const = q.matrix.constant_value()
    if not q.blocks:
        if const is None:
            raise OracleError("unassigned variables remain")
        return const
    if const is not None:
        return const
    quant, vs = q.blocks[0]
    vs = sorted(vs)
    for bits in itertools.product((0, 1), repeat=len(vs)):
        # assigning the whole block removes it from the prefix
        sub = apply_assignment(q, dict(zip(vs, bits)))
        r = _naive_rec(sub)
        if quant == EXISTS and r:
            return True
        if quant == FORALL and not r:
            return False
    return quant == FORALL


def evaluate_under(q, assignment, limit=DEFAULT_LIMIT):
    if set(assignment) != q.free_vars():
        raise OracleError("assignment domain %s != free variables %s"
                          % (sorted(assignment), sorted(q.free_vars())))
    _check_limit(q, limit)
    return evaluate(apply_assignment(q, assignment), limit=None)


def count_projected(q, limit=DEFAULT_LIMIT):
    """Number of free-variable assignments making q valid."""
    _check_limit(q, limit)
    free = q.free_vars()
    bdd, factors, level, conj = _eliminate(q)
    f = _combine(bdd, factors, conj)
    return bdd.satcount(f, [level[v] for v in free])


def qsat_to_pqsat(q):
    """Demote the first block to free variables; threshold u per the
    counting reduction (1 for an existential first block, 2^|V0| for a
    universal one)."""
    q = normalize_prefix(q)
    if q.rank < 2:
        raise OracleError("rank %d < 2" % q.rank)
    quant, vs = q.blocks[0]
    u = 1 if quant == EXISTS else 2 ** len(vs)
    return formula.Qbf(q.blocks[1:], q.matrix), u


def lift_assignment(assignment, atlas):
    """<alpha>: give every copy of x the value alpha(x)."""
    out = {}
    for x, val in assignment.items():
        copies = atlas.copies_of(x)
        if not copies:
            raise OracleError("variable %r has no copies" % (x,))
        for nv in copies:
            out[nv] = val
    return out
