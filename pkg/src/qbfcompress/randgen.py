"""Seeded random instance generators.

Used by the test suites and the CLI equivalence harness.  All
generators take a random.Random so runs are reproducible from a seed.
The QBF generator keeps the matrix kind matched to the innermost
quantifier (DNF under a trailing universal block, CNF under a trailing
existential one), which is the shape the compressor accepts.
"""

import random

from .formula import CNF, DNF, EXISTS, FORALL, make_matrix, make_qbf, normalize_prefix
from .qcsp import Constraint, make_qcsp


def _random_blocks(rng, nv, rank, last):
    """Partition variables 1..nv into `rank` alternating blocks ending
    with quantifier `last`."""
    vs = list(range(1, nv + 1))
    rng.shuffle(vs)
    cuts = sorted(rng.sample(range(1, nv), rank - 1)) if rank > 1 else []
    groups = []
    prev = 0
    for cut in cuts + [nv]:
        groups.append(vs[prev:cut])
        prev = cut
    other = FORALL if last == EXISTS else EXISTS
    quants = [last if (rank - 1 - i) % 2 == 0 else other for i in range(rank)]
    return list(zip(quants, groups))


def random_qbf(rng, max_vars=12, max_rank=3, last=None, max_clauses=None):
    """One random closed prenex QBF over a 3-CNF/3-DNF matrix.

    Every variable occurs in the matrix; terms/clauses have 1-3 distinct
    variables with random polarities.
    """
    nv = rng.randint(3, max_vars)
    rank = rng.randint(1, min(max_rank, nv))
    if last is None:
        last = rng.choice([EXISTS, FORALL])
    kind = DNF if last == FORALL else CNF
    blocks = _random_blocks(rng, nv, rank, last)
    vs = list(range(1, nv + 1))
    clauses = []
    for _ in range(rng.randint(2, max_clauses or 2 * nv)):
        scope = rng.sample(vs, rng.randint(1, 3))
        clauses.append({v * rng.choice([1, -1]) for v in scope})
    covered = {abs(l) for cl in clauses for l in cl}
    for v in set(vs) - covered:
        clauses.append({v * rng.choice([1, -1])})
    q = make_qbf(blocks, make_matrix(kind, clauses))
    return normalize_prefix(q)


def qbf_suite(seed, count, **kw):
    """Deterministic list of random QBFs."""
    rng = random.Random(seed)
    return [random_qbf(rng, **kw) for _ in range(count)]


def random_qcsp(rng, domain_size=None, max_vars=8, max_rank=3, arity=None,
                last=FORALL):
    """One random closed QCSP with a fixed constraint arity.

    Scopes are windows over a shuffled variable order, which keeps the
    primal graph path-like and its treewidth small.
    """
    if domain_size is None:
        domain_size = rng.randint(2, 3)
    if arity is None:
        arity = rng.choice([2, 2, 3])
    nv = rng.randint(arity, max_vars)
    rank = rng.randint(1, min(max_rank, nv))
    blocks = _random_blocks(rng, nv, rank, last)
    order = list(range(1, nv + 1))
    rng.shuffle(order)
    scopes = []
    for i in range(nv - arity + 1):
        scopes.append(tuple(order[i:i + arity]))
    rng.shuffle(scopes)
    scopes = scopes[:max(1, rng.randint(1, len(scopes)))]
    covered = {v for s in scopes for v in s}
    for i in range(nv - arity + 1):
        window = tuple(order[i:i + arity])
        if set(window) - covered:
            scopes.append(window)
            covered |= set(window)
    constraints = []
    full = domain_size ** arity
    for scope in scopes:
        ntup = rng.randint(max(1, full // 2), full)
        tuples = set()
        while len(tuples) < ntup:
            tuples.add(tuple(rng.randrange(domain_size) for _ in scope))
        constraints.append(Constraint(scope, frozenset(tuples)))
    return make_qcsp(domain_size, blocks, constraints)


def qcsp_suite(seed, count, **kw):
    rng = random.Random(seed)
    return [random_qcsp(rng, **kw) for _ in range(count)]
