"""Treewidth compression of prenex QBFs.

Pipeline: decompose the primal graph, make the decomposition almost
c-nice and labeled, then rebuild the instance around the decomposition:
per-node copies of the original variables, universally quantified
pointer bits that select a bag element, value/satisfaction flags, and
three clause families (guess / check / propagate).  The result has one
more quantifier alternation and a decomposition of width O(log k + c),
which we construct explicitly and certify.

CNF inputs ending in an existential block are routed through double
negation; the direct path handles DNF matrices ending in a universal
block.
"""

import math
from dataclasses import dataclass, field

from .decomp import (LabeledTd, check_td, compute_pd, compute_td, label_td,
                     make_almost_c_nice, make_td)
from .formula import CNF, DNF, EXISTS, FORALL, Matrix, Qbf, negate, normalize_prefix
from .graphs import primal_graph

NIL = "nil"


class CompressError(Exception):
    pass


# ------------------------------------------------------------------ atlas

class VariableAtlas:
    """Provenance of every variable of the reduced instance.

    Origins:
      ('copy', x, t)     copy of original x at introduction node t
      ('bit', t, i)      plain pointer bit i of node t (universal)
      ('bitj', t, j, i)  pointer bit i for term position j at node t
      ('val', t)         value of the selected bag element at t
      ('valj', t, j)     value of the element selected for position j
      ('sat', t)         "the term labeled at t is satisfied here"
      ('satle', t)       "some term is satisfied in the subtree of t"
      ('aux', n)         3-CNF splitting auxiliary
    """

    def __init__(self):
        self.origin = {}
        self.index = {}
        self.bag_order = {}
        self.nbits = {}
        self.nbitsj = {}
        self.nint = {}     # original var -> sorted introduction nodes
        self.masters = {}  # original var -> introduction node of the master
        self._next = 1

    def alloc(self, origin):
        nv = self._next
        self._next += 1
        self.origin[nv] = origin
        self.index[origin] = nv
        return nv

    def copy(self, x, t):
        return self.index[("copy", x, t)]

    def copies_of(self, x):
        return [self.index[("copy", x, t)] for t in self.nint.get(x, [])]

    def copy_vars(self):
        return [nv for nv, o in sorted(self.origin.items()) if o[0] == "copy"]

    def bit(self, t, i):
        return self.index[("bit", t, i)]

    def bitj(self, t, j, i):
        return self.index[("bitj", t, j, i)]

    def val(self, t):
        return self.index[("val", t)]

    def valj(self, t, j):
        return self.index[("valj", t, j)]

    def sat(self, t):
        return self.index[("sat", t)]

    def satle(self, t):
        return self.index[("satle", t)]

    def new_aux(self):
        self._naux = getattr(self, "_naux", 0) + 1
        return self.alloc(("aux", self._naux - 1))

    def describe(self, nv):
        o = self.origin[nv]
        return "%d %s" % (nv, " ".join(str(p) for p in o))


def _depths(td):
    ch = td.children()
    depth = {td.root: 0}
    stack = [td.root]
    while stack:
        t = stack.pop()
        for u in ch[t]:
            depth[u] = depth[t] + 1
            stack.append(u)
    return depth


def build_atlas(ltd):
    """Number every reduced variable deterministically and fix per-node
    ordinal tables."""
    td = ltd.td
    atlas = VariableAtlas()
    ch = td.children()
    for t in sorted(td.nodes):
        bag = sorted(td.bags[t])
        atlas.bag_order[t] = bag
        atlas.nbits[t] = max(1, math.ceil(math.log2(len(bag)))) if bag else 1
        atlas.nbitsj[t] = math.ceil(math.log2(len(bag) + 1))
    allvars = sorted({v for b in td.bags.values() for v in b})
    for x in allvars:
        intro = sorted(t for t in td.nodes
                       if x in td.bags[t]
                       and all(x not in td.bags[u] for u in ch[t]))
        assert intro, "variable %r never introduced" % (x,)
        atlas.nint[x] = intro
    depth = _depths(td)
    for x in allvars:
        atlas.masters[x] = min(atlas.nint[x], key=lambda t: (depth[t], t))
    # allocation order: copies, bits, j-bits, values, j-values, sat flags
    for t in sorted(td.nodes):
        for x in atlas.bag_order[t]:
            if t in atlas.nint[x]:
                atlas.alloc(("copy", x, t))
    for t in sorted(td.nodes):
        for i in range(atlas.nbits[t]):
            atlas.alloc(("bit", t, i))
    for t in sorted(td.nodes):
        for j in (1, 2, 3):
            for i in range(atlas.nbitsj[t]):
                atlas.alloc(("bitj", t, j, i))
    for t in sorted(td.nodes):
        atlas.alloc(("val", t))
    for t in sorted(td.nodes):
        for j in (1, 2, 3):
            atlas.alloc(("valj", t, j))
    for t in sorted(td.nodes):
        atlas.alloc(("sat", t))
    for t in sorted(td.nodes):
        atlas.alloc(("satle", t))
    return atlas


def ordinal_literals(atlas, t, e, j=None):
    """[[e]]_t resp. [[e]]_t^j: literals over the node's pointer bits
    encoding the bag ordinal of e (bit 0 is the most significant bit;
    nil is max ordinal + 1 and exists only in the j-indexed pointers)."""
    bag = atlas.bag_order[t]
    if e == NIL:
        if j is None:
            raise CompressError("nil needs a j-indexed pointer")
        o = len(bag)
    else:
        if e not in bag:
            raise CompressError("%r not in bag of node %r" % (e, t))
        o = bag.index(e)
    nb = atlas.nbits[t] if j is None else atlas.nbitsj[t]
    lits = []
    for i in range(nb):
        var = atlas.bit(t, i) if j is None else atlas.bitj(t, j, i)
        one = (o >> (nb - 1 - i)) & 1
        lits.append(var if one else -var)
    return frozenset(lits)


# ------------------------------------------------------------------ prefix

def build_prefix(q, ltd, atlas):
    """Quantifier blocks of the reduced instance.

    Existential variables get one copy per introduction node; universal
    ones keep only the master copy in their block, the other copies
    shift into the following existential block.  The last universal
    block additionally carries the plain pointer bits; the new trailing
    existential block carries everything else.
    """
    if not q.blocks or q.blocks[-1][0] != FORALL:
        raise CompressError("last block must be universal")
    if q.matrix.kind != DNF:
        raise CompressError("matrix must be DNF")
    td = ltd.td
    nodes = sorted(td.nodes)
    blocks = []
    carried = set()
    for i, (quant, vs) in enumerate(q.blocks):
        if quant == EXISTS:
            nv = {atlas.copy(x, t) for x in vs for t in atlas.nint[x]}
            nv |= carried
            carried = set()
        else:
            nv = {atlas.copy(x, atlas.masters[x]) for x in vs}
            carried = {atlas.copy(x, t) for x in vs for t in atlas.nint[x]
                       if t != atlas.masters[x]}
            if i == len(q.blocks) - 1:
                nv |= {atlas.bit(t, k) for t in nodes
                       for k in range(atlas.nbits[t])}
        blocks.append((quant, frozenset(nv)))
    tail = set(carried)
    tail |= {atlas.val(t) for t in nodes}
    tail |= {atlas.valj(t, j) for t in nodes for j in (1, 2, 3)}
    tail |= {atlas.bitj(t, j, k) for t in nodes for j in (1, 2, 3)
             for k in range(atlas.nbitsj[t])}
    tail |= {atlas.sat(t) for t in nodes}
    tail |= {atlas.satle(t) for t in nodes}
    blocks.append((EXISTS, frozenset(tail)))
    return blocks


# ------------------------------------------------------------------ clauses

def _term_lits(term):
    # fixed position order inside a term: ascending variable id
    return sorted(term, key=abs)


def guess_clauses(ltd, atlas):
    """Tie each copy to the node value when the pointer selects it."""
    out = []
    for t in sorted(ltd.td.nodes):
        for x in atlas.bag_order[t]:
            if t not in atlas.nint[x]:
                continue
            xc = atlas.copy(x, t)
            sel = ordinal_literals(atlas, t, x)
            v = atlas.val(t)
            out.append((frozenset({-xc, v} | {-l for l in sel}), t))
            out.append((frozenset({xc, -v} | {-l for l in sel}), t))
            for j in (1, 2, 3):
                selj = ordinal_literals(atlas, t, x, j)
                vj = atlas.valj(t, j)
                out.append((frozenset({-xc, vj} | {-l for l in selj}), t))
                out.append((frozenset({xc, -vj} | {-l for l in selj}), t))
    return out


def check_clauses(ltd, atlas):
    """Certify that some term is satisfied somewhere in the tree."""
    td = ltd.td
    ch = td.children()
    out = []
    for t in sorted(td.nodes):
        cl = {-atlas.satle(t), atlas.sat(t)}
        cl |= {atlas.satle(u) for u in ch[t]}
        out.append((frozenset(cl), t))
    lnodes = ltd.lnode_map()
    matrix = ltd.matrix
    for d, term in enumerate(matrix.clauses):
        t = lnodes[d]
        s = atlas.sat(t)
        for j, lit in enumerate(_term_lits(term), start=1):
            for b in ordinal_literals(atlas, t, abs(lit), j):
                out.append((frozenset({-s, b}), t))
            vj = atlas.valj(t, j)
            out.append((frozenset({-s, vj if lit > 0 else -vj}), t))
    out.append((frozenset({atlas.satle(td.root)}), td.root))
    for t in sorted(td.nodes):
        if t not in ltd.label:
            out.append((frozenset({-atlas.sat(t)}), t))
    return out


def _restrict_edges(td, x):
    holders = {t for t in td.nodes if x in td.bags[t]}
    return [(td.parent[t], t) for t in sorted(holders)
            if td.parent[t] != t and td.parent[t] in holders]


def propagate_clauses(ltd, atlas):
    """Consistency along tree edges: node values agree wherever the
    pointers of both endpoints select the same shared variable; the
    j-indexed pointers and values are kept aligned along the whole
    restriction of the tree to each term atom."""
    td = ltd.td
    out = []
    for p, t in td.edges():
        shared = td.bags[p] & td.bags[t]
        vp, vt = atlas.val(p), atlas.val(t)
        for x in sorted(shared):
            sel = {-l for l in ordinal_literals(atlas, p, x)}
            sel |= {-l for l in ordinal_literals(atlas, t, x)}
            out.append((frozenset({-vp, vt} | sel), p))
            out.append((frozenset({vp, -vt} | sel), p))
    matrix = ltd.matrix
    seen = set()
    for term in matrix.clauses:
        for j, lit in enumerate(_term_lits(term), start=1):
            x = abs(lit)
            for p, t in _restrict_edges(td, x):
                for hi, lo in ((p, t), (t, p)):
                    ante = {-l for l in ordinal_literals(atlas, hi, x, j)}
                    for b in ordinal_literals(atlas, lo, x, j):
                        cl = (frozenset(ante | {b}), p)
                        if cl not in seen:
                            seen.add(cl)
                            out.append(cl)
    for p, t in td.edges():
        for j in (1, 2, 3):
            vp, vt = atlas.valj(p, j), atlas.valj(t, j)
            out.append((frozenset({-vp, vt}), p))
            out.append((frozenset({vp, -vt}), p))
    return out


# ------------------------------------------------------------------ reduce

@dataclass
class CompressionResult:
    reduced: Qbf
    atlas: VariableAtlas
    compressed_td: object = None
    negated: bool = False
    stats: dict = field(default_factory=dict)
    clause_homes: list = field(default_factory=list)  # node per matrix clause


def reduce_r(q, ltd):
    """The core reduction: DNF with a trailing universal block in, CNF
    with one extra existential block out.  Valid for exactly the same
    free-variable assignments (copies stand in for the originals)."""
    q = normalize_prefix(q)
    if not q.blocks:
        raise CompressError("rank 0 input")
    if q.blocks[-1][0] != FORALL:
        raise CompressError("last block must be universal for the direct path")
    if q.matrix.kind != DNF:
        raise CompressError("direct path needs a DNF matrix")
    if any(len(term) > 3 for term in q.matrix.clauses):
        raise CompressError("matrix is not 3-DNF")
    report = check_td(primal_graph(q.matrix), ltd.td)
    if not report.ok:
        raise CompressError("invalid decomposition: %s" % report.violations[0])
    if sorted(ltd.label.values()) != list(range(len(q.matrix.clauses))):
        raise CompressError("labeling is not a bijection onto the terms")
    for t, d in ltd.label.items():
        vs = {abs(l) for l in q.matrix.clauses[d]}
        if not vs <= ltd.td.bags[t]:
            raise CompressError("label node %r does not cover term %d" % (t, d))

    if ltd.matrix is None:
        ltd.matrix = q.matrix
    atlas = build_atlas(ltd)
    blocks = build_prefix(q, ltd, atlas)
    g = guess_clauses(ltd, atlas)
    c = check_clauses(ltd, atlas)
    p = propagate_clauses(ltd, atlas)
    clauses = g + c + p
    matrix = Matrix(CNF, tuple(cl for cl, _ in clauses))
    used = matrix.variables()
    blocks = tuple((quant, frozenset(vs & used)) for quant, vs in blocks)
    reduced = normalize_prefix(Qbf(blocks, matrix))
    assert reduced.rank == q.rank + 1
    stats = {
        "guess_clauses": len(g),
        "check_clauses": len(c),
        "propagate_clauses": len(p),
        "copies": sum(len(v) for v in atlas.nint.values()),
    }
    assert stats["guess_clauses"] == 8 * stats["copies"]
    return CompressionResult(reduced=reduced, atlas=atlas, stats=stats,
                             clause_homes=[t for _, t in clauses])


def expose_copies(result):
    """Demote every copy variable of a reduction result to a free
    variable (used by the copy-consistency harness)."""
    copies = set(result.atlas.copy_vars())
    blocks = tuple((quant, frozenset(vs - copies))
                   for quant, vs in result.reduced.blocks)
    return normalize_prefix(Qbf(blocks, result.reduced.matrix))


# ------------------------------------------------------------------ 3-CNF

def split_clause(lits, atlas):
    """Split a long CNF clause into 3-clauses chained by fresh variables."""
    pieces = []
    aux = []
    rest = list(lits)
    while len(rest) > 3:
        u = atlas.new_aux()
        aux.append(u)
        pieces.append(frozenset(rest[:2] + [u]))
        rest = [-u] + rest[2:]
    pieces.append(frozenset(rest))
    return pieces, aux


def to_3cnf(q, atlas, homes=None):
    """R': clause splitting; auxiliaries join the innermost existential
    block.  Returns (qbf, homes, groups); groups record one entry per
    split clause as (home, ordered pieces, aux vars) for the
    decomposition builder."""
    if q.matrix.kind != CNF:
        raise CompressError("3-CNF conversion expects a CNF matrix")
    if homes is None:
        homes = [None] * len(q.matrix.clauses)
    new_clauses = []
    new_homes = []
    fresh = []
    groups = []
    for cl, home in zip(q.matrix.clauses, homes):
        if len(cl) <= 3:
            new_clauses.append(cl)
            new_homes.append(home)
            continue
        pieces, aux = split_clause(sorted(cl, key=abs), atlas)
        fresh.extend(aux)
        groups.append((home, pieces, aux))
        for piece in pieces:
            new_clauses.append(piece)
            new_homes.append(home)
    blocks = list(q.blocks)
    if fresh:
        assert blocks and blocks[-1][0] == EXISTS
        blocks[-1] = (EXISTS, blocks[-1][1] | frozenset(fresh))
    out = Qbf(tuple(blocks), Matrix(CNF, tuple(new_clauses)))
    return out, new_homes, groups


# ------------------------------------------------------ compressed decomposition

def width_bound(k, c):
    return 12 * math.ceil(math.log2(k + 1)) + 7 * c + 6


def build_compressed_td(ltd, atlas, reduced, groups, pd_mode=False):
    """Explicit decomposition of the reduced instance.

    Per node: own copies, pointer bits, value and sat flags, plus the
    bits/values of the children that co-occur with them in edge clauses.
    3-CNF auxiliaries either hang below their clause's home node as a
    chain of suffix bags (tree mode) or join the home bag (pd mode,
    which keeps the path shape and the 2-bag occurrence bound).
    """
    td = ltd.td
    ch = td.children()
    matrix = ltd.matrix
    atoms_j = {1: set(), 2: set(), 3: set()}
    for term in matrix.clauses:
        for j, lit in enumerate(_term_lits(term), start=1):
            atoms_j[j].add(abs(lit))
    bags = {}
    for t in sorted(td.nodes):
        bag = set()
        for x in atlas.bag_order[t]:
            if t in atlas.nint[x]:
                bag.add(atlas.copy(x, t))
        bag |= {atlas.bit(t, i) for i in range(atlas.nbits[t])}
        bag |= {atlas.bitj(t, j, i) for j in (1, 2, 3)
                for i in range(atlas.nbitsj[t])}
        bag |= {atlas.val(t), atlas.sat(t), atlas.satle(t)}
        bag |= {atlas.valj(t, j) for j in (1, 2, 3)}
        for u in ch[t]:
            shared = td.bags[t] & td.bags[u]
            if shared:
                bag |= {atlas.bit(u, i) for i in range(atlas.nbits[u])}
                bag.add(atlas.val(u))
            for j in (1, 2, 3):
                if shared & atoms_j[j]:
                    bag |= {atlas.bitj(u, j, i)
                            for i in range(atlas.nbitsj[u])}
                bag.add(atlas.valj(u, j))
            bag.add(atlas.satle(u))
        bags[t] = bag
    parent = dict(td.parent)
    root = td.root
    fresh = max(td.nodes) + 1

    # place the 3-CNF auxiliaries
    for home, pieces, aux in groups:
        if pd_mode:
            # aux vars ride in the home bag: keeps the path shape and
            # each variable inside at most 2 bags
            bags[home] |= set(aux)
            continue
        # chain of suffix bags under the home node: bag i covers the
        # variables of pieces i..end, so each piece sits in one bag and
        # every variable's bag set stays contiguous
        suffix = []
        acc = set()
        for piece in reversed(pieces):
            acc |= {abs(l) for l in piece}
            suffix.append(set(acc))
        suffix.reverse()
        prev = home
        for bagset in suffix:
            node = fresh
            fresh += 1
            bags[node] = bagset
            parent[node] = prev
            prev = node

    used = reduced.matrix.variables()
    bags = {t: frozenset(b & used) for t, b in bags.items()}
    out = make_td(parent, root, bags)
    report = check_td(primal_graph(reduced.matrix), out)
    assert report.ok, report.violations[:5]
    return out


# ------------------------------------------------------------------ driver

@dataclass
class CompressOptions:
    strategy: str = "min-fill"
    c: int = None
    pd: bool = False


def default_c(k):
    # floor of 3 keeps the explicit bag construction inside the
    # certified width bound for small k
    return max(3, math.ceil(math.log2(k + 1)))


def compress(q, options=None):
    options = options or CompressOptions()
    q = normalize_prefix(q)
    if not q.blocks:
        raise CompressError("rank 0 input")
    if any(len(cl) > 3 for cl in q.matrix.clauses):
        raise CompressError("matrix arity exceeds 3")
    last = q.blocks[-1][0]
    kind = q.matrix.kind
    if last == EXISTS and kind == CNF:
        inner = _compress_direct(negate(q), options)
        reduced = negate(inner.reduced)
        result = CompressionResult(reduced=reduced, atlas=inner.atlas,
                                   compressed_td=inner.compressed_td,
                                   negated=True, stats=inner.stats,
                                   clause_homes=inner.clause_homes)
        result.stats["negated"] = 1
        return result
    if last == FORALL and kind == DNF:
        return _compress_direct(q, options)
    raise CompressError("unsupported combination: %s-last with %s matrix"
                        % (last, kind))


def _compress_direct(q, options):
    g = primal_graph(q.matrix)
    td = compute_pd(g) if options.pd else compute_td(g, options.strategy)
    k = td.width
    c = options.c if options.c else default_c(k)
    nice = make_almost_c_nice(td, c)
    ltd = label_td(nice, q.matrix)
    result = reduce_r(q, ltd)
    reduced3, homes, groups = to_3cnf(result.reduced, result.atlas,
                                      result.clause_homes)
    ctd = build_compressed_td(ltd, result.atlas, reduced3, groups,
                              pd_mode=options.pd)
    bound = width_bound(k, c)
    if not options.pd:
        assert ctd.width <= bound, (ctd.width, bound)
    result.reduced = reduced3
    result.clause_homes = homes
    result.compressed_td = ctd
    result.stats.update({
        "k": k,
        "c": c,
        "width_out": ctd.width,
        "width_bound": bound,
        "width_bound_ok": int(ctd.width <= bound),
        "rank_in": q.rank,
        "rank_out": result.reduced.rank,
        "vars_in": len(q.matrix.variables()),
        "vars_out": len(result.reduced.matrix.variables()),
        "clauses_in": len(q.matrix.clauses),
        "clauses_out": len(result.reduced.matrix.clauses),
        "nodes": len(ltd.td.nodes),
        "negated": 0,
        "pd": int(options.pd),
    })
    nvars = result.stats["vars_out"]
    nnodes = result.stats["nodes"]
    logk = math.ceil(math.log2(k + 1))
    naux = sum(1 for o in result.atlas.index if o[0] == "aux")
    assert nvars <= (c + 8) * nnodes + 5 * max(1, logk) * nnodes + naux
    return result


def iterate(q, times, options=None):
    """Successive compression hops; each hop adds one alternation."""
    results = []
    cur = q
    for _ in range(times):
        res = compress(cur, options)
        results.append(res)
        cur = res.reduced
    return results
