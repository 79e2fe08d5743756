"""Finite-domain quantified CSPs and their treewidth compression.

Mirrors the QBF pipeline: a QCSP is an alternating quantifier prefix
over variables that range over {0..domain_size-1}, with a conjunction
of table constraints (explicit allowed tuples).  The compression
rebuilds the instance around a labeled tree decomposition of the primal
graph, with per-node copies, pointer bits and value variables; pointer
bits stay effectively Boolean (any nonzero value counts as true), while
copy and value variables carry the full domain.

Text format (see parse_qcsp): header ``qcsp <domainSize> <nvars>
<nconstraints> <arity>``, then QDIMACS-style quantifier lines, then per
constraint one scope line ``s v1 v2 ...`` followed by one allowed tuple
per ``t`` line.  Scope and tuple lines are not 0-terminated because 0
is a legal domain value.
"""

import itertools
import math
from dataclasses import dataclass, field

from ._core import Bdd
from .compressor import CompressError, VariableAtlas, default_c, ordinal_literals
from .decomp import LabeledTd, check_td, compute_td, make_almost_c_nice, make_td
from .formula import EXISTS, FORALL
from .graphs import make_graph
from .oracle import LimitError, OracleError

DEFAULT_LIMIT = 24


class QcspError(Exception):
    pass


# ------------------------------------------------------------------ types

@dataclass(frozen=True)
class Constraint:
    scope: tuple
    allowed: frozenset

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        if len(set(self.scope)) != len(self.scope):
            raise QcspError("repeated variable in scope %s" % (self.scope,))
        for tup in self.allowed:
            if len(tup) != len(self.scope):
                raise QcspError("tuple %s does not fit scope %s"
                                % (tup, self.scope))


@dataclass(frozen=True)
class Qcsp:
    domain_size: int
    blocks: tuple
    constraints: tuple

    def __post_init__(self):
        if self.domain_size < 2:
            raise QcspError("domain size must be at least 2")
        seen = set()
        for quant, vs in self.blocks:
            if quant not in (EXISTS, FORALL):
                raise QcspError("bad quantifier %r" % (quant,))
            if seen & vs:
                raise QcspError("variable quantified twice")
            seen |= vs
        cvars = self.variables()
        for quant, vs in self.blocks:
            if not vs <= cvars:
                raise QcspError("quantified variables %s unused"
                                % sorted(vs - cvars))
        for c in self.constraints:
            for tup in c.allowed:
                if any(v < 0 or v >= self.domain_size for v in tup):
                    raise QcspError("tuple value outside domain: %s" % (tup,))

    @property
    def rank(self):
        return len(self.blocks)

    def variables(self):
        return {v for c in self.constraints for v in c.scope}

    def free_vars(self):
        bound = {v for _, vs in self.blocks for v in vs}
        return self.variables() - bound

    def arity(self):
        sizes = {len(c.scope) for c in self.constraints}
        return sizes.pop() if len(sizes) == 1 else None

    def constant_value(self):
        if any(not c.allowed for c in self.constraints):
            return False
        if all(not c.scope for c in self.constraints):
            return True
        return None


def make_qcsp(domain_size, blocks, constraints):
    blocks = tuple((quant, frozenset(vs)) for quant, vs in blocks if vs)
    return Qcsp(domain_size, blocks, tuple(constraints))


def normalize_qcsp_prefix(q):
    """Drop empty blocks, merge adjacent blocks of the same quantifier."""
    blocks = []
    for quant, vs in q.blocks:
        if not vs:
            continue
        if blocks and blocks[-1][0] == quant:
            blocks[-1] = (quant, blocks[-1][1] | vs)
        else:
            blocks.append((quant, frozenset(vs)))
    return Qcsp(q.domain_size, tuple(blocks), q.constraints)


# ------------------------------------------------------------------ io

def parse_qcsp(text):
    lines = [ln.strip() for ln in text.splitlines()]
    header = None
    blocks = []
    constraints = []
    scope = None
    tuples = []

    def flush():
        if scope is not None:
            constraints.append(Constraint(tuple(scope), frozenset(tuples)))

    for lineno, line in enumerate(lines, start=1):
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        try:
            if parts[0] == "qcsp":
                header = [int(p) for p in parts[1:]]
                continue
            if parts[0] in (EXISTS, FORALL):
                vs = [int(p) for p in parts[1:]]
                if vs and vs[-1] == 0:
                    vs = vs[:-1]
                blocks.append((parts[0], frozenset(vs)))
                continue
            if parts[0] == "s":
                flush()
                scope = [int(p) for p in parts[1:]]
                tuples = []
                continue
            if parts[0] == "t":
                if scope is None:
                    raise QcspError("line %d: tuple before any scope" % lineno)
                tuples.append(tuple(int(p) for p in parts[1:]))
                continue
        except ValueError:
            raise QcspError("line %d: bad integer in %r" % (lineno, line))
        raise QcspError("line %d: unrecognized line %r" % (lineno, line))
    flush()
    if header is None or len(header) != 4:
        raise QcspError("missing or malformed qcsp header")
    d = header[0]
    q = make_qcsp(d, blocks, constraints)
    return q


def serialize_qcsp(q):
    arity = max((len(c.scope) for c in q.constraints), default=0)
    out = ["qcsp %d %d %d %d" % (q.domain_size, len(q.variables()),
                                 len(q.constraints), arity)]
    for quant, vs in q.blocks:
        out.append("%s %s 0" % (quant, " ".join(str(v) for v in sorted(vs))))
    for c in q.constraints:
        out.append("s %s" % " ".join(str(v) for v in c.scope))
        for tup in sorted(c.allowed):
            out.append("t %s" % " ".join(str(v) for v in tup))
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ graph

def qcsp_primal_graph(q):
    edges = set()
    for c in q.constraints:
        for a, b in itertools.combinations(sorted(set(c.scope)), 2):
            edges.add((a, b))
    return make_graph(q.variables(), edges)


# ------------------------------------------------------------------ semantics

def apply_qcsp_assignment(q, assignment):
    """Fix some variables, shrink constraint tables accordingly.
    A falsified constraint is kept as an empty table over an empty scope."""
    new_constraints = []
    for c in q.constraints:
        hit = [i for i, v in enumerate(c.scope) if v in assignment]
        if not hit:
            new_constraints.append(c)
            continue
        keep = [i for i in range(len(c.scope)) if i not in hit]
        allowed = {tuple(tup[i] for i in keep) for tup in c.allowed
                   if all(tup[i] == assignment[c.scope[i]] for i in hit)}
        if not allowed:
            new_constraints.append(Constraint((), frozenset()))
            continue
        if not keep:
            continue  # satisfied outright
        new_constraints.append(
            Constraint(tuple(c.scope[i] for i in keep), frozenset(allowed)))
    if not new_constraints:
        new_constraints.append(Constraint((), frozenset({()})))
    remaining = {v for c in new_constraints for v in c.scope}
    out = Qcsp(q.domain_size, tuple(
        (quant, vs & remaining) for quant, vs in q.blocks),
        tuple(new_constraints))
    return normalize_qcsp_prefix(out)


def _naive_rec(q):
    const = q.constant_value()
    if const is not None:
        return const
    if not q.blocks:
        raise OracleError("unassigned variables remain")
    quant, vs = q.blocks[0]
    vs = sorted(vs)
    for vals in itertools.product(range(q.domain_size), repeat=len(vs)):
        r = _naive_rec(apply_qcsp_assignment(q, dict(zip(vs, vals))))
        if quant == EXISTS and r:
            return True
        if quant == FORALL and not r:
            return False
    return quant == FORALL


def _check_limit(q, limit):
    if limit is None:
        return
    n = len(q.variables())
    if n * math.log2(q.domain_size) > limit:
        raise LimitError("domain^variables = %d^%d exceeds 2^%d"
                         % (q.domain_size, n, limit))


def evaluate_qcsp_naive(q, limit=20):
    """Independent second path: per-block enumeration over the domain."""
    if q.free_vars():
        raise OracleError("instance is open: %s" % sorted(q.free_vars()))
    _check_limit(q, limit)
    return _naive_rec(q)


def _merge_equalities(q):
    """Substitute away hard equality constraints before evaluation.

    A binary constraint whose table is exactly the diagonal forces its
    two variables equal, so the inner one can be replaced by the outer
    one when the inner one is existential (it has no choice anyway).
    Purely an evaluator optimization; the verdict is unchanged."""
    d = q.domain_size
    diagonal = frozenset((a, a) for a in range(d))
    blockof = {}
    quantof = {}
    for i, (quant, vs) in enumerate(q.blocks):
        for v in vs:
            blockof[v] = i
            quantof[v] = quant
    parent = {v: v for v in q.variables()}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for c in q.constraints:
        if len(c.scope) != 2 or c.allowed != diagonal:
            continue
        a, b = find(c.scope[0]), find(c.scope[1])
        if a == b:
            continue
        outer, inner = sorted((a, b), key=lambda v: (blockof[v], v))
        if quantof[inner] != EXISTS:
            continue  # a universal variable is never forced; keep as is
        parent[inner] = outer

    new_constraints = []
    seen = set()
    for c in q.constraints:
        scope = [find(v) for v in c.scope]
        first = {}
        keep = []
        for i, v in enumerate(scope):
            if v not in first:
                first[v] = i
                keep.append(i)
        allowed = set()
        for tup in c.allowed:
            if all(tup[i] == tup[first[scope[i]]] for i in range(len(scope))):
                allowed.add(tuple(tup[i] for i in keep))
        if not allowed:
            new_constraints.append(Constraint((), frozenset()))
            continue
        if not keep or len(allowed) == d ** len(keep):
            continue  # trivially satisfied after merging
        cc = Constraint(tuple(scope[i] for i in keep), frozenset(allowed))
        if cc not in seen:
            seen.add(cc)
            new_constraints.append(cc)
    if not new_constraints:
        new_constraints.append(Constraint((), frozenset({()})))
    remaining = {v for c in new_constraints for v in c.scope}
    out = Qcsp(d, tuple((quant, vs & remaining) for quant, vs in q.blocks),
               tuple(new_constraints))
    return normalize_qcsp_prefix(out)


def _qcsp_levels(q, nb):
    """Base BDD level per variable (each takes nb adjacent levels).

    Pure min-fill position, ignoring quantifier blocks: variables the
    ordering eliminates first sit deepest.  Only the elimination order
    has to respect the prefix; the static order does not, and grouping
    it by block scatters each tree node's local machinery across the
    order, which blows the intermediate BDDs up."""
    from .decomp import min_fill_order
    g = qcsp_primal_graph(q)
    pos = {v: i for i, v in enumerate(min_fill_order(g))}
    order = sorted(q.variables(), key=lambda v: (-pos[v], v))
    return {v: i * nb for i, v in enumerate(order)}


def evaluate_qcsp(q, limit=DEFAULT_LIMIT):
    """Symbolic evaluation: variables are binary-encoded into BDD bits,
    then blocks are eliminated innermost-first by bucket elimination
    (existential blocks merge the factors that mention a variable;
    universal quantification distributes per factor after weakening it
    with the out-of-domain values)."""
    if q.free_vars():
        raise OracleError("instance is open: %s" % sorted(q.free_vars()))
    _check_limit(q, limit)
    q = _merge_equalities(q)
    d = q.domain_size
    nb = max(1, math.ceil(math.log2(d)))
    base = _qcsp_levels(q, nb)
    bdd = Bdd(nb * max(1, len(base)))

    def enc(v, val, f=1):
        # conjoin "v == val" onto f, most significant bit first
        for i in range(nb - 1, -1, -1):
            bit = bdd.var(base[v] + i, (val >> (nb - 1 - i)) & 1)
            f = bdd.apply_and(f, bit)
        return f

    def dom(v):
        if d == 1 << nb:
            return 1
        f = 0
        for val in range(d):
            f = bdd.apply_or(f, enc(v, val))
        return f

    factors = []
    for c in q.constraints:
        f = 0
        for tup in sorted(c.allowed):
            g = 1
            for v, val in zip(c.scope, tup):
                g = enc(v, val, g)
            f = bdd.apply_or(f, g)
        factors.append(f)
    for quant, vs in reversed(q.blocks):
        for v in sorted(vs, key=lambda u: base[u], reverse=True):
            lvls = set(range(base[v], base[v] + nb))
            if quant == EXISTS:
                bucket = [f for f in factors if lvls & bdd.support(f)]
                if not bucket:
                    continue
                factors = [f for f in factors if not (lvls & bdd.support(f))]
                merged = dom(v)
                for f in bucket:
                    merged = bdd.apply_and(merged, f)
                factors.append(bdd.quantify(merged, lvls, exists=True))
            else:
                guard = bdd.negate(dom(v))
                factors = [bdd.quantify(bdd.apply_or(f, guard), lvls,
                                        exists=False)
                           if lvls & bdd.support(f) else f
                           for f in factors]
    out = 1
    for f in sorted(factors):
        out = bdd.apply_and(out, f)
    return out == 1


# ------------------------------------------------------------------ reduction

def _neg_atom(lit):
    return ("eq0", lit) if lit > 0 else ("ne0", -lit)


def _pos_atom(lit):
    return ("ne0", lit) if lit > 0 else ("eq0", -lit)


def _flatten(scope, branches, d):
    """Turn a disjunction of atom conjunctions over `scope` into an
    explicit allowed-tuple table.  Atoms: ("eq0",v), ("ne0",v),
    ("eqc",v,const), ("eqv",v,w)."""
    scope = list(dict.fromkeys(scope))
    allowed = set()
    for atoms in branches:
        parent = {v: v for v in scope}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        choices = {v: set(range(d)) for v in scope}
        for atom in atoms:
            if atom[0] == "eq0":
                choices[atom[1]] &= {0}
            elif atom[0] == "ne0":
                choices[atom[1]].discard(0)
            elif atom[0] == "eqc":
                choices[atom[1]] &= {atom[2]}
            elif atom[0] == "eqv":
                parent[find(atom[1])] = find(atom[2])
            else:
                raise QcspError("unknown atom %r" % (atom,))
        merged = {}
        for v in scope:
            r = find(v)
            merged[r] = merged.get(r, set(range(d))) & choices[v]
        if any(not vals for vals in merged.values()):
            continue
        roots = list(dict.fromkeys(find(v) for v in scope))
        for combo in itertools.product(*[sorted(merged[r]) for r in roots]):
            val = dict(zip(roots, combo))
            allowed.add(tuple(val[find(v)] for v in scope))
    return Constraint(tuple(scope), frozenset(allowed))


def build_qcsp_atlas(ltd, s):
    """Same bookkeeping as the QBF atlas, with j ranging over the
    constraint arity and no satisfaction flags."""
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
    depth = {td.root: 0}
    stack = [td.root]
    while stack:
        t = stack.pop()
        for u in ch[t]:
            depth[u] = depth[t] + 1
            stack.append(u)
    for x in allvars:
        atlas.masters[x] = min(atlas.nint[x], key=lambda t: (depth[t], t))
    for t in sorted(td.nodes):
        for x in atlas.bag_order[t]:
            if t in atlas.nint[x]:
                atlas.alloc(("copy", x, t))
    for t in sorted(td.nodes):
        for i in range(atlas.nbits[t]):
            atlas.alloc(("bit", t, i))
    for t in sorted(td.nodes):
        for j in range(1, s + 1):
            for i in range(atlas.nbitsj[t]):
                atlas.alloc(("bitj", t, j, i))
    for t in sorted(td.nodes):
        atlas.alloc(("val", t))
    for t in sorted(td.nodes):
        for j in range(1, s + 1):
            atlas.alloc(("valj", t, j))
    return atlas


def _qcsp_prefix(q, ltd, atlas, s):
    nodes = sorted(ltd.td.nodes)
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
    tail |= {atlas.valj(t, j) for t in nodes for j in range(1, s + 1)}
    tail |= {atlas.bitj(t, j, k) for t in nodes for j in range(1, s + 1)
             for k in range(atlas.nbitsj[t])}
    blocks.append((EXISTS, frozenset(tail)))
    return blocks


def qcsp_guess(q, ltd, atlas, s):
    d = q.domain_size
    out = []
    for t in sorted(ltd.td.nodes):
        for x in atlas.bag_order[t]:
            if t not in atlas.nint[x]:
                continue
            xc = atlas.copy(x, t)
            bits = [atlas.bit(t, i) for i in range(atlas.nbits[t])]
            sel = ordinal_literals(atlas, t, x)
            branches = [[_neg_atom(l)] for l in sorted(sel, key=abs)]
            branches.append([("eqv", xc, atlas.val(t))])
            out.append(_flatten(bits + [xc, atlas.val(t)], branches, d))
            for j in range(1, s + 1):
                bitsj = [atlas.bitj(t, j, i) for i in range(atlas.nbitsj[t])]
                selj = ordinal_literals(atlas, t, x, j)
                branches = [[_neg_atom(l)] for l in sorted(selj, key=abs)]
                branches.append([("eqv", xc, atlas.valj(t, j))])
                out.append(_flatten(bitsj + [xc, atlas.valj(t, j)],
                                    branches, d))
    return out


def qcsp_check(q, ltd, atlas, s):
    """At each constraint's label node: the position pointers select the
    constraint's variables and the selected values form an allowed tuple."""
    d = q.domain_size
    lnodes = ltd.lnode_map()
    out = []
    for idx, c in enumerate(q.constraints):
        t = lnodes[idx]
        scope = []
        for j in range(1, s + 1):
            scope += [atlas.bitj(t, j, i) for i in range(atlas.nbitsj[t])]
        scope += [atlas.valj(t, j) for j in range(1, s + 1)]
        branches = []
        for tup in sorted(c.allowed):
            atoms = []
            for j in range(1, s + 1):
                for l in sorted(ordinal_literals(atlas, t, c.scope[j - 1], j),
                                key=abs):
                    atoms.append(_pos_atom(l))
                atoms.append(("eqc", atlas.valj(t, j), tup[j - 1]))
            branches.append(atoms)
        out.append(_flatten(scope, branches, d))
    return out


def qcsp_propagate(q, ltd, atlas, s):
    """Value consistency along tree edges, plus the node-value /
    position-value tie at each constraint's label node."""
    d = q.domain_size
    td = ltd.td
    out = []
    for p, t in td.edges():
        shared = td.bags[p] & td.bags[t]
        for x in sorted(shared):
            bits_p = [atlas.bit(p, i) for i in range(atlas.nbits[p])]
            bits_t = [atlas.bit(t, i) for i in range(atlas.nbits[t])]
            branches = [[_neg_atom(l)]
                        for l in sorted(ordinal_literals(atlas, p, x), key=abs)]
            branches += [[_neg_atom(l)]
                         for l in sorted(ordinal_literals(atlas, t, x), key=abs)]
            branches.append([("eqv", atlas.val(p), atlas.val(t))])
            out.append(_flatten(bits_p + bits_t + [atlas.val(p), atlas.val(t)],
                                branches, d))
    lnodes = ltd.lnode_map()
    for idx, c in enumerate(q.constraints):
        t = lnodes[idx]
        for j in range(1, s + 1):
            x = c.scope[j - 1]
            bits = [atlas.bit(t, i) for i in range(atlas.nbits[t])]
            bitsj = [atlas.bitj(t, j, i) for i in range(atlas.nbitsj[t])]
            branches = [[_neg_atom(l)]
                        for l in sorted(ordinal_literals(atlas, t, x), key=abs)]
            branches += [[_neg_atom(l)]
                         for l in sorted(ordinal_literals(atlas, t, x, j),
                                         key=abs)]
            branches.append([("eqv", atlas.val(t), atlas.valj(t, j))])
            out.append(_flatten(bits + bitsj
                                + [atlas.val(t), atlas.valj(t, j)],
                                branches, d))
    # anchor all copies of a variable to each other.  The per-play
    # pointer chains only compare one variable's copies per play of the
    # universal pointers, and a trailing-existential copy may track
    # that play; untied, a label node could present a different table
    # row in every play even though no single row fits.  Each copy is
    # chained to the nearest introduction node above it (falling back
    # to the master), which keeps the added edges local to the tree
    equal = frozenset((a, a) for a in range(d))
    for x in sorted(atlas.nint):
        intro = set(atlas.nint[x])
        if len(intro) < 2:
            continue
        for t in atlas.nint[x]:
            if t == atlas.masters[x]:
                continue
            anc = td.parent[t]
            while anc not in intro and td.parent[anc] != anc:
                anc = td.parent[anc]
            if anc not in intro:
                anc = atlas.masters[x]
            out.append(Constraint((atlas.copy(x, t), atlas.copy(x, anc)),
                                  equal))
    return out


@dataclass
class QcspReduction:
    reduced: Qcsp
    atlas: VariableAtlas
    stats: dict = field(default_factory=dict)


def reduce_s(q, ltd):
    """Compress a trailing-universal QCSP around a labeled decomposition
    of its primal graph; adds one quantifier alternation."""
    q = normalize_qcsp_prefix(q)
    if not q.blocks:
        raise CompressError("rank 0 input")
    if q.blocks[-1][0] != FORALL:
        raise CompressError("last block must be universal")
    s = q.arity()
    if s is None:
        raise CompressError("constraints must share one arity")
    report = check_td(qcsp_primal_graph(q), ltd.td)
    if not report.ok:
        raise CompressError("invalid decomposition: %s" % report.violations[0])
    if sorted(ltd.label.values()) != list(range(len(q.constraints))):
        raise CompressError("labeling is not a bijection onto the constraints")
    ch = ltd.td.children()
    for t, i in ltd.label.items():
        scope = set(q.constraints[i].scope)
        if not scope <= ltd.td.bags[t]:
            raise CompressError("label node %r does not cover constraint %d"
                                % (t, i))
        # each constraint variable must be introduced at the label node,
        # so the position-indexed guesses pin its value there regardless
        # of how the universal pointers play out (a value selected only
        # through the per-play node chain could differ between plays and
        # admit tuples that mix rows of the table)
        for x in scope:
            if any(x in ltd.td.bags[u] for u in ch[t]):
                raise CompressError(
                    "constraint %d variable %r not introduced at its "
                    "label node" % (i, x))
    atlas = build_qcsp_atlas(ltd, s)
    blocks = _qcsp_prefix(q, ltd, atlas, s)
    g = qcsp_guess(q, ltd, atlas, s)
    ck = qcsp_check(q, ltd, atlas, s)
    p = qcsp_propagate(q, ltd, atlas, s)
    constraints = g + ck + p
    used = {v for c in constraints for v in c.scope}
    blocks = [(quant, frozenset(vs & used)) for quant, vs in blocks]
    reduced = normalize_qcsp_prefix(
        make_qcsp(q.domain_size, blocks, constraints))
    assert reduced.rank == q.rank + 1
    stats = {
        "guess_constraints": len(g),
        "check_constraints": len(ck),
        "propagate_constraints": len(p),
        "copies": sum(len(v) for v in atlas.nint.values()),
        "rank_in": q.rank,
        "rank_out": reduced.rank,
        "vars_in": len(q.variables()),
        "vars_out": len(reduced.variables()),
        "constraints_in": len(q.constraints),
        "constraints_out": len(reduced.constraints),
        "domain": q.domain_size,
        "arity": s,
    }
    return QcspReduction(reduced=reduced, atlas=atlas, stats=stats)


def label_qcsp_td(td, constraints):
    """Give every constraint a dedicated label leaf whose bag is exactly
    its scope, spliced in via a clone of a covering node so no node
    exceeds two children.  The leaf introduces all scope variables,
    which reduce_s requires."""
    parent = dict(td.parent)
    bags = dict(td.bags)
    root = td.root
    fresh = max(td.nodes) + 1
    label = {}
    for i, c in enumerate(constraints):
        scope = frozenset(c.scope)
        cands = sorted((len(bags[t]), t) for t in bags
                       if scope <= bags[t] and t not in label)
        if not cands:
            raise CompressError(
                "constraint %d (%s) covered by no bag" % (i, sorted(scope)))
        t = cands[0][1]
        clone = fresh
        leaf = fresh + 1
        fresh += 2
        bags[clone] = bags[t]
        if t == root:
            parent[clone] = clone
            parent[t] = clone
            root = clone
        else:
            parent[clone] = parent[t]
            parent[t] = clone
        bags[leaf] = scope
        parent[leaf] = clone
        label[leaf] = i
    out = make_td(parent, root, bags)
    assert out.width == td.width
    return LabeledTd(out, label, None)


def compress_qcsp(q, strategy="min-fill", c=None):
    """Full pipeline: decompose, normalize the decomposition, label it,
    run the reduction."""
    q = normalize_qcsp_prefix(q)
    if not q.blocks or q.blocks[-1][0] != FORALL:
        raise CompressError("last block must be universal")
    g = qcsp_primal_graph(q)
    td = compute_td(g, strategy)
    k = td.width
    cc = c if c else default_c(k)
    nice = make_almost_c_nice(td, cc)
    ltd = label_qcsp_td(nice, q.constraints)
    result = reduce_s(q, ltd)
    result.stats.update({"k": k, "c": cc, "nodes": len(ltd.td.nodes)})
    return result
