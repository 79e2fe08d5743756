"""Tree/path decompositions: computation, validation, transforms.

A TreeDecomposition is a rooted arborescence: parent maps every node to
its parent (the root maps to itself), bags map nodes to vertex sets.
Decompositions are produced from elimination orderings (min-fill /
min-degree heuristics, exhaustive subset DP for tiny graphs).
"""

import heapq
from dataclasses import dataclass, field

from .graphs import Graph


class DecompError(Exception):
    pass


@dataclass
class TreeDecomposition:
    nodes: frozenset
    parent: dict  # node -> node, root -> root
    root: int
    bags: dict  # node -> frozenset of vertices

    @property
    def width(self):
        if not self.bags:
            return -1
        return max(len(b) for b in self.bags.values()) - 1

    def children(self):
        ch = {t: [] for t in self.nodes}
        for t in self.nodes:
            p = self.parent[t]
            if p != t:
                ch[p].append(t)
        for t in ch:
            ch[t].sort()
        return ch

    def is_path(self):
        return all(len(cs) <= 1 for cs in self.children().values())

    def edges(self):
        return [(self.parent[t], t) for t in sorted(self.nodes)
                if self.parent[t] != t]


def make_td(parent, root, bags):
    return TreeDecomposition(frozenset(bags), dict(parent), root,
                             {t: frozenset(b) for t, b in bags.items()})


@dataclass
class LabeledTd:
    td: TreeDecomposition
    label: dict  # node -> clause index (0-based), partial
    matrix: object = None  # the labeled CNF/DNF

    def lnode(self, clause_idx):
        for t, d in self.label.items():
            if d == clause_idx:
                return t
        raise DecompError("clause %d has no labeled node" % clause_idx)

    def lnode_map(self):
        return {d: t for t, d in self.label.items()}


@dataclass
class TdReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, kind, witness):
        self.violations.append("%s: %s" % (kind, witness))


def check_td(g, td):
    """Validate td against graph g; returns a report listing every violation."""
    report = TdReport()
    # arborescence shape
    if td.root not in td.nodes:
        report.add("shape", "root %r not a node" % (td.root,))
        return report
    if td.parent.get(td.root) != td.root:
        report.add("shape", "root %r does not self-parent" % (td.root,))
    if set(td.parent) != set(td.nodes) or set(td.bags) != set(td.nodes):
        report.add("shape", "parent/bag domain differs from node set")
        return report
    for t in td.nodes:
        if td.parent[t] not in td.nodes:
            report.add("shape", "parent of %r is not a node" % (t,))
            return report
    # cycle detection in one pass: a node reaching a known-rooted node
    # is rooted too, so every node is visited a constant number of times
    rooted = {td.root}
    for t in td.nodes:
        path = []
        cur = t
        while cur not in rooted:
            if cur in path:
                report.add("shape", "cycle through node %r" % (cur,))
                return report
            path.append(cur)
            cur = td.parent[cur]
        rooted.update(path)
    # index the nodes holding each vertex; all remaining checks read it
    holders = {}
    for t, b in td.bags.items():
        for v in b:
            holders.setdefault(v, set()).add(t)
    for v in sorted(g.vertices):
        if v not in holders:
            report.add("vertex-coverage", "vertex %r in no bag" % (v,))
    for e in sorted(g.edges, key=lambda e: tuple(sorted(e))):
        a, b = e
        if not (holders.get(a, set()) & holders.get(b, set())):
            report.add("edge-coverage", "edge %r in no bag" % (sorted(e),))
    # connectedness: the nodes holding v must form one subtree, i.e. have
    # exactly one topmost element (every other one's parent also holds v)
    for v in sorted(holders):
        tops = [t for t in holders[v]
                if td.parent[t] == t or td.parent[t] not in holders[v]]
        if len(tops) != 1:
            report.add("connectedness",
                       "vertex %r induces %d components" % (v, len(tops)))
    return report


# ---------------------------------------------------------------- orderings

def _elim_order(g, score):
    """Greedy elimination ordering; score(v, adj) picks the next vertex.

    A heap with stale-entry skipping plus recomputation limited to the
    vertices an elimination can actually affect keeps this near-linear
    on sparse graphs while picking exactly the same vertex at every
    step as a full rescan would."""
    adj = {v: set(ns) for v, ns in g.adjacency().items()}
    current = {v: score(v, adj) for v in adj}
    heap = [(s, v) for v, s in current.items()]
    heapq.heapify(heap)
    order = []
    while adj:
        s, v = heapq.heappop(heap)
        if v not in adj or current[v] != s:
            continue
        ns = adj.pop(v)
        del current[v]
        for a in ns:
            adj[a].discard(v)
        for a in ns:
            for b in ns:
                if a < b:
                    adj[a].add(b)
                    adj[b].add(a)
        # only the neighborhood of the eliminated vertex and its
        # neighbors can change score
        affected = set(ns)
        for a in ns:
            affected |= adj[a]
        for a in affected & set(adj):
            s2 = score(a, adj)
            if s2 != current[a]:
                current[a] = s2
                heapq.heappush(heap, (s2, a))
        order.append(v)
    return order


def _fill_count(v, adj):
    ns = adj[v]
    missing = 0
    for a in ns:
        missing += len(ns - adj[a] - {a})
    return missing // 2


def min_fill_order(g):
    return _elim_order(g, _fill_count)


def min_degree_order(g):
    return _elim_order(g, lambda v, adj: len(adj[v]))


def td_from_elim_order(g, order):
    """Standard clique-completion construction along an elimination order."""
    adj = {v: set(ns) for v, ns in g.adjacency().items()}
    pos = {v: i for i, v in enumerate(order)}
    bags = {}
    parent = {}
    for i, v in enumerate(order):
        ns = adj.pop(v)
        bags[i] = frozenset(ns | {v})
        for a in ns:
            adj[a].discard(v)
        for a in ns:
            for b in ns:
                if a < b:
                    adj[a].add(b)
                    adj[b].add(a)
        if ns:
            parent[i] = min(pos[a] for a in ns)
        else:
            parent[i] = i + 1  # isolated at elimination time; hang anywhere
    n = len(order)
    if n == 0:
        raise DecompError("empty graph has no decomposition")
    parent[n - 1] = n - 1
    td = make_td(parent, n - 1, bags)
    report = check_td(g, td)
    assert report.ok, report.violations
    return td


def _exact_order(g):
    """Minimum-width elimination order by DP over vertex subsets."""
    verts = sorted(g.vertices)
    n = len(verts)
    idx = {v: i for i, v in enumerate(verts)}
    adjbits = [0] * n
    for e in g.edges:
        a, b = tuple(e)
        adjbits[idx[a]] |= 1 << idx[b]
        adjbits[idx[b]] |= 1 << idx[a]

    def q(eliminated, v):
        # neighbors of v reachable through already-eliminated vertices
        reach = adjbits[v]
        frontier = reach & eliminated
        seen = frontier
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= adjbits[low.bit_length() - 1]
                f ^= low
            frontier = nxt & eliminated & ~seen
            seen |= frontier
            reach |= nxt
        return bin(reach & ~eliminated & ~(1 << v)).count("1")

    full = (1 << n) - 1
    best = {0: -1}
    choice = {}
    # subsets in increasing popcount via increasing numeric order works here
    for s in range(1, full + 1):
        bval = None
        bvert = None
        rest = s
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            prev = s ^ low
            cand = max(best[prev], q(prev, v))
            if bval is None or cand < bval:
                bval, bvert = cand, v
        best[s] = bval
        choice[s] = bvert
    order = [None] * n
    s = full
    for i in range(n - 1, -1, -1):
        v = choice[s]
        order[i] = verts[v]
        s ^= 1 << v
    return order


def compute_td(g, strategy="min-fill"):
    if not g.vertices:
        raise DecompError("empty graph has no decomposition")
    if strategy == "min-fill":
        order = min_fill_order(g)
    elif strategy == "min-degree":
        order = min_degree_order(g)
    elif strategy == "exact-tiny":
        if len(g.vertices) > 12:
            raise DecompError("exact-tiny limited to 12 vertices, got %d"
                              % len(g.vertices))
        order = _exact_order(g)
    else:
        raise DecompError("unknown strategy %r" % (strategy,))
    return td_from_elim_order(g, order)


def compute_pd(g):
    """Path decomposition from a vertex ordering; tries a few orderings."""
    if not g.vertices:
        raise DecompError("empty graph has no decomposition")
    adj = g.adjacency()
    candidates = [sorted(g.vertices), min_fill_order(g), min_degree_order(g)]
    for start in sorted(g.vertices):
        # BFS order
        seen = [start]
        inq = {start}
        i = 0
        while i < len(seen):
            for w in sorted(adj[seen[i]]):
                if w not in inq:
                    inq.add(w)
                    seen.append(w)
            i += 1
        for v in sorted(g.vertices):
            if v not in inq:
                inq.add(v)
                seen.append(v)
        candidates.append(seen)
    best = None
    for order in candidates:
        pos = {v: i for i, v in enumerate(order)}
        last = {v: max([pos[w] for w in adj[v]], default=pos[v]) for v in order}
        bags = {}
        for i, v in enumerate(order):
            bags[i] = frozenset(u for u in order
                                if pos[u] <= i <= max(last[u], pos[u]))
        width = max(len(b) for b in bags.values()) - 1
        if best is None or width < best[0]:
            best = (width, bags)
    _, bags = best
    n = len(bags)
    parent = {i: min(i + 1, n - 1) for i in range(n)}
    td = make_td(parent, n - 1, bags)
    report = check_td(g, td)
    assert report.ok, report.violations
    assert td.is_path()
    return td


# ---------------------------------------------------------------- metrics

def m_local_occurrences(td):
    counts = {}
    for b in td.bags.values():
        for v in b:
            counts[v] = counts.get(v, 0) + 1
    return counts


def is_m_local(td, m):
    return all(c <= m for c in m_local_occurrences(td).values())


# ---------------------------------------------------------------- transforms

def make_almost_c_nice(td, c):
    """At most 2 children per node and at most c introduced vertices per node.

    Binarizes fat nodes with duplicate-bag intermediates, then splits
    introductions into chains of growing sub-bags.  Width never changes.
    """
    if c < 1:
        raise DecompError("c must be >= 1")
    parent = dict(td.parent)
    bags = dict(td.bags)
    root = td.root
    fresh = max(td.nodes) + 1

    # binarize
    work = sorted(td.nodes)
    while work:
        t = work.pop()
        kids = sorted(u for u in parent if parent[u] == t and u != t)
        if len(kids) > 2:
            mid = fresh
            fresh += 1
            bags[mid] = bags[t]
            parent[mid] = t
            for u in kids[1:]:
                parent[u] = mid
            work.append(mid)

    # split introductions
    for t in sorted(bags):
        kids = [u for u in parent if parent[u] == t and u != t]
        union = set()
        for u in kids:
            union |= bags[u]
        intro = sorted(bags[t] - union)
        if len(intro) <= c:
            continue
        keep = bags[t] & frozenset(union)
        # chain below t; the lowest chain node inherits t's children
        below = kids
        taken = 0
        chain_top = None
        while len(intro) - taken > c:
            taken += c
            node = fresh
            fresh += 1
            bags[node] = frozenset(keep | set(intro[:taken]))
            for u in below:
                parent[u] = node
            below = [node]
            chain_top = node
        parent[chain_top] = t

    out = make_td(parent, root, bags)
    assert out.width == td.width
    return out


def label_td(td, matrix):
    """Assign every clause/term its own covering node, cloning bags as needed."""
    parent = dict(td.parent)
    bags = dict(td.bags)
    root = td.root
    fresh = max(td.nodes) + 1
    label = {}
    for i, cl in enumerate(matrix.clauses):
        vs = frozenset(abs(l) for l in cl)
        cands = sorted(t for t in bags if vs <= bags[t])
        if not cands:
            raise DecompError(
                "clause %d (%s) covered by no bag" % (i, sorted(vs)))
        free = [t for t in cands if t not in label]
        if free:
            label[free[0]] = i
            continue
        # clone the first candidate, splice between it and its parent
        t = cands[0]
        clone = fresh
        fresh += 1
        bags[clone] = bags[t]
        if t == root:
            parent[clone] = clone
            parent[t] = clone
            root = clone
        else:
            parent[clone] = parent[t]
            parent[t] = clone
        label[clone] = i
    out = make_td(parent, root, bags)
    assert out.width == td.width
    return LabeledTd(out, label, matrix)


def restrict(td, x):
    """T[x]: the sub-arborescence induced by the bags containing x."""
    holders = {t for t in td.nodes if x in td.bags[t]}
    if not holders:
        raise DecompError("vertex %r occurs in no bag" % (x,))
    tops = [t for t in holders
            if td.parent[t] == t or td.parent[t] not in holders]
    assert len(tops) == 1, "connectedness violated for %r" % (x,)
    root = tops[0]
    parent = {t: (td.parent[t] if t != root else t) for t in holders}
    return make_td(parent, root, {t: td.bags[t] for t in holders})


# ---------------------------------------------------------------- PACE io

def write_td(td, labels=None):
    """PACE-2017 .td text; `l <bag> <clause>` extension lines carry labels."""
    ids = {t: i for i, t in enumerate(sorted(td.nodes), start=1)}
    verts = sorted({v for b in td.bags.values() for v in b})
    nverts = max(verts) if verts else 0
    lines = ["s td %d %d %d" % (len(td.nodes), td.width + 1, nverts)]
    lines.append("c root %d" % ids[td.root])
    for t in sorted(td.nodes):
        lines.append("b %d %s" % (ids[t], " ".join(str(v) for v in sorted(td.bags[t]))))
    for p, t in td.edges():
        lines.append("%d %d" % (ids[p], ids[t]))
    if labels:
        for t in sorted(labels):
            lines.append("l %d %d" % (ids[t], labels[t] + 1))
    return "\n".join(lines) + "\n"


def read_td(text):
    """Read PACE .td; root comes from our `c root` line, else node 1."""
    bags = {}
    adj = {}
    root = 1
    header = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c root "):
            root = int(line.split()[2])
            continue
        if line.startswith("c") or line.startswith("l "):
            continue
        if line.startswith("s td"):
            header = line.split()
            continue
        if line.startswith("b "):
            parts = line.split()
            bags[int(parts[1])] = frozenset(int(v) for v in parts[2:])
            continue
        a, b = (int(p) for p in line.split())
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    if header is None:
        raise DecompError("missing s td header")
    for t in bags:
        adj.setdefault(t, set())
    # orient edges away from the root
    parent = {root: root}
    stack = [root]
    while stack:
        t = stack.pop()
        for u in adj[t]:
            if u not in parent:
                parent[u] = t
                stack.append(u)
    if set(parent) != set(bags):
        raise DecompError("decomposition tree is not connected")
    return make_td(parent, root, bags)
