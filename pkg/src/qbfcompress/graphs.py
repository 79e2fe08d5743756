"""Primal and incidence graphs of a CNF/DNF matrix."""

from dataclasses import dataclass
from itertools import combinations


@dataclass(frozen=True)
class Graph:
    vertices: frozenset
    edges: frozenset  # frozenset of frozenset pairs

    def __post_init__(self):
        for e in self.edges:
            if len(e) != 2:
                raise ValueError("bad edge %r" % (set(e),))
            if not e <= self.vertices:
                raise ValueError("edge endpoint outside vertex set: %r" % (set(e),))

    def neighbors(self, v):
        return {next(iter(e - {v})) for e in self.edges if v in e}

    def adjacency(self):
        adj = {v: set() for v in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return adj


def make_graph(vertices, edges):
    return Graph(frozenset(vertices), frozenset(frozenset(e) for e in edges))


def primal_graph(matrix):
    """Vertices are the variables; edge when two co-occur in a clause/term."""
    verts = matrix.variables()
    edges = set()
    for cl in matrix.clauses:
        vs = sorted({abs(l) for l in cl})
        for a, b in combinations(vs, 2):
            edges.add(frozenset((a, b)))
    return Graph(verts, frozenset(edges))


def incidence_graph(matrix):
    """Bipartite variables vs clauses; clause i becomes vertex n+i (1-based i)."""
    verts = set(matrix.variables())
    n = max(verts) if verts else 0
    edges = set()
    for i, cl in enumerate(matrix.clauses, start=1):
        cv = n + i
        verts.add(cv)
        for l in cl:
            edges.add(frozenset((abs(l), cv)))
    return Graph(frozenset(verts), frozenset(edges))


def dimacs_graph(g):
    """DIMACS graph format export (`p edge`), for external TD solvers."""
    idx = {v: i for i, v in enumerate(sorted(g.vertices), start=1)}
    lines = ["p edge %d %d" % (len(g.vertices), len(g.edges))]
    for e in sorted(g.edges, key=lambda e: tuple(sorted(e))):
        a, b = sorted(e)
        lines.append("e %d %d" % (idx[a], idx[b]))
    return "\n".join(lines) + "\n"
