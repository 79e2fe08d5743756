"""Prenex QBF data model with QDIMACS I/O.

Variables are positive ints, literals are signed ints (QDIMACS style).
A Matrix is either a CNF (clauses) or a DNF (terms); either way it is an
ordered tuple of literal sets.  Quantifier blocks are ('e'|'a', varset)
pairs; anything in the matrix that is not quantified is a free variable.
"""

from dataclasses import dataclass

CNF = "cnf"
DNF = "dnf"
EXISTS = "e"
FORALL = "a"


class QbfError(Exception):
    pass


class ParseError(QbfError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = "line %d: %s" % (lineno, msg)
        super().__init__(msg)


class TautologyError(ParseError):
    """Clause/term containing both x and -x; rejected, never simplified."""


@dataclass(frozen=True)
class Matrix:
    kind: str  # CNF or DNF
    clauses: tuple  # tuple of frozenset of signed ints

    def __post_init__(self):
        if self.kind not in (CNF, DNF):
            raise QbfError("bad matrix kind %r" % (self.kind,))
        for cl in self.clauses:
            for lit in cl:
                if -lit in cl:
                    raise TautologyError(
                        "clause contains both %d and %d" % (lit, -lit))

    def variables(self):
        return frozenset(abs(l) for cl in self.clauses for l in cl)

    def constant_value(self):
        """True/False if the matrix is in a decided state, else None.

        Empty CNF is true, a CNF with an empty clause is false; dually
        empty DNF is false, a DNF with an empty term is true.
        """
        if self.kind == CNF:
            if not self.clauses:
                return True
            if any(not cl for cl in self.clauses):
                return False
        else:
            if not self.clauses:
                return False
            if any(not cl for cl in self.clauses):
                return True
        return None


def make_matrix(kind, clauses):
    return Matrix(kind, tuple(frozenset(cl) for cl in clauses))


@dataclass(frozen=True)
class Qbf:
    blocks: tuple  # tuple of (quantifier, frozenset of vars)
    matrix: Matrix

    def __post_init__(self):
        seen = set()
        mvars = self.matrix.variables()
        for quant, vs in self.blocks:
            if quant not in (EXISTS, FORALL):
                raise QbfError("bad quantifier %r" % (quant,))
            if seen & vs:
                raise QbfError("variable quantified twice: %s" % sorted(seen & vs))
            if not vs <= mvars:
                raise QbfError(
                    "quantified variables not in matrix: %s" % sorted(vs - mvars))
            seen |= vs

    @property
    def rank(self):
        return len(self.blocks)

    def free_vars(self):
        bound = set()
        for _, vs in self.blocks:
            bound |= vs
        return self.matrix.variables() - bound

    def bound_vars(self):
        out = set()
        for _, vs in self.blocks:
            out |= vs
        return out

    def is_closed(self):
        return not self.free_vars()


def make_qbf(blocks, matrix):
    return Qbf(tuple((q, frozenset(vs)) for q, vs in blocks), matrix)


def parse_qbf(text):
    """Parse QDIMACS (header `p cnf n m`) or the DNF variant (`p dnf n m`)."""
    if isinstance(text, bytes):
        text = text.decode("ascii")
    kind = None
    nvars = 0
    blocks = []
    clauses = []
    seen_clause = False
    quantified = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if kind is not None:
                raise ParseError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] not in (CNF, DNF):
                raise ParseError("malformed header %r" % line, lineno)
            try:
                nvars = int(parts[2])
                int(parts[3])
            except ValueError:
                raise ParseError("malformed header %r" % line, lineno)
            kind = parts[1]
            continue
        if kind is None:
            raise ParseError("line before header", lineno)
        if line[0] in "ea" and not line.split()[0].lstrip("-").isdigit():
            if seen_clause:
                raise ParseError("quantifier line after first clause", lineno)
            parts = line.split()
            if parts[-1] != "0":
                raise ParseError("quantifier line not 0-terminated", lineno)
            try:
                vs = [int(p) for p in parts[1:-1]]
            except ValueError:
                raise ParseError("bad variable in quantifier line", lineno)
            for v in vs:
                if not 1 <= v <= nvars:
                    raise ParseError("variable %d out of range" % v, lineno)
                if v in quantified:
                    raise ParseError("variable %d quantified twice" % v, lineno)
                quantified.add(v)
            blocks.append((EXISTS if parts[0] == "e" else FORALL, frozenset(vs)))
            continue
        parts = line.split()
        if parts[-1] != "0":
            raise ParseError("clause not 0-terminated", lineno)
        try:
            lits = [int(p) for p in parts[:-1]]
        except ValueError:
            raise ParseError("bad literal", lineno)
        if not lits:
            raise ParseError("empty clause line", lineno)
        for l in lits:
            if l == 0 or abs(l) > nvars:
                raise ParseError("literal %d out of range" % l, lineno)
        cl = frozenset(lits)
        for l in cl:
            if -l in cl:
                raise TautologyError(
                    "tautological clause/term", lineno)
        seen_clause = True
        clauses.append(cl)
    if kind is None:
        raise ParseError("missing header")
    matrix = Matrix(kind, tuple(clauses))
    mvars = matrix.variables()
    missing = quantified - mvars
    if missing:
        raise ParseError(
            "quantified variables occur in no clause: %s" % sorted(missing))
    return Qbf(tuple(blocks), matrix)


def serialize_qbf(q):
    """Serialize; variable ids are re-densified to 1..n."""
    mvars = sorted(q.matrix.variables())
    ren = {v: i for i, v in enumerate(mvars, start=1)}
    lines = ["p %s %d %d" % (q.matrix.kind, len(mvars), len(q.matrix.clauses))]
    for quant, vs in q.blocks:
        if not vs:
            continue
        lines.append("%s %s 0" % (quant, " ".join(str(ren[v]) for v in sorted(vs))))
    for cl in q.matrix.clauses:
        lits = sorted((ren[abs(l)] * (1 if l > 0 else -1) for l in cl),
                      key=abs)
        lines.append("%s 0" % " ".join(str(l) for l in lits))
    return "\n".join(lines) + "\n"


def normalize_prefix(q):
    """Drop empty blocks and merge adjacent blocks with equal quantifier."""
    blocks = []
    for quant, vs in q.blocks:
        if not vs:
            continue
        if blocks and blocks[-1][0] == quant:
            blocks[-1] = (quant, blocks[-1][1] | vs)
        else:
            blocks.append((quant, vs))
    return Qbf(tuple(blocks), q.matrix)


def apply_assignment(q, assignment):
    """Fix some variables and simplify.

    CNF: drop satisfied clauses, strip falsified literals; DNF dually.
    Assigned variables (and variables that no longer occur) are removed
    from the quantifier blocks; emptied blocks are dropped.
    """
    mvars = q.matrix.variables()
    extra = set(assignment) - mvars
    if extra:
        raise QbfError("assigned variables not in matrix: %s" % sorted(extra))
    satisfies = q.matrix.kind == CNF  # a true literal decides a CNF clause
    new_clauses = []
    for cl in q.matrix.clauses:
        kept = []
        decided = False
        for lit in cl:
            v = abs(lit)
            if v in assignment:
                val = bool(assignment[v]) == (lit > 0)
                if val == satisfies:
                    decided = True
                    break
                # falsified literal in CNF / satisfied literal in DNF: strip
            else:
                kept.append(lit)
        if not decided:
            new_clauses.append(frozenset(kept))
    matrix = Matrix(q.matrix.kind, tuple(new_clauses))
    remaining = matrix.variables()
    blocks = []
    for quant, vs in q.blocks:
        vs = vs & remaining
        if vs:
            blocks.append((quant, vs))
    return Qbf(tuple(blocks), matrix)


def negate(q):
    """De Morgan negation: flip quantifiers, swap CNF/DNF, negate literals."""
    blocks = tuple((FORALL if quant == EXISTS else EXISTS, vs)
                   for quant, vs in q.blocks)
    matrix = Matrix(DNF if q.matrix.kind == CNF else CNF,
                    tuple(frozenset(-l for l in cl) for cl in q.matrix.clauses))
    return Qbf(blocks, matrix)
