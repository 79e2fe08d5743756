"""Reduced ordered BDD engine, pure-Python backend.

Node 0 is the false terminal, node 1 the true terminal.  Variables are
levels 0..nvars-1; smaller level = closer to the root.  Kept dependency-
free and mirrored by the compiled backend in bdd_cy.pyx.
"""


class Bdd:
    def __init__(self, nvars):
        self.nvars = nvars
        self.level = [nvars, nvars]
        self.lo = [0, 1]
        self.hi = [0, 1]
        self.unique = {}
        self.cache = {}

    def mk(self, level, lo, hi):
        if lo == hi:
            return lo
        key = (level, lo, hi)
        idx = self.unique.get(key)
        if idx is None:
            idx = len(self.level)
            self.level.append(level)
            self.lo.append(lo)
            self.hi.append(hi)
            self.unique[key] = idx
        return idx

    def var(self, level, positive=True):
        if positive:
            return self.mk(level, 0, 1)
        return self.mk(level, 1, 0)

    def apply_and(self, f, g):
        if f == 0 or g == 0:
            return 0
        if f == 1:
            return g
        if g == 1 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = ("&", f, g)
        r = self.cache.get(key)
        if r is not None:
            return r
        lf, lg = self.level[f], self.level[g]
        top = lf if lf < lg else lg
        f0, f1 = (self.lo[f], self.hi[f]) if lf == top else (f, f)
        g0, g1 = (self.lo[g], self.hi[g]) if lg == top else (g, g)
        r = self.mk(top, self.apply_and(f0, g0), self.apply_and(f1, g1))
        self.cache[key] = r
        return r

    def apply_or(self, f, g):
        if f == 1 or g == 1:
            return 1
        if f == 0:
            return g
        if g == 0 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = ("|", f, g)
        r = self.cache.get(key)
        if r is not None:
            return r
        lf, lg = self.level[f], self.level[g]
        top = lf if lf < lg else lg
        f0, f1 = (self.lo[f], self.hi[f]) if lf == top else (f, f)
        g0, g1 = (self.lo[g], self.hi[g]) if lg == top else (g, g)
        r = self.mk(top, self.apply_or(f0, g0), self.apply_or(f1, g1))
        self.cache[key] = r
        return r

    def negate(self, f):
        if f < 2:
            return 1 - f
        key = ("~", f)
        r = self.cache.get(key)
        if r is not None:
            return r
        r = self.mk(self.level[f], self.negate(self.lo[f]), self.negate(self.hi[f]))
        self.cache[key] = r
        return r

    def quantify(self, f, levels, exists=True):
        """Quantify away every level in `levels` (a set)."""
        if not levels:
            return f
        key = ("E" if exists else "A", f, frozenset(levels))
        r = self.cache.get(key)
        if r is not None:
            return r
        if f < 2:
            r = f
        else:
            lv = self.level[f]
            lo = self.quantify(self.lo[f], levels, exists)
            hi = self.quantify(self.hi[f], levels, exists)
            if lv in levels:
                r = self.apply_or(lo, hi) if exists else self.apply_and(lo, hi)
            else:
                r = self.mk(lv, lo, hi)
        self.cache[key] = r
        return r

    def restrict(self, f, level, value):
        if f < 2 or self.level[f] > level:
            return f
        key = ("r", f, level, value)
        r = self.cache.get(key)
        if r is not None:
            return r
        if self.level[f] == level:
            r = self.hi[f] if value else self.lo[f]
        else:
            r = self.mk(self.level[f],
                        self.restrict(self.lo[f], level, value),
                        self.restrict(self.hi[f], level, value))
        self.cache[key] = r
        return r

    def support(self, f):
        out = set()
        seen = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n < 2 or n in seen:
                continue
            seen.add(n)
            out.add(self.level[n])
            stack.append(self.lo[n])
            stack.append(self.hi[n])
        return out

    def evaluate(self, f, values):
        """values: map level -> bool, total on support(f)."""
        while f >= 2:
            f = self.hi[f] if values[self.level[f]] else self.lo[f]
        return f == 1

    def satcount(self, f, levels):
        """Model count over the given sorted level list (support must be
        a subset)."""
        levels = sorted(levels)
        pos = {lv: i for i, lv in enumerate(levels)}
        n = len(levels)
        memo = {}

        # cnt2(node) -> (models over levels strictly below position i, i)
        def cnt2(node):
            if node == 0:
                return 0, n
            if node == 1:
                return 1, n
            if node in memo:
                return memo[node]
            i = pos[self.level[node]]
            clo, jlo = cnt2(self.lo[node])
            chi, jhi = cnt2(self.hi[node])
            total = clo * (1 << (jlo - i - 1)) + chi * (1 << (jhi - i - 1))
            memo[node] = (total, i)
            return total, i

        total, i = cnt2(f)
        return total * (1 << i)
