# cython: language_level=3, boundscheck=False, wraparound=False
"""Reduced ordered BDD engine, compiled backend.

Mirror of bdd_py.Bdd; same node layout and API.  The hot paths
(apply_and/apply_or/mk) are typed."""


cdef class Bdd:
    cdef public int nvars
    cdef public list level
    cdef public list lo
    cdef public list hi
    cdef public dict unique
    cdef public dict cache

    def __init__(self, int nvars):
        self.nvars = nvars
        self.level = [nvars, nvars]
        self.lo = [0, 1]
        self.hi = [0, 1]
        self.unique = {}
        self.cache = {}

    cpdef int mk(self, int level, int lo, int hi):
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

    cpdef int var(self, int level, bint positive=True):
        if positive:
            return self.mk(level, 0, 1)
        return self.mk(level, 1, 0)

    cpdef int apply_and(self, int f, int g):
        cdef int lf, lg, top, f0, f1, g0, g1, r
        if f == 0 or g == 0:
            return 0
        if f == 1:
            return g
        if g == 1 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = ("&", f, g)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        lf = self.level[f]
        lg = self.level[g]
        top = lf if lf < lg else lg
        if lf == top:
            f0 = self.lo[f]
            f1 = self.hi[f]
        else:
            f0 = f1 = f
        if lg == top:
            g0 = self.lo[g]
            g1 = self.hi[g]
        else:
            g0 = g1 = g
        r = self.mk(top, self.apply_and(f0, g0), self.apply_and(f1, g1))
        self.cache[key] = r
        return r

    cpdef int apply_or(self, int f, int g):
        cdef int lf, lg, top, f0, f1, g0, g1, r
        if f == 1 or g == 1:
            return 1
        if f == 0:
            return g
        if g == 0 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = ("|", f, g)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        lf = self.level[f]
        lg = self.level[g]
        top = lf if lf < lg else lg
        if lf == top:
            f0 = self.lo[f]
            f1 = self.hi[f]
        else:
            f0 = f1 = f
        if lg == top:
            g0 = self.lo[g]
            g1 = self.hi[g]
        else:
            g0 = g1 = g
        r = self.mk(top, self.apply_or(f0, g0), self.apply_or(f1, g1))
        self.cache[key] = r
        return r

    cpdef int negate(self, int f):
        cdef int r
        if f < 2:
            return 1 - f
        key = ("~", f)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        r = self.mk(self.level[f], self.negate(self.lo[f]), self.negate(self.hi[f]))
        self.cache[key] = r
        return r

    def quantify(self, int f, levels, bint exists=True):
        cdef int lv, lo, hi, r
        if not levels:
            return f
        key = ("E" if exists else "A", f, frozenset(levels))
        cached = self.cache.get(key)
        if cached is not None:
            return cached
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

    def restrict(self, int f, int level, bint value):
        cdef int r
        if f < 2 or self.level[f] > level:
            return f
        key = ("r", f, level, value)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        if self.level[f] == level:
            r = self.hi[f] if value else self.lo[f]
        else:
            r = self.mk(self.level[f],
                        self.restrict(self.lo[f], level, value),
                        self.restrict(self.hi[f], level, value))
        self.cache[key] = r
        return r

    def support(self, int f):
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

    def evaluate(self, int f, values):
        while f >= 2:
            f = self.hi[f] if values[self.level[f]] else self.lo[f]
        return f == 1

    def satcount(self, int f, levels):
        levels = sorted(levels)
        pos = {lv: i for i, lv in enumerate(levels)}
        n = len(levels)
        memo = {}

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
