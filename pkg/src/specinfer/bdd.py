"""A small reduced ordered binary decision diagram engine.

Nodes are integers: 0 and 1 are the terminals, every other id maps to a
(level, low, high) triple.  Hash-consing makes semantic equality a root-id
comparison, and the shared ite cache makes repeated implication checks over
one formula family cheap.
"""

from __future__ import annotations


class BDD:
    FALSE = 0
    TRUE = 1

    def __init__(self, num_vars: int = 0):
        self.num_vars = num_vars
        # id -> (level, low, high); two placeholder rows for the terminals
        self._nodes: list[tuple] = [(None, None, None), (None, None, None)]
        self._unique: dict[tuple, int] = {}
        self._ite_cache: dict[tuple, int] = {}
        self._count_cache: dict[int, int] = {}

    # -- construction -------------------------------------------------

    def add_vars(self, n: int) -> range:
        """Reserve ``n`` fresh variable levels; returns their range."""
        first = self.num_vars
        self.num_vars += n
        self._count_cache.clear()
        return range(first, self.num_vars)

    def level(self, u: int) -> int:
        if u < 2:
            return self.num_vars
        return self._nodes[u][0]

    def _mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        found = self._unique.get(key)
        if found is not None:
            return found
        self._nodes.append(key)
        u = len(self._nodes) - 1
        self._unique[key] = u
        return u

    def var(self, level: int) -> int:
        if not (0 <= level < self.num_vars):
            raise ValueError(f"variable level {level} out of range")
        return self._mk(level, self.FALSE, self.TRUE)

    # -- algebra ------------------------------------------------------

    def ite(self, f: int, g: int, h: int) -> int:
        if f == self.TRUE:
            return g
        if f == self.FALSE:
            return h
        if g == h:
            return g
        if g == self.TRUE and h == self.FALSE:
            return f
        key = (f, g, h)
        cached = self._ite_cache.get(key)
        if cached is not None:
            return cached
        top = min(self.level(f), self.level(g), self.level(h))

        def cofactor(u: int, positive: bool) -> int:
            if self.level(u) != top:
                return u
            _, lo, hi = self._nodes[u]
            return hi if positive else lo

        r_hi = self.ite(cofactor(f, True), cofactor(g, True), cofactor(h, True))
        r_lo = self.ite(cofactor(f, False), cofactor(g, False), cofactor(h, False))
        result = self._mk(top, r_lo, r_hi)
        self._ite_cache[key] = result
        return result

    def land(self, f: int, g: int) -> int:
        return self.ite(f, g, self.FALSE)

    def lor(self, f: int, g: int) -> int:
        return self.ite(f, self.TRUE, g)

    def lnot(self, f: int) -> int:
        return self.ite(f, self.FALSE, self.TRUE)

    def implies_everywhere(self, f: int, g: int) -> bool:
        """Validity of f -> g, i.e. the f-models are a subset of the g-models."""
        return self.ite(f, self.lnot(g), self.FALSE) == self.FALSE

    def const(self, value: bool) -> int:
        return self.TRUE if value else self.FALSE

    def cube(self, literals) -> int:
        """Conjunction of (level, phase) literals."""
        result = self.TRUE
        for level, phase in sorted(literals, reverse=True):
            v = self.var(level)
            if not phase:
                v = self.lnot(v)
            result = self.land(v, result)
        return result

    def less_than(self, levels, bound: int) -> int:
        """Predicate x < bound where x reads ``levels`` as big-endian bits."""
        n = len(levels)
        if bound <= 0:
            return self.FALSE
        if bound >= (1 << n):
            return self.TRUE
        result = self.FALSE
        prefix_equal = self.TRUE
        for i, level in enumerate(levels):
            bit = (bound >> (n - 1 - i)) & 1
            v = self.var(level)
            if bit:
                result = self.lor(result, self.land(prefix_equal, self.lnot(v)))
                prefix_equal = self.land(prefix_equal, v)
            else:
                prefix_equal = self.land(prefix_equal, self.lnot(v))
        return result

    def range_cube(self, levels, lo: int, hi: int) -> int:
        """Predicate lo <= x < hi where x reads ``levels`` as big-endian bits."""
        n = len(levels)
        if not (0 <= lo <= hi <= (1 << n)):
            raise ValueError("range out of bounds")
        return self.land(
            self.lnot(self.less_than(levels, lo)), self.less_than(levels, hi)
        )

    # -- model counting ------------------------------------------------

    def count(self, u: int) -> int:
        """Number of satisfying assignments over all declared variables."""
        if u == self.FALSE:
            return 0
        return self._scaled_count(u) << self.level(u)

    def _scaled_count(self, u: int) -> int:
        # models of u over variables below its own level
        if u == self.TRUE:
            return 1
        if u == self.FALSE:
            return 0
        cached = self._count_cache.get(u)
        if cached is not None:
            return cached
        level, lo, hi = self._nodes[u]
        n = (self._scaled_count(lo) << (self.level(lo) - level - 1)) + (
            self._scaled_count(hi) << (self.level(hi) - level - 1)
        )
        self._count_cache[u] = n
        return n

    def __len__(self) -> int:
        return len(self._nodes) - 2
