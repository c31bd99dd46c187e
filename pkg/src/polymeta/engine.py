"""Backtracking search with generalized arc consistency over table constraints.

Domains are int bitmasks (bit ``a`` set iff value ``a`` is still allowed).
This is the exact search used for homomorphisms, polymorphism search and
the semilattice backtracker; local-consistency algorithms live in
:mod:`polymeta.minimality`.
"""

from collections import deque

from .errors import BudgetExhausted

DEFAULT_BUDGET = 10**8


def bits(mask):
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def normalize(scope, tuples):
    """Collapse repeated variables in ``scope``.

    Returns ``(distinct_scope, tuples)`` where the scope lists variables in
    first-occurrence order and only tuples agreeing on repeated positions are
    kept (projected to the distinct positions).
    """
    first = {}
    for i, v in enumerate(scope):
        first.setdefault(v, i)
    if len(first) == len(scope):
        return tuple(scope), tuples
    keep = sorted(first.values())
    checks = [(i, first[v]) for i, v in enumerate(scope) if first[v] != i]
    out = set()
    for t in tuples:
        if all(t[i] == t[j] for i, j in checks):
            out.add(tuple(t[i] for i in keep))
    return tuple(scope[i] for i in keep), out


class Problem:
    """A finite-domain CSP prepared for propagation.

    ``constraints`` is an iterable of ``(scope, tuples)``; scopes may repeat
    variables. Unary constraints are folded into the domains and constraints
    on the same variable set are intersected.
    """

    def __init__(self, domains, constraints):
        self.domains = list(domains)
        grouped = {}
        self.inconsistent = False
        for scope, tuples in constraints:
            scope, tuples = normalize(scope, tuples)
            if not scope:
                if not tuples:
                    self.inconsistent = True
                continue
            order = sorted(range(len(scope)), key=scope.__getitem__)
            key = tuple(scope[i] for i in order)
            if order != list(range(len(scope))):
                tuples = {tuple(t[i] for i in order) for t in tuples}
            elif not isinstance(tuples, (set, frozenset)):
                tuples = set(tuples)
            if len(key) == 1:
                mask = 0
                for (a,) in tuples:
                    mask |= 1 << a
                self.domains[key[0]] &= mask
                continue
            prev = grouped.get(key)
            grouped[key] = tuples if prev is None else (prev & tuples)
        self.scopes = list(grouped)
        self.tables = [
            [tuple(1 << a for a in t) for t in grouped[s]] for s in self.scopes
        ]
        self.watch = [[] for _ in self.domains]
        for ci, scope in enumerate(self.scopes):
            for v in scope:
                self.watch[v].append(ci)
        if any(d == 0 for d in self.domains):
            self.inconsistent = True


class Search:
    """Depth-first search with GAC after each assignment.

    ``order`` is ``"static"`` (lowest unfixed variable first) or ``"mrv"``
    (smallest domain first, ties by index). ``propagator`` is an optional
    callable ``(domains) -> list of changed variables | None``; it may only
    shrink domains and returns None on a wipe-out.
    """

    def __init__(self, problem, budget=DEFAULT_BUDGET, order="static", propagator=None):
        self.problem = problem
        self.budget = budget
        self.order = order
        self.propagator = propagator
        self.nodes = 0

    def _propagate(self, dom, live, changed):
        p = self.problem
        watch, scopes = p.watch, p.scopes
        queue = deque()
        queued = set()
        for v in changed:
            for ci in watch[v]:
                if ci not in queued:
                    queued.add(ci)
                    queue.append(ci)
        while True:
            while queue:
                ci = queue.popleft()
                queued.discard(ci)
                scope = scopes[ci]
                if len(scope) == 2:
                    x, y = scope
                    dx, dy = dom[x], dom[y]
                    rows = [t for t in live[ci] if t[0] & dx and t[1] & dy]
                    sx = sy = 0
                    for a, b in rows:
                        sx |= a
                        sy |= b
                    supports = (sx, sy)
                else:
                    ds = [dom[v] for v in scope]
                    r = range(len(scope))
                    rows = [t for t in live[ci] if all(t[i] & ds[i] for i in r)]
                    sup = [0] * len(scope)
                    for t in rows:
                        for i in r:
                            sup[i] |= t[i]
                    supports = sup
                if not rows:
                    return False
                live[ci] = rows
                for v, s in zip(scope, supports):
                    if dom[v] & s != dom[v]:
                        dom[v] &= s
                        for cj in watch[v]:
                            if cj != ci and cj not in queued:
                                queued.add(cj)
                                queue.append(cj)
            if self.propagator is None:
                return True
            more = self.propagator(dom)
            if more is None:
                return False
            if not more:
                return True
            for v in more:
                for cj in watch[v]:
                    if cj not in queued:
                        queued.add(cj)
                        queue.append(cj)

    def _pick(self, dom):
        best = -1
        best_size = None
        for v, d in enumerate(dom):
            if d & (d - 1):
                if self.order == "static":
                    return v
                size = d.bit_count()
                if best_size is None or size < best_size:
                    best, best_size = v, size
                    if size == 2:
                        break
        return best

    def solutions(self, pins=()):
        """Yield complete assignments (lists of values) in search order."""
        p = self.problem
        if p.inconsistent:
            return
        dom = list(p.domains)
        for v, a in pins:
            dom[v] &= 1 << a
        if any(d == 0 for d in dom):
            return
        live = list(p.tables)
        if not self._propagate(dom, live, range(len(dom))):
            return
        yield from self._dfs(dom, live)

    def _dfs(self, dom, live):
        v = self._pick(dom)
        if v < 0:
            yield [d.bit_length() - 1 for d in dom]
            return
        for a in bits(dom[v]):
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetExhausted(f"search exceeded {self.budget} steps")
            d2 = dom[:]
            d2[v] = 1 << a
            l2 = live[:]
            if self._propagate(d2, l2, (v,)):
                yield from self._dfs(d2, l2)

    def first(self, pins=()):
        for sol in self.solutions(pins):
            return sol
        return None


def solve(domains, constraints, budget=DEFAULT_BUDGET, order="static", propagator=None, pins=()):
    """Return the first solution in search order, or None if there is none."""
    return Search(Problem(domains, constraints), budget, order, propagator).first(pins)
