"""CSP instances and the (k,l)-minimality local consistency algorithm.

Two implementations of the same fixpoint are provided:

* :func:`kl_minimality_explicit` follows the textbook procedure literally,
  materializing a dummy constraint ``H^W`` for every l-set ``W`` and
  repeatedly reconciling projections onto sets of size at most k. It is
  exponential in l and only meant for small instances and as a test oracle.
* :class:`PairConsistency` computes the same fixpoint for ``k <= 2`` and
  ``l <= 3``. A dummy on a triple of variables, once stable, is exactly the
  set of maps whose 2-element restrictions lie in the current binary
  projections, so it is kept symbolic: only binary projections that differ
  from the full product of the unary domains are stored, and reconciling
  dummies becomes path consistency over those stored pairs.
"""

from collections import deque
from dataclasses import dataclass
from itertools import combinations, product as cartesian
from typing import Optional

from . import engine
from .errors import FormatError, InconclusiveFixing


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    allowed: frozenset

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "allowed", frozenset(tuple(t) for t in self.allowed))
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("constraint scope repeats a variable")
        for t in self.allowed:
            if len(t) != len(self.scope):
                raise ValueError("allowed tuple length differs from scope length")


@dataclass(frozen=True)
class CspInstance:
    variables: int
    size: int
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            for v in c.scope:
                if not 0 <= v < self.variables:
                    raise ValueError(f"scope variable {v} out of range")
            for t in c.allowed:
                for a in t:
                    if not 0 <= a < self.size:
                        raise ValueError(f"allowed value {a} out of range")

    def with_constraints(self, extra):
        return CspInstance(self.variables, self.size, self.constraints + tuple(extra))


def make_constraint(scope, tuples):
    """Constraint from a scope that may repeat variables (first-occurrence order kept)."""
    scope, tuples = engine.normalize(tuple(scope), tuples)
    return Constraint(scope, tuples)


def build_instance(g, h):
    """CSP instance whose solutions are the homomorphisms g -> h."""
    if not g.similar(h):
        raise ValueError("structures are not similar")
    cons = []
    for rg, rh in zip(g.relations, h.relations):
        for t in rg.tuples:
            cons.append(make_constraint(t, rh.tuples))
    return CspInstance(g.size, h.size, cons)


def verify_solution(instance, assignment):
    for c in instance.constraints:
        if tuple(assignment[v] for v in c.scope) not in c.allowed:
            return False
    return True


def solve_exact(instance, budget=engine.DEFAULT_BUDGET, order="mrv"):
    """Exact backtracking solve; returns a tuple assignment or None."""
    full = (1 << instance.size) - 1
    cons = [(c.scope, c.allowed) for c in instance.constraints]
    sol = engine.solve([full] * instance.variables, cons, budget, order=order)
    return None if sol is None else tuple(sol)


def _check_params(k, l):
    if not 1 <= k <= l:
        raise ValueError(f"need 1 <= k <= l, got k={k}, l={l}")


# --- literal reference implementation --------------------------------------


def _project(tuples, positions):
    return {tuple(t[p] for p in positions) for t in tuples}


def kl_minimality_explicit(instance, k, l):
    """Literal (k,l)-minimality with materialized dummies. Returns instance or None."""
    _check_params(k, l)
    n, V = instance.size, instance.variables
    cons = [(c.scope, set(c.allowed)) for c in instance.constraints]
    real = len(cons)
    if l > V:
        dummies = [tuple(range(V))] if V else []
    else:
        dummies = list(combinations(range(V), l))
    for w in dummies:
        cons.append((w, set(cartesian(range(n), repeat=len(w)))))
    subsets = [w for r in range(0, k + 1) for w in combinations(range(V), r)]
    changed = True
    while changed:
        changed = False
        for w in subsets:
            holders = [i for i, (s, _) in enumerate(cons) if set(w) <= set(s)]
            for i, j in combinations(holders, 2):
                for a, b in ((i, j), (j, i)):
                    sa, ta = cons[a]
                    sb, tb = cons[b]
                    pa = [sa.index(v) for v in w]
                    pb = [sb.index(v) for v in w]
                    allowed = _project(tb, pb)
                    keep = {t for t in ta if tuple(t[p] for p in pa) in allowed}
                    if len(keep) != len(ta):
                        cons[a] = (sa, keep)
                        changed = True
                    if not keep:
                        return None
    if any(not t for _, t in cons):
        return None
    out = [Constraint(s, t) for s, t in cons[:real]]
    return CspInstance(V, n, out)


# --- symbolic fast path ----------------------------------------------------


class Empty(Exception):
    pass


class PairConsistency:
    """Incremental (k,l)-minimality for k <= 2, l <= 3 (see module docstring)."""

    def __init__(self, instance, k=2, l=3):
        _check_params(k, l)
        if k > 2 or (l > 3 and not (l > instance.variables and instance.variables <= 3)):
            raise ValueError("PairConsistency handles k <= 2 and l <= 3 only")
        self.instance = instance
        self.k = k
        V = instance.variables
        self.triples = k == 2 and (l == 3 or (l > V and V == 3))
        full = (1 << instance.size) - 1
        self.dom = [full] * V
        self.pairs = {}  # (x, y) -> row masks indexed by value of x
        self.nbrs = [set() for _ in range(V)]
        self.cons = []
        self.watch = [[] for _ in range(V)]
        dead = False
        for c in instance.constraints:
            if len(c.scope) == 1:
                mask = 0
                for (a,) in c.allowed:
                    mask |= 1 << a
                self.dom[c.scope[0]] &= mask
                continue
            if not c.scope:
                dead = dead or not c.allowed
                continue
            ci = len(self.cons)
            self.cons.append([c.scope, list(c.allowed)])
            for v in c.scope:
                self.watch[v].append(ci)
        self.empty = dead or any(d == 0 for d in self.dom) or any(not c[1] for c in self.cons)
        if not self.empty:
            self._run(range(V), range(len(self.cons)), ())

    def copy(self):
        other = object.__new__(PairConsistency)
        other.instance = self.instance
        other.k = self.k
        other.triples = self.triples
        other.dom = self.dom[:]
        other.pairs = dict(self.pairs)
        other.nbrs = [set(s) for s in self.nbrs]
        other.cons = [[s, t] for s, t in self.cons]
        other.watch = self.watch
        other.empty = self.empty
        return other

    def pin(self, var, value):
        """Restrict ``var`` to ``value`` and re-stabilize in place. Returns False on EMPTY."""
        if self.empty:
            return False
        if not self.dom[var] >> value & 1:
            self.empty = True
            return False
        if self.dom[var] != 1 << value:
            self.dom[var] = 1 << value
            self._run((var,), (), ())
        return not self.empty

    # internal helpers

    def _row(self, x, y, a):
        rows = self.pairs.get((x, y))
        if rows is None:
            return self.dom[y] if self.dom[x] >> a & 1 else 0
        return rows[a]

    def _set_pair(self, x, y, rows):
        """Store the relation (x,y) given by ``rows``; maintain the transpose."""
        n = self.instance.size
        self.pairs[(x, y)] = rows
        cols = [0] * n
        for a in range(n):
            r = rows[a]
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= 1 << a
                r ^= low
        self.pairs[(y, x)] = cols
        self.nbrs[x].add(y)
        self.nbrs[y].add(x)

    def _run(self, dom_changed, cons_changed, pairs_changed):
        try:
            self._loop(dom_changed, cons_changed, pairs_changed)
        except Empty:
            self.empty = True

    def _loop(self, dom_changed, cons_changed, pairs_changed):
        n = self.instance.size
        dom, pairs, nbrs = self.dom, self.pairs, self.nbrs
        dq, cq, pq = deque(), deque(), deque()
        din, cin, pin_ = set(), set(), set()

        def push_dom(v):
            if v not in din:
                din.add(v)
                dq.append(v)

        def push_con(ci):
            if ci not in cin:
                cin.add(ci)
                cq.append(ci)

        def push_pair(x, y):
            key = (x, y) if x < y else (y, x)
            if key not in pin_:
                pin_.add(key)
                pq.append(key)

        def shrink_dom(v, mask):
            new = dom[v] & mask
            if new != dom[v]:
                if not new:
                    raise Empty
                dom[v] = new
                push_dom(v)

        def shrink_pair(x, y, rows):
            """Intersect relation (x,y) with ``rows``; materialize if needed."""
            cur = [self._row(x, y, a) for a in range(n)]
            new = [c & r for c, r in zip(cur, rows)]
            if new != cur:
                if not any(new):
                    raise Empty
                self._set_pair(x, y, new)
                push_pair(x, y)

        for v in dom_changed:
            push_dom(v)
        for ci in cons_changed:
            push_con(ci)
        for x, y in pairs_changed:
            push_pair(x, y)

        while dq or cq or pq:
            if dq:
                v = dq.popleft()
                din.discard(v)
                d = dom[v]
                for y in list(nbrs[v]):
                    rows = pairs[(v, y)]
                    new = [rows[a] & dom[y] if d >> a & 1 else 0 for a in range(n)]
                    if new != rows:
                        if not any(new):
                            raise Empty
                        self._set_pair(v, y, new)
                        push_pair(v, y)
                for ci in self.watch[v]:
                    push_con(ci)
                continue
            if cq:
                ci = cq.popleft()
                cin.discard(ci)
                self._revise_constraint(ci, shrink_dom, shrink_pair)
                continue
            x, y = pq.popleft()
            pin_.discard((x, y))
            rows = pairs[(x, y)]
            sx = 0
            sy = 0
            for a in range(n):
                if rows[a]:
                    sx |= 1 << a
                    sy |= rows[a]
            shrink_dom(x, sx)
            shrink_dom(y, sy)
            for ci in self.watch[x]:
                if y in self.cons[ci][0]:
                    push_con(ci)
            if not self.triples:
                continue
            for z in (nbrs[x] | nbrs[y]) - {x, y}:
                # (x,z) via y and (y,z) via x
                for p, q in ((x, y), (y, x)):
                    r_pq = pairs[(p, q)]
                    cur = [self._row(p, z, a) for a in range(n)]
                    new = []
                    for a in range(n):
                        acc = 0
                        r = r_pq[a]
                        while r:
                            low = r & -r
                            acc |= self._row(q, z, low.bit_length() - 1)
                            r ^= low
                        new.append(cur[a] & acc)
                    if new != cur:
                        if not any(new):
                            raise Empty
                        self._set_pair(p, z, new)
                        push_pair(p, z)

    def _revise_constraint(self, ci, shrink_dom, shrink_pair):
        n = self.instance.size
        scope, tuples = self.cons[ci]
        dom = self.dom
        ar = len(scope)
        checks = []
        if self.k >= 2:
            for i, j in combinations(range(ar), 2):
                if (scope[i], scope[j]) in self.pairs:
                    checks.append((i, j, self.pairs[(scope[i], scope[j])]))
        keep = [
            t
            for t in tuples
            if all(dom[scope[i]] >> t[i] & 1 for i in range(ar))
            and all(rows[t[i]] >> t[j] & 1 for i, j, rows in checks)
        ]
        if not keep:
            raise Empty
        self.cons[ci][1] = keep
        for i in range(ar):
            mask = 0
            for t in keep:
                mask |= 1 << t[i]
            shrink_dom(scope[i], mask)
        if self.k >= 2:
            for i, j in combinations(range(ar), 2):
                rows = [0] * n
                for t in keep:
                    rows[t[i]] |= 1 << t[j]
                shrink_pair(scope[i], scope[j], rows)

    def result(self):
        if self.empty:
            return None
        cons = [Constraint(s, t) for s, t in self.cons]
        # unary constraints are reported with their stabilized domains
        out = []
        it = iter(cons)
        for c in self.instance.constraints:
            if len(c.scope) == 1:
                v = c.scope[0]
                out.append(Constraint(c.scope, [(a,) for a in engine.bits(self.dom[v])]))
            elif c.scope:
                out.append(next(it))
            else:
                out.append(c)
        return CspInstance(self.instance.variables, self.instance.size, out)


def _fast_path_ok(instance, k, l):
    V = instance.variables
    return k <= 2 and (l <= 3 or (l > V and V <= 3))


def kl_minimality(instance, k, l):
    """Stabilize ``instance`` under (k,l)-minimality; None means an empty constraint arose."""
    _check_params(k, l)
    if _fast_path_ok(instance, k, l):
        return PairConsistency(instance, k, l).result()
    return kl_minimality_explicit(instance, k, l)


def solve_by_fixing(instance, k=2, l=3):
    """Find a solution by pinning variables one at a time under (k,l)-minimality.

    Returns an assignment tuple, or None when the first consistency pass is
    EMPTY. Raises InconclusiveFixing when, after some pins, no value survives
    for a variable or the final assignment fails verification: under the
    consistency hypothesis neither can happen.
    """
    _check_params(k, l)
    if not _fast_path_ok(instance, k, l):
        return _solve_by_fixing_explicit(instance, k, l)
    state = PairConsistency(instance, k, l)
    if state.empty:
        return None
    for v in range(instance.variables):
        if state.dom[v].bit_count() == 1:
            continue
        chosen = None
        for a in engine.bits(state.dom[v]):
            trial = state.copy()
            if trial.pin(v, a):
                chosen = trial
                break
        if chosen is None:
            raise InconclusiveFixing(f"no value survives for variable {v}")
        state = chosen
    assignment = tuple(d.bit_length() - 1 for d in state.dom)
    if not verify_solution(instance, assignment):
        raise InconclusiveFixing("fixed assignment is not a solution")
    return assignment


def _solve_by_fixing_explicit(instance, k, l):
    current = kl_minimality_explicit(instance, k, l)
    if current is None:
        return None
    values = []
    for v in range(instance.variables):
        for a in range(instance.size):
            pinned = current.with_constraints([Constraint((v,), [(a,)])])
            stable = kl_minimality_explicit(pinned, k, l)
            if stable is not None:
                current = stable
                values.append(a)
                break
        else:
            raise InconclusiveFixing(f"no value survives for variable {v}")
    assignment = tuple(values)
    if not verify_solution(instance, assignment):
        raise InconclusiveFixing("fixed assignment is not a solution")
    return assignment


# --- instance file format --------------------------------------------------


def serialize_instance(instance, name="instance"):
    lines = [f"instance {name}", f"variables {instance.variables}", f"domain {instance.size}"]
    for c in instance.constraints:
        lines.append(f"constraint {len(c.scope)}")
        lines.append("scope " + " ".join(map(str, c.scope)))
        lines.extend(" ".join(map(str, t)) for t in sorted(c.allowed))
        lines.append("end")
    lines.append("endinstance")
    return "\n".join(lines) + "\n"


def parse_instance(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("unexpected end of input", lines[-1][0] if lines else None)
        pos += 1
        return lines[pos - 1]

    def integer(tok, lineno):
        try:
            return int(tok)
        except ValueError:
            raise FormatError(f"expected integer, got {tok!r}", lineno) from None

    lineno, toks = take()
    if len(toks) != 2 or toks[0] != "instance":
        raise FormatError("expected 'instance <name>'", lineno)
    name = toks[1]
    lineno, toks = take()
    if len(toks) != 2 or toks[0] != "variables":
        raise FormatError("expected 'variables <v>'", lineno)
    nvars = integer(toks[1], lineno)
    lineno, toks = take()
    if len(toks) != 2 or toks[0] != "domain":
        raise FormatError("expected 'domain <n>'", lineno)
    size = integer(toks[1], lineno)
    if size < 1 or nvars < 0:
        raise FormatError("bad variable count or domain size", lineno)
    cons = []
    while True:
        lineno, toks = take()
        if toks == ["endinstance"]:
            break
        if len(toks) != 2 or toks[0] != "constraint":
            raise FormatError("expected 'constraint <arity>' or 'endinstance'", lineno)
        arity = integer(toks[1], lineno)
        lineno, toks = take()
        if toks[0] != "scope" or len(toks) != arity + 1:
            raise FormatError(f"expected 'scope' with {arity} variables", lineno)
        scope = tuple(integer(t, lineno) for t in toks[1:])
        if len(set(scope)) != len(scope):
            raise FormatError("scope repeats a variable", lineno)
        if any(not 0 <= v < nvars for v in scope):
            raise FormatError("scope variable out of range", lineno)
        allowed = set()
        while True:
            lineno, toks = take()
            if toks == ["end"]:
                break
            if len(toks) != arity:
                raise FormatError(f"arity mismatch: expected {arity} values", lineno)
            t = tuple(integer(x, lineno) for x in toks)
            if any(not 0 <= a < size for a in t):
                raise FormatError("out-of-range entry", lineno)
            allowed.add(t)
        cons.append(Constraint(scope, allowed))
    return name, CspInstance(nvars, size, cons)
