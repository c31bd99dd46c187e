"""Reduction gadgets and the brute-force graph oracles used to test them.

Element layouts are fixed so that serialized outputs are byte-stable:

* three-colouring gadget: vertex u, colour i in {1,2,3} -> 3u + (i - 1)
* NL gadget for a digraph on m vertices: v1 -> 2v, v2 -> 2v + 1, then one
  element per arc in sorted (tail, head) order, then a, then b
"""

from dataclasses import dataclass
from itertools import combinations

import networkx as nx

from .conditions import OperationTable
from .conservative import Digraph
from .errors import FormatError
from .structures import structure


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset  # of (u, v) with u < v

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        for u, v in self.edges:
            if not 0 <= u < v < self.n:
                raise ValueError(f"bad edge ({u}, {v})")

    @classmethod
    def of(cls, n, edges):
        return cls(n, frozenset((min(u, v), max(u, v)) for u, v in edges))

    def neighbours(self):
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def is_connected(self):
        if self.n == 0:
            return True
        adj = self.neighbours()
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class TripleSet:
    n: int
    triples: tuple

    def __post_init__(self):
        for t in self.triples:
            if len(t) != 3 or len(set(t)) != 3:
                raise ValueError(f"triple {tuple(t)} must have three distinct entries")
            if not all(0 <= x < self.n for x in t):
                raise ValueError(f"triple {tuple(t)} out of range for {self.n} elements")


def three_col_gadget(g):
    if g.n < 2:
        raise ValueError("graph needs at least 2 vertices")
    if not g.is_connected():
        raise ValueError("graph must be connected")
    rels = []
    for u, v in sorted(g.edges):
        tuples = [(3 * u + i, 3 * v + j) for i in range(3) for j in range(3) if i != j]
        rels.append((f"E{u}_{v}", 2, tuples))
    return structure(f"threecol{g.n}", 3 * g.n, rels)


def betweenness_structure(t):
    rels = []
    for mask in range(1, 2**t.n):
        if bin(mask).count("1") <= 2:
            rels.append((f"U{mask}", 1, [(x,) for x in range(t.n) if mask >> x & 1]))
    for idx, (i, j, k) in enumerate(t.triples):
        rels.append((f"B{idx}", 2, [(i, j), (j, k)]))
    return structure(f"betweenness{t.n}", t.n, rels)


def triple_structure(t):
    rels = [(f"T{idx}", 2, [(a, b), (b, b), (b, c)]) for idx, (a, b, c) in enumerate(t.triples)]
    return structure(f"triples{t.n}", t.n, rels)


def nl_gadget(k, s, t):
    """Triples T' = T u L for digraph ``k`` (vertices 0..m-1) and its triple structure."""
    m = len(k.vertices)
    if tuple(k.vertices) != tuple(range(m)):
        raise ValueError("digraph vertices must be 0..m-1")
    if s == t or not (0 <= s < m and 0 <= t < m):
        raise ValueError("s and t must be distinct vertices")
    touched = set()
    for u, v in k.arcs:
        if u == v:
            raise ValueError("digraph must be loopless")
        touched.update((u, v))
    if len(touched) != m:
        raise ValueError("digraph must not have isolated vertices")

    def v1(v):
        return 2 * v

    def v2(v):
        return 2 * v + 1

    arcs = sorted(k.arcs)
    arc_el = {arc: 2 * m + i for i, arc in enumerate(arcs)}
    a = 2 * m + len(arcs)
    b = a + 1
    triples = []
    for (u, v) in arcs:
        al = arc_el[(u, v)]
        triples += [(v1(u), v2(u), al), (v2(u), al, v1(v)), (al, v1(v), v2(v))]
    s1, s2, t1, t2 = v1(s), v2(s), v1(t), v2(t)
    triples += [
        (a, b, s1), (b, s1, s2), (s1, s2, a), (s2, a, b),
        (t1, a, b), (t2, t1, a), (b, t2, t1), (a, b, t2),
    ]
    ts = TripleSet(b + 1, tuple(triples))
    return ts, triple_structure(ts)


def same_strong_component(k, s, t):
    g = k.to_networkx()
    return nx.has_path(g, s, t) and nx.has_path(g, t, s)


def cycle_structure(p):
    if p < 2:
        raise ValueError("cycle length must be at least 2")
    return structure(f"cycle{p}", p, [("E", 2, [(i, (i + 1) % p) for i in range(p)])])


def _is_prime(p):
    return p >= 2 and all(p % d for d in range(2, int(p**0.5) + 1))


def prime_cycle_ts(p, k, args):
    """t^{-1} times the sum of the distinct arguments, mod p."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if not 2 <= k < p:
        raise ValueError("need 2 <= k < p")
    if len(args) != k or not all(0 <= a < p for a in args):
        raise ValueError("bad arguments")
    distinct = set(args)
    return pow(len(distinct), -1, p) * sum(distinct) % p


def prime_cycle_table(p, k):
    return OperationTable.from_function(k, p, lambda *xs: prime_cycle_ts(p, k, xs))


def three_colorable(g):
    adj = g.neighbours()
    colour = [-1] * g.n
    order = sorted(range(g.n), key=lambda v: -len(adj[v]))

    def go(i):
        if i == len(order):
            return True
        v = order[i]
        used = {colour[w] for w in adj[v]}
        for c in range(3):
            if c not in used:
                colour[v] = c
                if go(i + 1):
                    return True
        colour[v] = -1
        return False

    return go(0)


def betweenness_solve(t):
    """A permutation (left to right) with every middle element between its ends, or None."""
    n = t.n
    by_elem = [[] for _ in range(n)]
    for tr in t.triples:
        for x in tr:
            by_elem[x].append(tr)
    pos = {}
    order = []

    def ok(x):
        for (i, j, k) in by_elem[x]:
            if i in pos and j in pos and k in pos:
                if not (pos[i] < pos[j] < pos[k] or pos[k] < pos[j] < pos[i]):
                    return False
            elif j in pos and i in pos and k not in pos:
                # k comes later, so j must be after i
                if pos[j] < pos[i]:
                    return False
            elif j in pos and k in pos and i not in pos:
                if pos[j] < pos[k]:
                    return False
            elif j not in pos and i in pos and k in pos:
                return False
        return True

    def go():
        if len(order) == n:
            return True
        for x in range(n):
            if x in pos:
                continue
            pos[x] = len(order)
            order.append(x)
            if ok(x) and go():
                return True
            order.pop()
            del pos[x]
        return False

    return tuple(order) if go() else None


# --- text formats ----------------------------------------------------------


def _lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _ints(toks, lineno, count):
    if len(toks) != count:
        raise FormatError(f"expected {count} integers", lineno)
    try:
        return [int(x) for x in toks]
    except ValueError:
        raise FormatError("expected integers", lineno) from None


def parse_graph(text):
    lines = list(_lines(text))
    if not lines or lines[0][1][0] != "graph":
        raise FormatError("expected 'graph <n>'", lines[0][0] if lines else 1)
    lineno, toks = lines[0]
    (n,) = _ints(toks[1:], lineno, 1)
    edges = set()
    for lineno, toks in lines[1:]:
        if toks[0] != "edge":
            raise FormatError(f"unexpected {toks[0]!r}", lineno)
        u, v = _ints(toks[1:], lineno, 2)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise FormatError("edge endpoints must be distinct vertices in range", lineno)
        edges.add((min(u, v), max(u, v)))
    return Graph(n, frozenset(edges))


def serialize_graph(g):
    return "\n".join([f"graph {g.n}"] + [f"edge {u} {v}" for u, v in sorted(g.edges)]) + "\n"


def parse_digraph(text):
    """Returns (Digraph on 0..n-1, s, t); s and t are None without a mark line."""
    lines = list(_lines(text))
    if not lines or lines[0][1][0] != "digraph":
        raise FormatError("expected 'digraph <n>'", lines[0][0] if lines else 1)
    lineno, toks = lines[0]
    (n,) = _ints(toks[1:], lineno, 1)
    arcs = []
    s = t = None
    for lineno, toks in lines[1:]:
        if toks[0] == "arc":
            u, v = _ints(toks[1:], lineno, 2)
            if not (0 <= u < n and 0 <= v < n):
                raise FormatError("arc endpoint out of range", lineno)
            if (u, v) in arcs:
                raise FormatError("duplicate arc", lineno)
            arcs.append((u, v))
        elif toks[0] == "mark":
            if s is not None:
                raise FormatError("duplicate mark line", lineno)
            s, t = _ints(toks[1:], lineno, 2)
            if not (0 <= s < n and 0 <= t < n):
                raise FormatError("marked vertex out of range", lineno)
        else:
            raise FormatError(f"unexpected {toks[0]!r}", lineno)
    return Digraph(tuple(range(n)), tuple(arcs)), s, t


def serialize_digraph_input(k, s, t):
    lines = [f"digraph {len(k.vertices)}"] + [f"arc {u} {v}" for u, v in k.arcs]
    if s is not None:
        lines.append(f"mark {s} {t}")
    return "\n".join(lines) + "\n"


def parse_triples(text, n=None):
    """One triple per line; the element count is the largest entry plus one unless given."""
    triples = []
    for lineno, toks in _lines(text):
        tr = tuple(_ints(toks, lineno, 3))
        if len(set(tr)) != 3 or min(tr) < 0:
            raise FormatError("triple entries must be distinct nonnegative integers", lineno)
        triples.append(tr)
    if n is None:
        n = 1 + max((max(t) for t in triples), default=-1)
    return TripleSet(n, tuple(triples))


def serialize_triples(t):
    return "".join(f"{a} {b} {c}\n" for a, b, c in t.triples)


def connected_graphs(n):
    """All connected graphs on vertices 0..n-1 (labelled, not up to isomorphism)."""
    all_pairs = list(combinations(range(n), 2))
    for mask in range(2 ** len(all_pairs)):
        g = Graph(n, frozenset(p for i, p in enumerate(all_pairs) if mask >> i & 1))
        if g.is_connected():
            yield g
