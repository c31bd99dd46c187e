"""Conservative binary commutative polymorphisms.

A conservative commutative binary operation is determined by one choice per
2-element subset {a, b}: whether f(a, b) is the min or the max. Restricting
each relation S to the tuples that agree coordinatewise with a pair (s, s')
turns the existence question into a CSP over those choices, whose relations
over the alphabet {n, x} are closed under majority. The triple-digraph
criterion at the bottom decides the same question for structures built from
triples by a strong-component test.
"""

from dataclasses import dataclass
from itertools import product as cartesian

import networkx as nx

from .conditions import OperationTable
from .errors import InconclusiveFixing
from .metaquestion import is_polymorphism
from .minimality import CspInstance, make_constraint, solve_by_fixing, solve_exact

N, X = 0, 1  # the two values of a choice variable: min / max of the pair
LETTERS = "nx"


@dataclass(frozen=True)
class ReducedRelation:
    source: int  # index of the relation in the structure
    generators: tuple  # (s, s')
    coords: tuple  # kept coordinates of the source relation
    tuples: tuple  # sorted tuples of the reduced relation
    pairs: tuple  # per kept coordinate the projection (lo, hi)

    def __post_init__(self):
        for (lo, hi) in self.pairs:
            if not lo < hi:
                raise ValueError("projection must have exactly two elements")
        for t in self.tuples:
            if len(t) != len(self.coords):
                raise ValueError("tuple length does not match kept coordinates")
            for v, (lo, hi) in zip(t, self.pairs):
                if v != lo and v != hi:
                    raise ValueError("tuple entry outside its projection")


def reduced_relations(h):
    """All distinct nonempty reductions S^{s,s'} with singleton projections dropped."""
    out = []
    seen = set()
    for ri, rel in enumerate(h.relations):
        tuples = rel.sorted_tuples()
        for s, s2 in cartesian(tuples, repeat=2):
            coords = tuple(i for i in range(rel.arity) if s[i] != s2[i])
            if not coords:
                continue
            allowed = [{s[i], s2[i]} for i in range(rel.arity)]
            sub = [t for t in tuples if all(t[i] in allowed[i] for i in range(rel.arity))]
            pairs = tuple((min(s[i], s2[i]), max(s[i], s2[i])) for i in coords)
            reduced = tuple(sorted({tuple(t[i] for i in coords) for t in sub}))
            key = (pairs, reduced)
            if key in seen:
                continue
            seen.add(key)
            out.append(ReducedRelation(ri, (s, s2), coords, reduced, pairs))
    return out


def _choice_map(r, pairs):
    """The partial operation g_r on pairs, or None when r assigns a pair two values."""
    g = {}
    for v, c in zip(r, pairs):
        if g.setdefault(c, v) != v:
            return None
    return g


def admissible_tuples(red):
    present = set(red.tuples)
    out = []
    for r in red.tuples:
        g = _choice_map(r, red.pairs)
        if g is None:
            continue
        ok = True
        for u in red.tuples:
            for v in red.tuples:
                w = tuple(a if a == b else g[c] for a, b, c in zip(u, v, red.pairs))
                if w not in present:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(r)
    return out


def star_encode(red, admissible):
    """Encode tuples over {n, x}: n where the entry is the min of its pair."""
    return frozenset(tuple(N if v == c[0] else X for v, c in zip(r, red.pairs)) for r in admissible)


def star_string(t):
    return "".join(LETTERS[v] for v in t)


def is_majority_closed(rel):
    rel = set(rel)
    for a, b, c in cartesian(rel, repeat=3):
        m = tuple(x if x == y or x == z else y for x, y, z in zip(a, b, c))
        if m not in rel:
            return False
    return True


@dataclass(frozen=True)
class ChoiceCsp:
    pairs: tuple  # variable i decides the value on pairs[i]
    relations: tuple  # (ReducedRelation, star relation) in generation order
    instance: CspInstance


def choice_csp(h):
    reds = reduced_relations(h)
    pairs = sorted({c for red in reds for c in red.pairs})
    index = {c: i for i, c in enumerate(pairs)}
    rels = []
    cons = []
    for red in reds:
        star = star_encode(red, admissible_tuples(red))
        rels.append((red, star))
        scope = tuple(index[c] for c in red.pairs)
        cons.append(make_constraint(scope, star))
    return ChoiceCsp(tuple(pairs), tuple(rels), CspInstance(len(pairs), 2, cons))


def table_from_choices(n, pairs, assignment):
    chosen = {c: (c[1] if v == X else c[0]) for c, v in zip(pairs, assignment)}

    def fn(a, b):
        if a == b:
            return a
        c = (min(a, b), max(a, b))
        return chosen.get(c, c[0])

    return OperationTable.from_function(2, n, fn)


def cc_decide(h):
    """Return a conservative commutative binary polymorphism of ``h`` or None."""
    csp = choice_csp(h)
    try:
        sol = solve_by_fixing(csp.instance, 2, 3)
    except InconclusiveFixing:
        # cannot happen for majority-closed relations; kept exact regardless
        sol = solve_exact(csp.instance)
    if sol is None:
        return None
    f = table_from_choices(h.size, csp.pairs, sol)
    if not is_polymorphism(f, h):
        raise AssertionError("choice assignment does not give a polymorphism")
    return f


def is_conservative_commutative(t):
    n = t.size
    return t.arity == 2 and t.is_conservative() and all(
        t(a, b) == t(b, a) for a in range(n) for b in range(n)
    )


# --- triples ---------------------------------------------------------------


@dataclass(frozen=True)
class Digraph:
    vertices: tuple
    arcs: tuple

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise ValueError("duplicate vertex")
        if len(set(self.arcs)) != len(self.arcs):
            raise ValueError("duplicate arc")
        for u, v in self.arcs:
            if u not in vs or v not in vs:
                raise ValueError(f"arc ({u}, {v}) has an unknown endpoint")

    def to_networkx(self):
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.arcs)
        return g


def _check_triples(triples):
    for t in triples:
        if len(t) != 3 or len(set(t)) != 3:
            raise ValueError(f"triple {tuple(t)} must have three distinct entries")


def triple_digraph(triples):
    _check_triples(triples)
    vertices = {}
    arcs = {}
    for a, b, c in triples:
        for v in ((a, b), (b, c), (c, b), (b, a)):
            vertices.setdefault(v, None)
        arcs.setdefault(((a, b), (b, c)), None)
        arcs.setdefault(((c, b), (b, a)), None)
    return Digraph(tuple(vertices), tuple(arcs))


def scc_criterion(d):
    comp = {}
    for i, scc in enumerate(nx.strongly_connected_components(d.to_networkx())):
        for v in scc:
            comp[v] = i
    for (a, b) in d.vertices:
        if (b, a) in comp and comp[(b, a)] == comp[(a, b)]:
            return False
    return True


def cc_decide_triples(triples):
    return scc_criterion(triple_digraph(triples))


def serialize_digraph(d):
    lines = [f"digraph {len(d.vertices)} {len(d.arcs)}"]
    for u, v in d.arcs:
        lines.append(f"{u[0]},{u[1]} {v[0]},{v[1]}")
    return "\n".join(lines) + "\n"
