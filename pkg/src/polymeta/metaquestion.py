"""Deciding whether a structure has polymorphisms satisfying a Maltsev condition.

The central object is the indicator instance: one CSP variable per cell
``f(a1..ak)`` of every operation symbol, with cells identified by the
height-1 identities, pinned by identities with a bare variable on the right,
and constrained so that every symbol is a polymorphism. Its solutions are
exactly the tuples of polymorphisms satisfying the condition.
"""

import re
from dataclasses import dataclass
from itertools import product as cartesian
from typing import NamedTuple, Optional

from . import engine
from .conditions import (
    OperationTable,
    Symbol,
    MaltsevCondition,
    named_condition,
    quasi_transform,
    satisfies_identities,
)
from .errors import InconclusiveFixing
from .minimality import Constraint, CspInstance, make_constraint, solve_by_fixing, PairConsistency
from .structures import (
    SetFunction,
    compute_core,
    conservative_expansion,
    find_homomorphism,
    is_set_polymorphism,
    power_structure,
)


@dataclass(frozen=True)
class SearchFlags:
    idempotent: bool = False
    conservative: bool = False
    budget: int = engine.DEFAULT_BUDGET

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")


def is_polymorphism(table, h):
    """True iff ``table`` maps every k-tuple of tuples of each relation into it."""
    if table.size != h.size:
        raise ValueError("table and structure have different domain sizes")
    k = table.arity
    n = h.size
    for rel in h.relations:
        tuples = list(rel.tuples)
        target = rel.tuples
        for rows in cartesian(tuples, repeat=k):
            image = []
            for i in range(rel.arity):
                j = 0
                for t in rows:
                    j = j * n + t[i]
                image.append(table.values[j])
            if tuple(image) not in target:
                return False
    return True


def is_witness(h, m, tables, flags=SearchFlags()):
    """Full verification of a candidate witness for ``m`` on ``h``."""
    if set(tables) != {s.name for s in m.symbols}:
        return False
    if not satisfies_identities(tables, m):
        return False
    for t in tables.values():
        if not is_polymorphism(t, h):
            return False
        if flags.idempotent and not t.is_idempotent():
            return False
        if flags.conservative and not t.is_conservative():
            return False
    return True


# --- indicator instance ----------------------------------------------------


@dataclass(frozen=True)
class IndicatorInstance:
    instance: CspInstance
    symbols: tuple  # Symbol objects in condition order
    cell_class: dict  # symbol name -> tuple: table index -> instance variable
    classes: tuple  # instance variable -> tuple of (symbol name, argument tuple)

    def tables(self, assignment):
        out = {}
        for s in self.symbols:
            n = self.instance.size
            out[s.name] = OperationTable(s.arity, n, [assignment[c] for c in self.cell_class[s.name]])
        return out


def _cell(args, n):
    j = 0
    for a in args:
        j = j * n + a
    return j


def indicator_instance(h, m, flags=SearchFlags()):
    n = h.size
    full = (1 << n) - 1
    offsets = {}
    raw = 0
    for s in m.symbols:
        offsets[s.name] = raw
        raw += n**s.arity
    parent = list(range(raw))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb

    def raw_id(symbol, vals, positions):
        j = 0
        for p in positions:
            j = j * n + vals[p]
        return offsets[symbol] + j

    pins = {}
    for e in m.identities:
        names = e.variables()
        lpos = [names.index(x) for x in e.lhs.args]
        if e.height1:
            rpos = [names.index(x) for x in e.rhs.args]
            for vals in cartesian(range(n), repeat=len(names)):
                union(raw_id(e.lhs.symbol, vals, lpos), raw_id(e.rhs.symbol, vals, rpos))
        else:
            vpos = names.index(e.rhs)
            for vals in cartesian(range(n), repeat=len(names)):
                r = raw_id(e.lhs.symbol, vals, lpos)
                pins[r] = pins.get(r, full) & (1 << vals[vpos])
    for s in m.symbols:
        base = offsets[s.name]
        if flags.idempotent:
            for a in range(n):
                r = base + _cell((a,) * s.arity, n)
                pins[r] = pins.get(r, full) & (1 << a)
        if flags.conservative:
            for j, args in enumerate(cartesian(range(n), repeat=s.arity)):
                mask = 0
                for a in args:
                    mask |= 1 << a
                pins[base + j] = pins.get(base + j, full) & mask

    # classes numbered by lowest member
    class_of_root = {}
    members = []
    raw_class = [0] * raw
    for r in range(raw):
        root = find(r)
        if root not in class_of_root:
            class_of_root[root] = len(members)
            members.append([])
        c = class_of_root[root]
        raw_class[r] = c
    for s in m.symbols:
        base = offsets[s.name]
        for j, args in enumerate(cartesian(range(n), repeat=s.arity)):
            members[raw_class[base + j]].append((s.name, args))

    masks = [full] * len(members)
    for r, mask in pins.items():
        masks[raw_class[r]] &= mask
    cons = [Constraint((c,), [(a,) for a in engine.bits(mk)]) for c, mk in enumerate(masks) if mk != full]

    for s in m.symbols:
        base = offsets[s.name]
        k = s.arity
        for rel in h.relations:
            tuples = list(rel.tuples)
            if not tuples:
                continue
            allowed = frozenset(rel.tuples)
            scopes = set()
            for rows in cartesian(tuples, repeat=k):
                scope = tuple(
                    raw_class[base + _cell([t[i] for t in rows], n)] for i in range(rel.arity)
                )
                scopes.add(scope)
            for scope in sorted(scopes):
                cons.append(make_constraint(scope, allowed))

    cell_class = {
        s.name: tuple(raw_class[offsets[s.name] : offsets[s.name] + n**s.arity]) for s in m.symbols
    }
    inst = CspInstance(len(members), n, cons)
    return IndicatorInstance(inst, tuple(m.symbols), cell_class, tuple(tuple(c) for c in members))


# --- search strategies -----------------------------------------------------


def brute_search_polymorphisms(h, m, flags=SearchFlags(), propagator=None):
    """Exact search over the indicator instance. Returns tables, None, or raises BudgetExhausted."""
    ind = indicator_instance(h, m, flags)
    inst = ind.instance
    full = (1 << inst.size) - 1
    problem = engine.Problem([full] * inst.variables, [(c.scope, c.allowed) for c in inst.constraints])
    prop = propagator(ind) if propagator else None
    sol = engine.Search(problem, flags.budget, order="mrv", propagator=prop).first()
    if sol is None:
        return None
    tables = ind.tables(sol)
    if not is_witness(h, m, tables, flags):
        raise AssertionError("exact search produced an invalid witness")
    return tables


def create_polymorphisms(h, m, flags=SearchFlags()):
    """Witness creation by (2,3)-minimality and value fixing, verified.

    None is returned when the first consistency pass empties a constraint.
    When fixing breaks down or the fixed tables fail verification, the
    answer comes from exact search instead.
    """
    ind = indicator_instance(h, m, flags)
    try:
        sol = solve_by_fixing(ind.instance, 2, 3)
    except InconclusiveFixing:
        return brute_search_polymorphisms(h, m, flags)
    if sol is None:
        return None
    tables = ind.tables(sol)
    if not is_witness(h, m, tables, flags):
        return brute_search_polymorphisms(h, m, flags)
    return tables


def indicator_is_empty(h, m, flags=SearchFlags()):
    """True iff (2,3)-minimality empties the indicator instance."""
    return PairConsistency(indicator_instance(h, m, flags).instance, 2, 3).empty


_NAME = re.compile(r"^(idempotent-)?(quasi-)?([a-z]+)(?:-(\d+))?$")


def _classify(m, flags):
    """Return (family, arity, idempotent) read off a catalog condition name."""
    match = _NAME.match(m.name)
    if not match:
        return None, None, flags.idempotent
    idem, quasi, family, k = match.groups()
    if quasi:
        return None, None, flags.idempotent
    return family, int(k) if k else None, bool(idem) or flags.idempotent


def strategy_for(m, flags):
    family, k, idem = _classify(m, flags)
    if family in ("nu", "majority"):
        return "creation"
    if family == "ts" and idem and k is not None and k >= 3:
        return "creation"
    if family == "bw" and idem:
        return "creation"
    if flags.conservative and family in ("cyclic", "symmetric") and k and k % 2 == 0:
        return "conservative-even"
    return "brute"


def lift_binary(g, k):
    """k-ary table from a commutative conservative binary table.

    Tuples with one distinct value map to it, tuples with two distinct values
    ``{a, b}`` map to ``g(a, b)``, and tuples with three or more distinct
    values map to their minimum.
    """
    def fn(*xs):
        support = sorted(set(xs))
        if len(support) == 1:
            return support[0]
        if len(support) == 2:
            return g(*support)
        return support[0]

    return OperationTable.from_function(k, g.size, fn)


def _conservative_even(h, m, flags):
    from .conservative import cc_decide

    g = cc_decide(h)
    if g is None:
        return None
    (sym,) = m.symbols
    candidate = {sym.name: lift_binary(g, sym.arity)}
    if is_witness(h, m, candidate, flags):
        return candidate
    # a binary conservative commutative polymorphism gives bounded width,
    # so creation on the conservative expansion is exact
    expanded = conservative_expansion(h)
    tables = create_polymorphisms(expanded, m, SearchFlags(True, True, flags.budget))
    if tables is not None and not is_witness(h, m, tables, flags):
        raise AssertionError("creation returned an invalid witness")
    return tables


def decide_condition(h, m, flags=SearchFlags(), strategy="auto"):
    """Decide whether ``h`` has polymorphisms satisfying ``m``; return witness tables or None."""
    if strategy == "auto":
        strategy = strategy_for(m, flags)
    if strategy == "creation":
        return create_polymorphisms(h, m, flags)
    if strategy == "conservative-even":
        return _conservative_even(h, m, flags)
    if strategy == "brute":
        return brute_search_polymorphisms(h, m, flags)
    raise ValueError(f"unknown strategy {strategy!r}")


# --- specific metaquestions ------------------------------------------------


def decide_set_polymorphism(h, budget=engine.DEFAULT_BUDGET):
    """Return a verified set polymorphism of ``h`` or None.

    Searches an idempotent set polymorphism of the core and lifts it through
    the retraction: f(X) = g({r(x) : x in X}).
    """
    core = compute_core(h, budget)
    c = core.structure
    index = {a: i for i, a in enumerate(core.elements)}
    pins = {(1 << x) - 1: x for x in range(c.size)}
    g = find_homomorphism(power_structure(c), c, pins, budget)
    if g is None:
        return None
    values = []
    for mask in range(1, 2**h.size):
        y = 0
        for x in engine.bits(mask):
            y |= 1 << index[core.retraction[x]]
        values.append(core.elements[g[y - 1]])
    f = SetFunction(h.size, values)
    if not is_set_polymorphism(f, h):
        raise AssertionError("lifted set function is not a set polymorphism")
    return f


class BoundedWidth(NamedTuple):
    verdict: str  # "width1", "bounded23" or "unbounded"
    core: object
    set_function: Optional[SetFunction]  # of the core, when width1
    tables: Optional[dict]  # idempotent BW operations on the core, when bounded23


def decide_bounded_width(h, budget=engine.DEFAULT_BUDGET):
    core = compute_core(h, budget)
    c = core.structure
    f = decide_set_polymorphism(c, budget)
    if f is not None:
        return BoundedWidth("width1", core, f, None)
    tables = create_polymorphisms(c, named_condition("bw"), SearchFlags(idempotent=True, budget=budget))
    if tables is not None:
        return BoundedWidth("bounded23", core, None, tables)
    return BoundedWidth("unbounded", core, None, None)


def _associativity(ind):
    n = ind.instance.size
    cell = ind.cell_class["f"]

    def var(a, b):
        return cell[a * n + b]

    def prop(dom):
        changed = []
        for a in range(n):
            for b in range(n):
                d = dom[var(a, b)]
                if d & (d - 1):
                    continue
                x = d.bit_length() - 1
                for c in range(n):
                    e = dom[var(b, c)]
                    if e & (e - 1):
                        continue
                    y = e.bit_length() - 1
                    # (a*b)*c = a*(b*c)
                    left, right = var(x, c), var(a, y)
                    dl, dr = dom[left], dom[right]
                    both = dl & dr
                    if not both:
                        return None
                    if dl & (dl - 1) == 0 or dr & (dr - 1) == 0:
                        if dl != both:
                            dom[left] = both
                            changed.append(left)
                        if dr != both:
                            dom[right] = both
                            changed.append(right)
        return changed

    return prop


def is_semilattice(t):
    n = t.size
    if t.arity != 2 or not t.is_idempotent():
        return False
    for a in range(n):
        for b in range(n):
            if t(a, b) != t(b, a):
                return False
            for c in range(n):
                if t(t(a, b), c) != t(a, t(b, c)):
                    return False
    return True


def decide_semilattice(h, conservative=False, budget=engine.DEFAULT_BUDGET):
    """Exact search for a (conservative) semilattice polymorphism; returns a table or None."""
    m = MaltsevCondition("commutative", [Symbol("f", 2)], named_condition("cyclic", 2).identities)
    flags = SearchFlags(idempotent=True, conservative=conservative, budget=budget)
    tables = brute_search_polymorphisms(h, m, flags, propagator=_associativity)
    if tables is None:
        return None
    t = tables["f"]
    if not is_semilattice(t):
        raise AssertionError("semilattice search produced a non-associative table")
    return t


class QuasiDecision(NamedTuple):
    holds: bool
    core: object
    core_tables: Optional[dict]  # idempotent witnesses of the condition on the core
    tables: Optional[dict]  # witnesses of the quasi-transform on the input


def decide_quasi(h, m, budget=engine.DEFAULT_BUDGET, strategy="auto"):
    """Decide the quasi-transform of ``m`` on ``h`` by deciding ``m`` on the core idempotently."""
    core = compute_core(h, budget)
    c = core.structure
    flags = SearchFlags(idempotent=True, budget=budget)
    core_tables = decide_condition(c, m, flags, strategy)
    if core_tables is None:
        return QuasiDecision(False, core, None, None)
    index = {a: i for i, a in enumerate(core.elements)}
    lifted = {}
    for name, g in core_tables.items():
        lifted[name] = OperationTable.from_function(
            g.arity,
            h.size,
            lambda *xs, g=g: core.elements[g(*(index[core.retraction[x]] for x in xs))],
        )
    if not is_witness(h, quasi_transform(m), lifted):
        raise AssertionError("lifted tables do not satisfy the quasi-transform")
    return QuasiDecision(True, core, core_tables, lifted)
