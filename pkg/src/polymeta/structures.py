"""Finite relational structures and the structural operations on them."""

from dataclasses import dataclass
from itertools import product as cartesian
from typing import NamedTuple, Optional

from . import engine
from .errors import FormatError


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: frozenset

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"relation {self.name}: arity must be positive")
        object.__setattr__(self, "tuples", frozenset(tuple(t) for t in self.tuples))
        for t in self.tuples:
            if len(t) != self.arity:
                raise ValueError(f"relation {self.name}: tuple {t} has wrong arity")

    def sorted_tuples(self):
        return sorted(self.tuples)


@dataclass(frozen=True)
class RelationalStructure:
    name: str
    size: int
    relations: tuple

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("domain size must be positive")
        object.__setattr__(self, "relations", tuple(self.relations))
        seen = set()
        for rel in self.relations:
            if rel.name in seen:
                raise ValueError(f"duplicate relation name {rel.name!r}")
            seen.add(rel.name)
            for t in rel.tuples:
                for a in t:
                    if not 0 <= a < self.size:
                        raise ValueError(f"relation {rel.name}: out-of-range entry {a}")

    @property
    def signature(self):
        return tuple(r.arity for r in self.relations)

    def similar(self, other):
        return self.signature == other.signature

    def relation(self, name):
        for rel in self.relations:
            if rel.name == name:
                return rel
        raise KeyError(name)

    def induced(self, elements, name=None):
        """Induced substructure on ``elements``, relabelled 0..m-1 in ascending order."""
        elements = sorted(elements)
        index = {a: i for i, a in enumerate(elements)}
        rels = []
        for rel in self.relations:
            tuples = [tuple(index[a] for a in t) for t in rel.tuples if all(a in index for a in t)]
            rels.append(Relation(rel.name, rel.arity, tuples))
        return RelationalStructure(name or self.name, len(elements), rels)


def structure(name, size, relations):
    """Convenience constructor: ``relations`` is a list of ``(name, arity, tuples)``."""
    return RelationalStructure(name, size, [Relation(n, k, t) for n, k, t in relations])


# --- text format -----------------------------------------------------------


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"expected integer {what}, got {tok!r}", lineno) from None


def parse_structures(text):
    """Parse every ``structure ... endstructure`` block in ``text``."""
    lines = list(_content_lines(text))
    out = []
    i = 0
    while i < len(lines):
        s, i = _parse_block(lines, i)
        out.append(s)
    return out


def parse_structure(text):
    structures = parse_structures(text)
    if len(structures) != 1:
        raise FormatError(f"expected exactly one structure, found {len(structures)}")
    return structures[0]


def _parse_block(lines, i):
    def take():
        nonlocal i
        if i >= len(lines):
            last = lines[-1][0] if lines else None
            raise FormatError("unexpected end of input", last)
        item = lines[i]
        i += 1
        return item

    lineno, toks = take()
    if toks[0] != "structure" or len(toks) != 2:
        raise FormatError("expected 'structure <name>'", lineno)
    name = toks[1]
    lineno, toks = take()
    if toks[0] != "domain" or len(toks) != 2:
        raise FormatError("expected 'domain <n>'", lineno)
    n = _int(toks[1], lineno, "domain size")
    if n < 1:
        raise FormatError("domain size must be positive", lineno)
    relations = []
    names = set()
    while True:
        lineno, toks = take()
        if toks[0] == "endstructure":
            if len(toks) != 1:
                raise FormatError("unexpected tokens after 'endstructure'", lineno)
            break
        if toks[0] != "relation" or len(toks) != 3:
            raise FormatError("expected 'relation <name> <arity>' or 'endstructure'", lineno)
        rname = toks[1]
        if rname in names:
            raise FormatError(f"duplicate relation name {rname!r}", lineno)
        names.add(rname)
        arity = _int(toks[2], lineno, "arity")
        if arity < 1:
            raise FormatError("arity must be positive", lineno)
        tuples = set()
        while True:
            lineno, toks = take()
            if toks == ["end"]:
                break
            if len(toks) != arity:
                raise FormatError(
                    f"arity mismatch: relation {rname} has arity {arity}, tuple has {len(toks)} entries",
                    lineno,
                )
            t = tuple(_int(x, lineno, "tuple entry") for x in toks)
            for a in t:
                if not 0 <= a < n:
                    raise FormatError(f"out-of-range entry {a} (domain {n})", lineno)
            if t in tuples:
                raise FormatError(f"duplicate tuple {' '.join(toks)}", lineno)
            tuples.add(t)
        relations.append(Relation(rname, arity, tuples))
    return RelationalStructure(name, n, relations), i


def serialize_structure(s):
    lines = [f"structure {s.name}", f"domain {s.size}"]
    for rel in s.relations:
        lines.append(f"relation {rel.name} {rel.arity}")
        lines.extend(" ".join(map(str, t)) for t in rel.sorted_tuples())
        lines.append("end")
    lines.append("endstructure")
    return "\n".join(lines) + "\n"


# --- constructions ---------------------------------------------------------


def product(a, b):
    """Direct product; the pair (g, h) is encoded as ``g * b.size + h``."""
    if not a.similar(b):
        raise ValueError("product of dissimilar structures")
    m = b.size
    rels = []
    for ra, rb in zip(a.relations, b.relations):
        tuples = [
            tuple(g * m + h for g, h in zip(ta, tb)) for ta in ra.tuples for tb in rb.tuples
        ]
        rels.append(Relation(ra.name, ra.arity, tuples))
    return RelationalStructure(f"{a.name}x{b.name}", a.size * b.size, rels)


def subset_elements(mask):
    return list(engine.bits(mask))


def power_relation(tuples, arity):
    """The relation induced on tuples of nonempty subsets (bitmask encoded).

    ``(X1..Xk)`` belongs iff every ``a`` in every ``Xi`` is the i-th entry of
    some tuple of ``tuples`` lying in ``X1 x ... x Xk``. These are exactly the
    coordinatewise projections of nonempty subsets of ``tuples``, so the
    relation is the closure of the singleton tuples under coordinatewise union.
    """
    gens = [tuple(1 << a for a in t) for t in tuples]
    seen = set(gens)
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(p | q for p, q in zip(x, g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def power_structure(h):
    """Structure on the 2^n - 1 nonempty subsets; element ``m - 1`` is bitmask ``m``."""
    rels = []
    for rel in h.relations:
        masks = power_relation(rel.tuples, rel.arity)
        rels.append(Relation(rel.name, rel.arity, [tuple(x - 1 for x in t) for t in masks]))
    return RelationalStructure(f"P({h.name})", 2**h.size - 1, rels)


def _check_map(f, g, h):
    if len(f) != g.size:
        raise ValueError(f"map has {len(f)} entries, source domain has {g.size}")
    if any(not 0 <= v < h.size for v in f):
        raise ValueError("map value outside target domain")


def is_homomorphism(f, g, h):
    """True iff the map ``f`` (sequence indexed by elements of g) is a homomorphism g -> h."""
    if not g.similar(h):
        raise ValueError("structures are not similar")
    _check_map(f, g, h)
    for rg, rh in zip(g.relations, h.relations):
        target = rh.tuples
        for t in rg.tuples:
            if tuple(f[a] for a in t) not in target:
                return False
    return True


def hom_constraints(g, h):
    """Table constraints whose solutions are the homomorphisms g -> h."""
    cons = []
    for rg, rh in zip(g.relations, h.relations):
        for t in rg.tuples:
            cons.append((t, rh.tuples))
    return cons


def find_homomorphism(g, h, pins=None, budget=engine.DEFAULT_BUDGET):
    """Return a homomorphism g -> h extending ``pins`` as a tuple, or None.

    Variables are taken in ascending order and values ascending, with GAC
    after every assignment. Raises BudgetExhausted if the budget runs out.
    """
    if not g.similar(h):
        raise ValueError("structures are not similar")
    pins = dict(pins or {})
    for v, a in pins.items():
        if not 0 <= v < g.size:
            raise ValueError(f"pinned element {v} outside source domain")
        if not 0 <= a < h.size:
            raise ValueError(f"pin value {a} outside target domain")
    full = (1 << h.size) - 1
    sol = engine.solve([full] * g.size, hom_constraints(g, h), budget, pins=sorted(pins.items()))
    return None if sol is None else tuple(sol)


def endomorphisms(h, budget=engine.DEFAULT_BUDGET):
    """Yield every endomorphism of h in search order."""
    full = (1 << h.size) - 1
    search = engine.Search(engine.Problem([full] * h.size, hom_constraints(h, h)), budget)
    for sol in search.solutions():
        yield tuple(sol)


class Core(NamedTuple):
    structure: RelationalStructure
    retraction: tuple  # endomorphism of the input, identity on ``elements``
    elements: tuple  # input elements forming the core, ascending

    @property
    def proper(self):
        return len(self.elements) < len(self.retraction)


def compute_core(h, budget=engine.DEFAULT_BUDGET):
    """Retract ``h`` onto a core.

    Repeatedly looks for an endomorphism avoiding one element of the current
    image (candidates tried from the highest element down); when none exists
    the current image is a core. The accumulated map is then composed with
    the inverse of its action on the core so that it fixes the core pointwise.
    """
    current = list(range(h.size))
    total = list(range(h.size))
    sub = h
    while len(current) > 1:
        found = None
        for drop in reversed(range(len(current))):
            keep = [i for i in range(len(current)) if i != drop]
            target = sub.induced(keep)
            f = find_homomorphism(sub, target, budget=budget)
            if f is not None:
                found = [keep[v] for v in f]
                break
        if found is None:
            break
        image = sorted(set(found))
        relabel = {a: i for i, a in enumerate(image)}
        total = [relabel[found[total[x]]] for x in range(h.size)]
        current = [current[a] for a in image]
        sub = sub.induced(image)
    # ``total`` maps into positions of ``current``; act on the core is a permutation
    sigma = [total[c] for c in current]
    inverse = [0] * len(sigma)
    for i, s in enumerate(sigma):
        inverse[s] = i
    retraction = tuple(current[inverse[total[x]]] for x in range(h.size))
    core = h.induced(current, name=f"core({h.name})")
    return Core(core, retraction, tuple(current))


def _unary_extension(h, masks, tag):
    existing = {
        frozenset(rel.tuples) for rel in h.relations if rel.arity == 1
    }
    names = {rel.name for rel in h.relations}
    rels = list(h.relations)
    for m in masks:
        tuples = frozenset((a,) for a in engine.bits(m))
        if tuples in existing:
            continue
        existing.add(tuples)
        name = f"{tag}{m}"
        while name in names:
            name = "_" + name
        names.add(name)
        rels.append(Relation(name, 1, tuples))
    return RelationalStructure(h.name, h.size, rels)


def expand_with_constants(h):
    """Append the singleton unary relations {0}, ..., {n-1} not already present."""
    return _unary_extension(h, [1 << a for a in range(h.size)], "C")


def conservative_expansion(h):
    """Append every nonempty subset as a unary relation, in bitmask order."""
    return _unary_extension(h, range(1, 2**h.size), "U")


# --- set functions ---------------------------------------------------------


@dataclass(frozen=True)
class SetFunction:
    """Map from nonempty subsets (bitmask ``m``, stored at index ``m - 1``) to elements."""

    size: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != 2**self.size - 1:
            raise ValueError("set function must list a value for every nonempty subset")
        if any(not 0 <= v < self.size for v in self.values):
            raise ValueError("set function value out of range")

    def __call__(self, elements):
        mask = 0
        for a in elements:
            mask |= 1 << a
        return self.values[mask - 1]


def is_set_polymorphism(f, h):
    if f.size != h.size:
        raise ValueError("set function and structure have different domain sizes")
    return is_homomorphism(f.values, power_structure(h), h)


def serialize_set_function(f):
    return "\n".join([f"setfunction domain {f.size}", *map(str, f.values), "end"]) + "\n"


def parse_set_function(text):
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError("empty input")
    lineno, toks = lines[0]
    if len(toks) != 3 or toks[:2] != ["setfunction", "domain"]:
        raise FormatError("expected 'setfunction domain <n>'", lineno)
    n = _int(toks[2], lineno, "domain size")
    body = lines[1:]
    if not body or body[-1][1] != ["end"]:
        raise FormatError("missing 'end'", lines[-1][0])
    body = body[:-1]
    if len(body) != 2**n - 1:
        raise FormatError(f"expected {2**n - 1} values, found {len(body)}", lineno)
    values = []
    for lineno, toks in body:
        if len(toks) != 1:
            raise FormatError("expected one value per line", lineno)
        v = _int(toks[0], lineno, "value")
        if not 0 <= v < n:
            raise FormatError(f"out-of-range entry {v}", lineno)
        values.append(v)
    return SetFunction(n, values)
