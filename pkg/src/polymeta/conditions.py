"""Linear identities, strong linear Maltsev conditions and operation tables."""

import re
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Optional, Union

from .errors import FormatError


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int


@dataclass(frozen=True)
class Term:
    symbol: str
    args: tuple

    def __str__(self):
        return f"{self.symbol}({','.join(self.args)})"


@dataclass(frozen=True)
class Identity:
    """``lhs ≈ rhs`` where ``rhs`` is a Term or a bare variable name."""

    lhs: Term
    rhs: Union[Term, str]

    @property
    def height1(self):
        return isinstance(self.rhs, Term)

    def variables(self):
        names = list(self.lhs.args)
        names += self.rhs.args if self.height1 else [self.rhs]
        return sorted(set(names), key=names.index)

    def __str__(self):
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class MaltsevCondition:
    name: str
    symbols: tuple
    identities: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "identities", tuple(self.identities))
        arity = {}
        for s in self.symbols:
            if s.name in arity:
                raise ValueError(f"duplicate symbol {s.name!r}")
            if s.arity < 1:
                raise ValueError(f"symbol {s.name!r} needs positive arity")
            arity[s.name] = s.arity
        if not self.symbols:
            raise ValueError("condition declares no symbols")
        for e in self.identities:
            terms = [e.lhs] + ([e.rhs] if e.height1 else [])
            for t in terms:
                if t.symbol not in arity:
                    raise ValueError(f"undeclared symbol {t.symbol!r} in {e}")
                if len(t.args) != arity[t.symbol]:
                    raise ValueError(f"arity mismatch in {e}")

    def arity(self, name):
        for s in self.symbols:
            if s.name == name:
                return s.arity
        raise KeyError(name)

    def with_identities(self, extra, name=None):
        return MaltsevCondition(name or self.name, self.symbols, self.identities + tuple(extra))


# --- operation tables ------------------------------------------------------


@dataclass(frozen=True)
class OperationTable:
    """k-ary operation on {0..n-1}; ``values[j]`` with j = sum a_i n^(k-i)."""

    arity: int
    size: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.size**self.arity:
            raise ValueError("table length must be n^k")
        if any(not 0 <= v < self.size for v in self.values):
            raise ValueError("table value out of range")

    def index(self, args):
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} arguments, got {len(args)}")
        j = 0
        for a in args:
            if not 0 <= a < self.size:
                raise ValueError(f"argument {a} out of range")
            j = j * self.size + a
        return j

    def __call__(self, *args):
        return self.values[self.index(args)]

    @classmethod
    def from_function(cls, arity, size, fn):
        return cls(arity, size, [fn(*args) for args in cartesian(range(size), repeat=arity)])

    def is_idempotent(self):
        return all(self(*([a] * self.arity)) == a for a in range(self.size))

    def is_conservative(self):
        return all(
            v in args for args, v in zip(cartesian(range(self.size), repeat=self.arity), self.values)
        )


def evaluate(table, args):
    return table(*args)


def projection(arity, size, i):
    return OperationTable.from_function(arity, size, lambda *xs: xs[i])


def serialize_table(name, table):
    head = f"operation {name} arity {table.arity} domain {table.size}"
    return "\n".join([head, *map(str, table.values), "end"]) + "\n"


def parse_tables(text):
    """Parse a sequence of operation blocks into a dict name -> OperationTable."""
    out = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if current is None:
            if len(toks) != 6 or toks[0] != "operation" or toks[2] != "arity" or toks[4] != "domain":
                raise FormatError("expected 'operation <name> arity <k> domain <n>'", lineno)
            try:
                k, n = int(toks[3]), int(toks[5])
            except ValueError:
                raise FormatError("arity and domain must be integers", lineno) from None
            if toks[1] in out:
                raise FormatError(f"duplicate operation {toks[1]!r}", lineno)
            current = (toks[1], k, n, [], lineno)
        elif toks == ["end"]:
            name, k, n, values, start = current
            if len(values) != n**k:
                raise FormatError(f"operation {name}: expected {n**k} values, found {len(values)}", lineno)
            out[name] = OperationTable(k, n, values)
            current = None
        else:
            name, k, n, values, _ = current
            if len(toks) != 1:
                raise FormatError("expected one value per line", lineno)
            try:
                v = int(toks[0])
            except ValueError:
                raise FormatError(f"expected integer value, got {toks[0]!r}", lineno) from None
            if not 0 <= v < n:
                raise FormatError(f"out-of-range entry {v}", lineno)
            values.append(v)
    if current is not None:
        raise FormatError(f"operation {current[0]}: missing 'end'", current[4])
    return out


# --- satisfaction ----------------------------------------------------------


def _check_binding(ops, m):
    size = None
    for s in m.symbols:
        if s.name not in ops:
            raise ValueError(f"symbol {s.name!r} is not bound to a table")
        t = ops[s.name]
        if t.arity != s.arity:
            raise ValueError(f"symbol {s.name!r} has arity {s.arity}, table has {t.arity}")
        if size is None:
            size = t.size
        elif t.size != size:
            raise ValueError("tables have different domain sizes")
    return size


def identity_failure(ops, identity, size):
    """Return a violating assignment (dict) for ``identity``, or None if it holds."""
    names = identity.variables()
    lhs_t = ops[identity.lhs.symbol]
    lpos = [names.index(x) for x in identity.lhs.args]
    if identity.height1:
        rhs_t = ops[identity.rhs.symbol]
        rpos = [names.index(x) for x in identity.rhs.args]
    else:
        vpos = names.index(identity.rhs)
    for vals in cartesian(range(size), repeat=len(names)):
        left = lhs_t.values[_flat(vals, lpos, size)]
        if identity.height1:
            right = rhs_t.values[_flat(vals, rpos, size)]
        else:
            right = vals[vpos]
        if left != right:
            return dict(zip(names, vals))
    return None


def _flat(vals, positions, size):
    j = 0
    for p in positions:
        j = j * size + vals[p]
    return j


def satisfies_identities(ops, m):
    """True iff the tables in ``ops`` (symbol name -> table) satisfy every identity of ``m``."""
    size = _check_binding(ops, m)
    return all(identity_failure(ops, e, size) is None for e in m.identities)


# --- syntactic properties --------------------------------------------------


def quasi_transform(m):
    """Replace each ``f(x..) ≈ y`` by ``f(x..) ≈ f(y,..,y)``."""
    out = []
    for e in m.identities:
        if e.height1:
            out.append(e)
        else:
            k = len(e.lhs.args)
            out.append(Identity(e.lhs, Term(e.lhs.symbol, (e.rhs,) * k)))
    name = m.name if m.name.startswith("quasi-") else f"quasi-{m.name}"
    return MaltsevCondition(name, m.symbols, out)


def is_height1(m):
    return all(e.height1 for e in m.identities)


def is_nontrivial(m):
    """True iff no choice of projections on a 2-element set satisfies ``m``."""
    choices = [range(s.arity) for s in m.symbols]
    for pick in cartesian(*choices):
        ops = {s.name: projection(s.arity, 2, i) for s, i in zip(m.symbols, pick)}
        if satisfies_identities(ops, m):
            return False
    return True


def is_idempotent_condition(m):
    """Syntactic idempotence check.

    Every identity is instantiated with all variables equal. A symbol counts
    as idempotent when it is linked through such instances of height-1
    identities to a symbol that has a bare-variable identity.
    """
    parent = {s.name: s.name for s in m.symbols}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    grounded = set()
    for e in m.identities:
        if e.height1:
            parent[find(e.lhs.symbol)] = find(e.rhs.symbol)
        else:
            grounded.add(e.lhs.symbol)
    roots = {find(g) for g in grounded}
    return all(find(s.name) in roots for s in m.symbols)


def idempotence_identities(m):
    out = []
    for s in m.symbols:
        out.append(Identity(Term(s.name, ("x",) * s.arity), "x"))
    return out


# --- catalog ---------------------------------------------------------------


def _xs(k):
    return tuple(f"x{i}" for i in range(1, k + 1))


def cyclic(k, sym="f"):
    x = _xs(k)
    e = Identity(Term(sym, x), Term(sym, (x[-1],) + x[:-1]))
    return MaltsevCondition(f"cyclic-{k}", [Symbol(sym, k)], [e])


def symmetric(k, sym="f"):
    x = _xs(k)
    ids = []
    for i in range(k - 1):
        y = list(x)
        y[i], y[i + 1] = y[i + 1], y[i]
        ids.append(Identity(Term(sym, x), Term(sym, tuple(y))))
    return MaltsevCondition(f"symmetric-{k}", [Symbol(sym, k)], ids)


def totally_symmetric(k, sym="f"):
    """Symmetric identities plus one duplication identity per ordered pair (i, j).

    The duplication identity equates ``x`` with ``x_j`` replaced by ``x_i``
    against the sorted pattern on the same variables with the smallest one
    doubled. Together with the symmetric identities these force the value to
    depend only on the set of arguments.
    """
    x = _xs(k)
    ids = list(symmetric(k, sym).identities)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            pattern = list(x)
            pattern[j] = x[i]
            support = [v for v in x if v in pattern]
            canon = (support[0],) + tuple(support)
            if tuple(pattern) != canon:
                ids.append(Identity(Term(sym, tuple(pattern)), Term(sym, canon)))
    return MaltsevCondition(f"ts-{k}", [Symbol(sym, k)], ids)


def near_unanimity(k, sym="f"):
    if k < 3:
        raise ValueError("near-unanimity needs arity at least 3")
    ids = []
    for i in range(k):
        args = ["x"] * k
        args[i] = "y"
        ids.append(Identity(Term(sym, tuple(args)), "x"))
    return MaltsevCondition(f"nu-{k}", [Symbol(sym, k)], ids)


def maltsev(sym="f"):
    ids = [
        Identity(Term(sym, ("y", "y", "x")), "x"),
        Identity(Term(sym, ("x", "y", "y")), "x"),
    ]
    return MaltsevCondition("maltsev", [Symbol(sym, 3)], ids)


def siggers(sym="f"):
    ids = [
        Identity(Term(sym, ("x",) * 4), "x"),
        Identity(Term(sym, ("a", "r", "e", "a")), Term(sym, ("r", "a", "r", "e"))),
    ]
    return MaltsevCondition("siggers", [Symbol(sym, 4)], ids)


def bounded_width_condition():
    v = lambda *a: Term("v", a)
    w = lambda *a: Term("w", a)
    ids = [
        Identity(v("y", "x", "x"), w("y", "x", "x", "x")),
        Identity(v("y", "x", "x"), v("x", "y", "x")),
        Identity(v("x", "y", "x"), v("x", "x", "y")),
        Identity(w("y", "x", "x", "x"), w("x", "y", "x", "x")),
        Identity(w("x", "y", "x", "x"), w("x", "x", "y", "x")),
        Identity(w("x", "x", "y", "x"), w("x", "x", "x", "y")),
    ]
    return MaltsevCondition("bw", [Symbol("v", 3), Symbol("w", 4)], ids)


CATALOG = (
    "cyclic", "symmetric", "ts", "nu", "majority", "maltsev", "siggers", "bw",
    "quasi-nu", "quasi-majority", "quasi-maltsev", "quasi-siggers",
)
NEEDS_ARITY = {"cyclic", "symmetric", "ts", "nu"}


def named_condition(name, arity=None):
    """Look up a catalog condition; ``idempotent-<base>`` adds idempotence identities."""
    if name.startswith("idempotent-"):
        base = named_condition(name[len("idempotent-"):], arity)
        extra = [e for e in idempotence_identities(base) if e not in base.identities]
        return base.with_identities(extra, name=f"idempotent-{base.name}")
    if name.startswith("quasi-"):
        return quasi_transform(named_condition(name[len("quasi-"):], arity))
    if name in NEEDS_ARITY:
        if arity is None:
            raise ValueError(f"condition {name!r} needs an arity")
        if arity < 1:
            raise ValueError("arity must be positive")
        return {"cyclic": cyclic, "symmetric": symmetric, "ts": totally_symmetric, "nu": near_unanimity}[
            name
        ](arity)
    if name == "majority":
        return near_unanimity(3).with_identities([], name="majority")
    if name == "maltsev":
        return maltsev()
    if name == "siggers":
        return siggers()
    if name == "bw":
        return bounded_width_condition()
    raise ValueError(f"unknown condition {name!r}")


# --- condition file format -------------------------------------------------

_TERM = re.compile(r"^([A-Za-z_][\w-]*)\(([^()]*)\)$")
_VAR = re.compile(r"^[A-Za-z_]\w*$")


def _parse_side(text, lineno):
    text = text.replace(" ", "")
    m = _TERM.match(text)
    if m:
        args = tuple(a for a in m.group(2).split(","))
        if not all(_VAR.match(a) for a in args):
            raise FormatError(f"bad argument list in {text!r}", lineno)
        return Term(m.group(1), args)
    if _VAR.match(text):
        return text
    raise FormatError(f"cannot parse term {text!r}", lineno)


def parse_condition(text):
    name = None
    symbols = []
    identities = []
    done = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if done:
            raise FormatError("content after 'endcondition'", lineno)
        head, _, rest = line.partition(" ")
        if name is None:
            if head != "condition" or not rest.strip():
                raise FormatError("expected 'condition <name>'", lineno)
            name = rest.strip()
        elif head == "symbol":
            toks = rest.split()
            if len(toks) != 2:
                raise FormatError("expected 'symbol <name> <arity>'", lineno)
            try:
                symbols.append(Symbol(toks[0], int(toks[1])))
            except ValueError:
                raise FormatError("symbol arity must be an integer", lineno) from None
        elif head == "identity":
            sides = rest.split("=")
            if len(sides) < 2:
                raise FormatError("identity needs '='", lineno)
            terms = [_parse_side(s, lineno) for s in sides]
            # a chain a = b = c splits into consecutive pairs
            for left, right in zip(terms, terms[1:]):
                if not isinstance(left, Term):
                    left, right = right, left
                if not isinstance(left, Term):
                    raise FormatError("an identity needs an operation term", lineno)
                identities.append(Identity(left, right))
        elif head == "endcondition":
            done = True
        else:
            raise FormatError(f"unexpected line {line!r}", lineno)
    if name is None:
        raise FormatError("empty condition")
    if not done:
        raise FormatError("missing 'endcondition'")
    try:
        return MaltsevCondition(name, symbols, identities)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def serialize_condition(m):
    lines = [f"condition {m.name}"]
    lines += [f"symbol {s.name} {s.arity}" for s in m.symbols]
    lines += [f"identity {e}" for e in m.identities]
    lines.append("endcondition")
    return "\n".join(lines) + "\n"
