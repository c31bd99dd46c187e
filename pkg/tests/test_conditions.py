from itertools import product as cartesian

import pytest

from polymeta.conditions import (
    Identity,
    MaltsevCondition,
    OperationTable,
    Symbol,
    Term,
    is_height1,
    is_idempotent_condition,
    is_nontrivial,
    named_condition,
    parse_condition,
    parse_tables,
    projection,
    quasi_transform,
    satisfies_identities,
    serialize_condition,
    serialize_table,
)
from polymeta.errors import FormatError

MAX2 = OperationTable.from_function(2, 2, max)
XOR3 = OperationTable.from_function(3, 2, lambda a, b, c: a ^ b ^ c)


def test_evaluate():
    assert MAX2(0, 1) == 1
    assert XOR3(1, 1, 0) == 0
    assert all(MAX2(a, a) == a for a in range(2))


def test_satisfies_examples():
    assert satisfies_identities({"f": MAX2}, named_condition("cyclic", 2))
    assert not satisfies_identities({"f": projection(2, 2, 0)}, named_condition("cyclic", 2))
    assert satisfies_identities({"f": XOR3}, named_condition("maltsev"))


def test_quasi_transform_examples():
    q = quasi_transform(named_condition("maltsev"))
    assert [str(e) for e in q.identities] == ["f(y,y,x) = f(x,x,x)", "f(x,y,y) = f(x,x,x)"]
    c2 = named_condition("cyclic", 2)
    assert quasi_transform(c2).identities == c2.identities
    nu = quasi_transform(named_condition("nu", 3))
    assert all(e.rhs == Term("f", ("x", "x", "x")) for e in nu.identities)
    assert quasi_transform(q) == q


def test_height1_examples():
    assert is_height1(named_condition("cyclic", 2))
    assert not is_height1(named_condition("maltsev"))
    for name in ("maltsev", "siggers", "majority"):
        assert is_height1(quasi_transform(named_condition(name)))


def test_nontrivial_examples():
    assert is_nontrivial(named_condition("cyclic", 2))
    trivial = MaltsevCondition("t", [Symbol("f", 2)], [Identity(Term("f", ("x", "y")), Term("f", ("x", "y")))])
    assert not is_nontrivial(trivial)
    assert is_nontrivial(named_condition("maltsev"))


@pytest.mark.parametrize(
    "name, k",
    [("cyclic", 2), ("cyclic", 3), ("cyclic", 4), ("symmetric", 3), ("ts", 2), ("ts", 3),
     ("quasi-nu", 3), ("quasi-maltsev", None), ("quasi-siggers", None), ("bw", None)],
)
def test_catalog_nontrivial(name, k):
    assert is_nontrivial(named_condition(name, k))


def test_idempotent_condition_examples():
    assert is_idempotent_condition(named_condition("maltsev"))
    assert not is_idempotent_condition(named_condition("cyclic", 2))
    assert not is_idempotent_condition(named_condition("bw"))
    assert is_idempotent_condition(named_condition("idempotent-bw"))


def test_catalog_shapes():
    m = named_condition("maltsev")
    assert len(m.identities) == 2 and m.symbols == (Symbol("f", 3),)
    s = named_condition("siggers")
    assert "f(a,r,e,a) = f(r,a,r,e)" in [str(e) for e in s.identities]
    assert any(not e.height1 for e in s.identities)
    bw = named_condition("bw")
    assert len(bw.identities) == 6
    assert {(x.name, x.arity) for x in bw.symbols} == {("v", 3), ("w", 4)}


def _all_tables(k, n):
    for vals in cartesian(range(n), repeat=n**k):
        yield OperationTable(k, n, vals)


def _ts_semantic(t):
    n, k = t.size, t.arity
    by_set = {}
    for args in cartesian(range(n), repeat=k):
        if by_set.setdefault(frozenset(args), t(*args)) != t(*args):
            return False
    return True


@pytest.mark.parametrize("k, n", [(2, 2), (2, 3), (3, 2), (4, 2)])
def test_ts_presentation_is_exact(k, n):
    # the finite presentation holds exactly for operations depending only on the argument set
    m = named_condition("ts", k)
    for t in _all_tables(k, n):
        assert satisfies_identities({"f": t}, m) == _ts_semantic(t)


def test_binary_ts_symmetric_cyclic_coincide():
    names = [named_condition(x, 2) for x in ("ts", "symmetric", "cyclic")]
    for t in _all_tables(2, 2):
        verdicts = {satisfies_identities({"f": t}, m) for m in names}
        assert len(verdicts) == 1


def test_quasi_equivalent_on_idempotent_tables():
    for name in ("maltsev", "majority"):
        m = named_condition(name)
        q = quasi_transform(m)
        for t in _all_tables(3, 2):
            if t.is_idempotent():
                assert satisfies_identities({"f": t}, m) == satisfies_identities({"f": t}, q)


def test_condition_roundtrip():
    for name, k in (("maltsev", None), ("bw", None), ("ts", 3), ("siggers", None)):
        m = named_condition(name, k)
        assert parse_condition(serialize_condition(m)) == m


def test_condition_chain_syntax():
    text = "condition m\nsymbol f 3\nidentity f(y,y,x) = f(x,y,y) = x\nendcondition\n"
    m = parse_condition(text)
    assert len(m.identities) == 2
    assert satisfies_identities({"f": XOR3}, m)


def test_condition_errors():
    with pytest.raises(FormatError):
        parse_condition("condition m\nsymbol f 2\nidentity f(x,y)\nendcondition\n")
    with pytest.raises(FormatError):
        parse_condition("condition m\nsymbol f 2\nidentity g(x,y) = x\nendcondition\n")


def test_table_roundtrip():
    text = serialize_table("f", XOR3)
    assert parse_tables(text) == {"f": XOR3}
    with pytest.raises(FormatError):
        parse_tables("operation f arity 2 domain 2\n0\n1\nend\n")
