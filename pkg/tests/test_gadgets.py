import random
from itertools import combinations

import pytest

from polymeta.conditions import named_condition, satisfies_identities
from polymeta.conservative import Digraph, cc_decide, scc_criterion, triple_digraph
from polymeta.errors import FormatError
from polymeta.gadgets import (
    Graph,
    TripleSet,
    betweenness_solve,
    betweenness_structure,
    connected_graphs,
    cycle_structure,
    nl_gadget,
    parse_digraph,
    parse_graph,
    parse_triples,
    prime_cycle_table,
    prime_cycle_ts,
    same_strong_component,
    serialize_digraph_input,
    serialize_graph,
    three_col_gadget,
    three_colorable,
    triple_structure,
)
from polymeta.metaquestion import decide_semilattice, indicator_instance, is_polymorphism
from polymeta.structures import compute_core, find_homomorphism
from zoo import betweenness_brute, digraphs, strongly_connected, three_colorable_brute

EDGE = Graph.of(2, [(0, 1)])
TRI = Graph.of(3, [(0, 1), (1, 2), (0, 2)])
K4G = Graph.of(4, list(combinations(range(4), 2)))
C5 = Graph.of(5, [(i, (i + 1) % 5) for i in range(5)])


def test_three_col_gadget_shapes():
    s = three_col_gadget(EDGE)
    assert s.size == 6 and len(s.relations) == 1 and len(s.relations[0].tuples) == 6
    assert (0, 4) in s.relations[0].tuples and (0, 3) not in s.relations[0].tuples
    s = three_col_gadget(TRI)
    assert s.size == 9 and len(s.relations) == 3
    assert compute_core(s).proper
    s = three_col_gadget(K4G)
    assert s.size == 12 and len(s.relations) == 6
    assert not compute_core(s).proper


def test_three_col_gadget_rejects():
    with pytest.raises(ValueError):
        three_col_gadget(Graph.of(3, [(0, 1)]))
    with pytest.raises(ValueError):
        three_col_gadget(Graph.of(1, []))


def test_three_colorable():
    assert three_colorable(TRI)
    assert not three_colorable(K4G)
    assert three_colorable(C5)
    for g in connected_graphs(4):
        assert three_colorable(g) == three_colorable_brute(g)


def test_betweenness_structure_shape():
    s = betweenness_structure(TripleSet(3, ((0, 1, 2),)))
    assert [r.arity for r in s.relations] == [1] * 6 + [2]
    assert [r.tuples for r in s.relations[:6]] == [{(0,)}, {(1,)}, {(0,), (1,)}, {(2,)}, {(0,), (2,)}, {(1,), (2,)}]
    assert s.relations[-1].tuples == {(0, 1), (1, 2)}


def test_betweenness_examples():
    one = TripleSet(3, ((0, 1, 2),))
    assert betweenness_solve(one) == (0, 1, 2)
    assert decide_semilattice(betweenness_structure(one), conservative=True) is not None
    bad = TripleSet(3, ((0, 1, 2), (1, 0, 2)))
    assert betweenness_solve(bad) is None
    assert decide_semilattice(betweenness_structure(bad), conservative=True) is None
    assert betweenness_solve(TripleSet(4, ((0, 1, 2), (1, 2, 3)))) == (0, 1, 2, 3)


def test_betweenness_solve_vs_permutations():
    rng = random.Random(1)
    for _ in range(150):
        n = rng.randint(3, 6)
        triples = tuple(tuple(rng.sample(range(n), 3)) for _ in range(rng.randint(1, 6)))
        got = betweenness_solve(TripleSet(n, triples))
        assert (got is None) == (betweenness_brute(n, triples) is None)


def test_triple_structure():
    s = triple_structure(TripleSet(3, ((0, 1, 2),)))
    assert len(s.relations) == 1 and s.relations[0].tuples == {(0, 1), (1, 1), (1, 2)}
    assert cc_decide(s) is not None
    rng = random.Random(2)
    for _ in range(30):
        ts = TripleSet(5, tuple(tuple(rng.sample(range(5), 3)) for _ in range(4)))
        pairs = {t for r in triple_structure(ts).relations for t in r.tuples if t[0] != t[1]}
        pairs |= {(b, a) for a, b in pairs}
        assert set(triple_digraph(ts.triples).vertices) == pairs


def test_nl_gadget_examples():
    ts, s = nl_gadget(Digraph((0, 1), ((0, 1), (1, 0))), 0, 1)
    assert s.size == 8 and len(s.relations) == 14
    assert all(len(r.tuples) == 3 for r in s.relations)
    assert cc_decide(s) is None
    ts, s = nl_gadget(Digraph((0, 1), ((0, 1),)), 0, 1)
    assert cc_decide(s) is not None


def test_nl_gadget_layout():
    ts, _ = nl_gadget(Digraph((0, 1, 2), ((1, 2), (0, 1))), 0, 2)
    # arcs sorted: (0,1) -> element 6, (1,2) -> element 7; then a = 8, b = 9
    assert ts.n == 10
    assert ts.triples[:3] == ((0, 1, 6), (1, 6, 2), (6, 2, 3))
    assert ts.triples[6] == (8, 9, 0)


def test_nl_gadget_rejects():
    with pytest.raises(ValueError):
        nl_gadget(Digraph((0, 1, 2), ((0, 1),)), 0, 1)
    with pytest.raises(ValueError):
        nl_gadget(Digraph((0, 1), ((0, 1),)), 0, 0)


def test_nl_gadget_strong_components():
    for m in (2, 3):
        for k in digraphs(m):
            for s in range(m):
                for t in range(m):
                    if s != t:
                        ts, _ = nl_gadget(k, s, t)
                        together = strongly_connected(m, k.arcs, s, t)
                        assert same_strong_component(k, s, t) == together
                        assert scc_criterion(triple_digraph(ts.triples)) == (not together)


def test_cycle_structure():
    assert len(cycle_structure(3).relations[0].tuples) == 3
    assert len(cycle_structure(5).relations[0].tuples) == 5
    assert find_homomorphism(cycle_structure(3), cycle_structure(3), {0: 0}) == (0, 1, 2)
    with pytest.raises(ValueError):
        cycle_structure(1)


def test_prime_cycle_ts():
    assert prime_cycle_ts(5, 3, (1, 1, 4)) == 0
    assert all(prime_cycle_ts(5, 2, (x, x)) == x for x in range(5))
    t = prime_cycle_table(5, 2)
    assert is_polymorphism(t, cycle_structure(5))
    assert satisfies_identities({"f": t}, named_condition("ts", 2))
    with pytest.raises(ValueError):
        prime_cycle_ts(5, 5, (0,) * 5)
    with pytest.raises(ValueError):
        prime_cycle_ts(4, 2, (0, 1))


def test_cyclic_class_count_p3():
    assert indicator_instance(cycle_structure(3), named_condition("cyclic", 3)).instance.variables == 11


def test_file_formats():
    g = parse_graph("graph 3\nedge 0 1\nedge 2 1\n")
    assert g == Graph.of(3, [(0, 1), (1, 2)])
    assert parse_graph(serialize_graph(g)) == g
    with pytest.raises(FormatError):
        parse_graph("graph 2\nedge 0 0\n")
    k, s, t = parse_digraph("digraph 2\narc 0 1\narc 1 0\nmark 0 1\n")
    assert k.arcs == ((0, 1), (1, 0)) and (s, t) == (0, 1)
    assert parse_digraph(serialize_digraph_input(k, s, t)) == (k, s, t)
    with pytest.raises(FormatError):
        parse_digraph("digraph 2\narc 0 5\n")
    ts = parse_triples("0 1 2\n1 2 3\n")
    assert ts.n == 4 and ts.triples == ((0, 1, 2), (1, 2, 3))
    with pytest.raises(FormatError):
        parse_triples("0 0 1\n")
