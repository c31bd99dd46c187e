"""Acceptance criteria, run at their stated scales and time limits.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL
line per criterion at the end of the session.
"""

import random
import time
from itertools import combinations, product as cartesian

import pytest

from polymeta.conditions import named_condition, quasi_transform, satisfies_identities
from polymeta.conservative import cc_decide, cc_decide_triples, choice_csp, is_conservative_commutative, is_majority_closed
from polymeta.errors import InconclusiveFixing
from polymeta.gadgets import (
    Graph,
    TripleSet,
    betweenness_solve,
    betweenness_structure,
    connected_graphs,
    cycle_structure,
    nl_gadget,
    prime_cycle_table,
    three_col_gadget,
    three_colorable,
    triple_structure,
)
from polymeta.metaquestion import (
    SearchFlags,
    brute_search_polymorphisms,
    decide_bounded_width,
    decide_condition,
    decide_semilattice,
    indicator_instance,
    indicator_is_empty,
    is_polymorphism,
    is_witness,
)
from polymeta.minimality import PairConsistency, kl_minimality, solve_by_fixing, verify_solution
from polymeta.structures import compute_core, is_set_polymorphism, structure
from zoo import (
    K2,
    K3,
    cc_tables_brute,
    chain,
    digraphs,
    random_digraph,
    random_loopless,
    random_structure,
    random_triples,
    strongly_connected,
    walk_triples,
)

SEED = 0


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def within(start, seconds):
    elapsed = time.time() - start
    assert elapsed < seconds, f"took {elapsed:.1f}s, limit {seconds}s"


@pytest.mark.criterion(1, "idempotent 3-TS: creation verdict = exact search verdict")
def test_criterion_1(request):
    start = time.time()
    rng = random.Random(SEED)
    m = named_condition("ts", 3)
    flags = SearchFlags(idempotent=True)
    cases = [structure(f"b{mask}", 2, [("R", 2, [t for i, t in enumerate(cartesian(range(2), repeat=2)) if mask >> i & 1])])
             for mask in range(16)]
    while len(cases) < 16 + 200:
        if len(cases) % 2:
            cases.append(random_structure(rng, 3, 2, 2))
        else:
            cases.append(random_loopless(rng, 3, rng.uniform(0.3, 0.8), symmetric=rng.random() < 0.5))
    positives = fallbacks = 0
    for h in cases:
        got = decide_condition(h, m, flags, "creation")
        ref = brute_search_polymorphisms(h, m, flags)
        assert (got is None) == (ref is None), h
        if got is not None:
            assert is_witness(h, m, got, flags)
            positives += 1
        try:
            solve_by_fixing(indicator_instance(h, m, flags).instance)
        except InconclusiveFixing:
            fallbacks += 1
    detail(request, f"{len(cases)} structures, {positives} positive, {fallbacks} needed exact fallback")
    within(start, 300)


@pytest.mark.criterion(2, "conservative commutative pipeline = exhaustive enumeration")
def test_criterion_2(request):
    start = time.time()
    rng = random.Random(SEED + 2)
    positives = 0
    for _ in range(120):
        h = random_structure(rng, rng.randint(2, 5), 3, 3, density=rng.choice([0.1, 0.2, 0.35, 0.5]))
        f = cc_decide(h)
        ref = next(iter(cc_tables_brute(h)), None)
        assert (f is None) == (ref is None), h
        if f is not None:
            positives += 1
            assert is_polymorphism(f, h) and is_conservative_commutative(f)
    detail(request, f"120 structures, {positives} positive")
    within(start, 300)


@pytest.mark.criterion(3, "every choice-CSP relation over {n,x} is majority-closed")
def test_criterion_3(request):
    rng = random.Random(SEED + 2)  # same corpus as criterion 2
    count = 0
    for _ in range(120):
        h = random_structure(rng, rng.randint(2, 5), 3, 3, density=rng.choice([0.1, 0.2, 0.35, 0.5]))
        for _, star in choice_csp(h).relations:
            assert is_majority_closed(star)
            count += 1
    detail(request, f"{count} relations checked")


@pytest.mark.criterion(4, "triple-digraph SCC criterion = conservative commutative verdict")
def test_criterion_4(request):
    start = time.time()
    rng = random.Random(SEED + 4)
    positives = 0
    for i in range(150):
        n = rng.randint(3, 6)
        if i % 2:
            triples = random_triples(rng, n, rng.randint(1, 7))
        else:
            n = max(n, 4)
            triples = sorted(set(walk_triples(rng, n, rng.randint(6, 12)) + random_triples(rng, n, rng.randint(2, 6))))
        a = cc_decide_triples(triples)
        b = cc_decide(triple_structure(TripleSet(n, tuple(triples)))) is not None
        assert a == b, triples
        positives += a
    detail(request, f"150 triple sets, {positives} positive")
    within(start, 120)


@pytest.mark.criterion(5, "3-colouring gadget: proper core / 2-cyclic iff 3-colourable")
def test_criterion_5(request):
    start = time.time()
    rng = random.Random(SEED + 5)
    graphs = [g for n in (3, 4, 5) for g in connected_graphs(n)]
    pairs = list(combinations(range(6), 2))
    sampled = 0
    while sampled < 25:
        g = Graph(6, frozenset(p for p in pairs if rng.random() < 0.55))
        if g.is_connected():
            graphs.append(g)
            sampled += 1
    colourable = 0
    for g in graphs:
        b = three_col_gadget(g)
        c = three_colorable(g)
        colourable += c
        assert compute_core(b).proper == c, g
        assert (brute_search_polymorphisms(b, named_condition("cyclic", 2)) is not None) == c, g
    detail(request, f"{len(graphs)} graphs, {colourable} 3-colourable")
    within(start, 600)


@pytest.mark.criterion(6, "betweenness: conservative semilattice iff ordering exists")
def test_criterion_6(request):
    start = time.time()
    rng = random.Random(SEED + 6)
    positives = 0
    for _ in range(150):
        n = rng.randint(3, 6)
        t = TripleSet(n, tuple(random_triples(rng, n, rng.randint(1, 6))))
        a = decide_semilattice(betweenness_structure(t), conservative=True) is not None
        b = betweenness_solve(t) is not None
        assert a == b, t
        positives += a
    detail(request, f"150 triple sets, {positives} orderable")
    within(start, 120)


@pytest.mark.criterion(7, "NL gadget: no cc polymorphism iff s,t strongly connected")
def test_criterion_7(request):
    start = time.time()
    rng = random.Random(SEED + 7)
    cases = []
    for m in (2, 3):
        for k in digraphs(m):
            cases += [(k, s, t) for s in range(m) for t in range(m) if s != t]
    for _ in range(30):
        k = random_digraph(rng, 4)
        s, t = rng.sample(range(4), 2)
        cases.append((k, s, t))
    together = 0
    for k, s, t in cases:
        _, h = nl_gadget(k, s, t)
        same = strongly_connected(len(k.vertices), k.arcs, s, t)
        together += same
        assert (cc_decide(h) is None) == same, (k, s, t)
    detail(request, f"{len(cases)} cases, {together} strongly connected")
    within(start, 300)


@pytest.mark.criterion(8, "prime cycles: TS polymorphisms below p, no 3-ary cyclic on C3")
def test_criterion_8(request):
    start = time.time()
    checked = 0
    for p in (3, 5):
        c = cycle_structure(p)
        for k in range(2, p):
            t = prime_cycle_table(p, k)
            assert satisfies_identities({"f": t}, named_condition("ts", k))
            assert is_polymorphism(t, c)
            checked += 1
    c3 = cycle_structure(3)
    m = named_condition("cyclic", 3)
    assert indicator_instance(c3, m).instance.variables == 11
    assert brute_search_polymorphisms(c3, m) is None
    detail(request, f"{checked} TS tables verified")
    within(start, 60)


@pytest.mark.criterion(9, "quasi-condition on H iff idempotent condition on the core")
def test_criterion_9(request):
    start = time.time()
    rng = random.Random(SEED + 9)
    counts = {"maltsev": 0, "majority": 0}
    for i in range(120):
        n = rng.randint(2, 4)
        if i % 2:
            h = random_structure(rng, n, 2, 2)
        else:
            # loopless relations keep cores nontrivial
            h = random_loopless(rng, n, rng.uniform(0.3, 0.8), symmetric=i % 4 == 0)
        core = compute_core(h).structure
        for name in counts:
            m = named_condition(name)
            a = brute_search_polymorphisms(h, quasi_transform(m)) is not None
            b = brute_search_polymorphisms(core, m, SearchFlags(idempotent=True)) is not None
            assert a == b, (name, h)
            counts[name] += a
    detail(request, f"120 structures, positives {counts}")
    within(start, 600)


@pytest.mark.criterion(10, "bounded-width trichotomy on the 3-chain, K2 and K3")
def test_criterion_10(request):
    start = time.time()
    r = decide_bounded_width(chain(3))
    assert r.verdict == "width1" and is_set_polymorphism(r.set_function, r.core.structure)
    r = decide_bounded_width(K2)
    assert r.verdict == "bounded23"
    assert is_witness(r.core.structure, named_condition("idempotent-bw"), r.tables)
    assert all(is_polymorphism(t, r.core.structure) for t in r.tables.values())
    r = decide_bounded_width(K3)
    assert r.verdict == "unbounded"
    assert indicator_is_empty(r.core.structure, named_condition("bw"), SearchFlags(idempotent=True))
    within(start, 120)


@pytest.mark.criterion(11, "minimality soundness on planted instances")
def test_criterion_11(request):
    from polymeta.minimality import Constraint, CspInstance

    start = time.time()
    rng = random.Random(SEED + 11)
    flagged = solved = 0
    for _ in range(600):
        V, n = rng.randint(1, 6), rng.randint(1, 3)
        planted = tuple(rng.randrange(n) for _ in range(V))
        cons = []
        for _ in range(rng.randint(1, 10)):
            ar = rng.randint(1, min(3, V))
            scope = rng.sample(range(V), ar)
            allt = list(cartesian(range(n), repeat=ar))
            allowed = set(rng.sample(allt, rng.randint(0, len(allt))))
            allowed.add(tuple(planted[v] for v in scope))
            cons.append(Constraint(scope, allowed))
        inst = CspInstance(V, n, cons)
        assert kl_minimality(inst, 2, 3) is not None
        try:
            sol = solve_by_fixing(inst, 2, 3)
        except InconclusiveFixing:
            flagged += 1
            continue
        assert sol is not None and verify_solution(inst, sol)
        solved += 1
    detail(request, f"600 instances, {solved} solved, {flagged} flagged inconclusive")
    within(start, 120)
