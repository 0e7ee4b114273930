import random

import pytest

from omqe import CI, RI, Conj, Database, Exists, Name, Reasoner, Role, Top, Unsatisfiable, parse_ontology
from omqe.horn import chase
from omqe.random_instances import random_database, random_omq, random_ontology
from omqe.syntax import parse_query
from omqe.umodel import (build_u_dq, build_universal, canonical_db_of_query, cl_q, functionality_violations,
                         trace_successors, tree_code, witness_decomposition)


def _neighbours(d: Database, role: Role, e: str) -> set[str]:
    if role.inverted:
        return {c for r, c, x in d.binary if r == role.name and x == e}
    return {x for r, c, x in d.binary if r == role.name and c == e}


def holds(d: Database, concept, e: str) -> bool:
    if isinstance(concept, Top):
        return True
    if isinstance(concept, Name):
        return concept.name in d.concepts_of(e)
    if isinstance(concept, Conj):
        return holds(d, concept.left, e) and holds(d, concept.right, e)
    if isinstance(concept, Exists):
        return any(holds(d, concept.filler, x) for x in _neighbours(d, concept.role, e))
    raise TypeError(concept)


def check_model(u) -> None:
    """Every axiom holds at every element strictly above the depth cut-off."""
    d = u.db
    assert not list(functionality_violations(u.reasoner, d))
    for ax in u.reasoner.ontology.axioms:
        if isinstance(ax, RI):
            for r, c, e in d.binary:
                for x, y in ((c, e), (e, c)):
                    if y in _neighbours(d, ax.sub, x):
                        assert y in _neighbours(d, ax.sup, x), (ax, x, y)
        if not isinstance(ax, CI):
            continue
        for e in d.adom():
            node = u.provenance.get(e)
            depth = node.depth if node is not None else 0
            if depth >= u.depth and isinstance(ax.rhs, Exists):
                continue
            if holds(d, ax.lhs, e):
                assert holds(d, ax.rhs, e), (str(ax), e)


def test_researcher_universal_model(researcher):
    reasoner, Q, d = researcher
    u = build_universal(reasoner, d, 1)
    (null,) = u.nulls
    assert u.db.has_binary("worksFor", "mary", null)
    assert {"University", "Academia"} <= u.db.concepts_of(null)
    assert u.trace_of(null) == [(frozenset({Role("worksFor")}), frozenset({"University", "Academia"}))]


def test_depth_zero_is_the_chase(factory_owned):
    reasoner, _, d = factory_owned
    u = build_universal(reasoner, d, 0)
    assert u.db.fact_set() == chase(reasoner, d).fact_set() and not u.nulls


def test_functional_edge_blocks_trace(factory_owned):
    """gigafactory1 already has its hasOwner successor, so no hasOwner trace starts there."""
    reasoner, _, d = factory_owned
    assert trace_successors(reasoner, chase(reasoner, d), "gigafactory1") == []
    u = build_universal(reasoner, d, 2)
    assert not any(c == "gigafactory1" for r, c, e in u.db.binary if r == "hasOwner" and e != "tesla")
    assert len([1 for r, c, _ in u.db.binary if r == "hasEmployee" and c == "tesla"]) == 1


def test_factory_gets_single_merged_owner(factory):
    reasoner, _, d = factory
    (step,) = trace_successors(reasoner, chase(reasoner, d), "gigafactory1")
    u = build_universal(reasoner, d, 2)
    owners = [e for r, c, e in u.db.binary if r == "hasOwner" and c == "gigafactory1"]
    assert len(owners) == 1
    assert {"CarCompany", "TechCompany"} <= u.db.concepts_of(owners[0])
    check_model(u)


def test_trace_extension_is_one_step():
    reasoner = Reasoner(parse_ontology("A sub exists r . A\n"))
    base = chase(reasoner, Database([("A", "a")]))
    (t1,) = trace_successors(reasoner, base, "a")
    (t2,) = trace_successors(reasoner, base, "a", t1)
    assert len(t2) == 2 and t2[0] == t1[0]


@pytest.mark.parametrize("seed", range(80))
def test_universal_model_properties(seed):
    rng = random.Random(seed)
    reasoner = Reasoner(random_ontology(rng, rng.randint(1, 6)))
    d = random_database(rng, 4, 6)
    depth = rng.randint(0, 3)
    try:
        u = build_universal(reasoner, d, depth)
    except Unsatisfiable:
        return
    check_model(u)
    consts = set(d.adom())
    restricted = {f for f in u.db.fact_set() if all(x in consts for x in f[1:])}
    assert restricted == chase(reasoner, d).fact_set()
    assert all(node.depth <= depth for node in u.provenance.values())
    for piece in witness_decomposition(u):
        assert len([c for c in piece.adom() if c not in piece.nulls]) <= 1


@pytest.mark.parametrize("seed", range(60))
def test_query_directed_model_properties(seed):
    rng = random.Random(seed)
    Q = random_omq(rng, 5, 3, 1)
    reasoner = Reasoner(Q.ontology)
    d = random_database(rng, 4, 6)
    try:
        u = build_u_dq(reasoner, d, Q)
    except Unsatisfiable:
        return
    assert u.depth == len(Q.query.variables())
    check_model(u)
    roots = [n for n, node in u.provenance.items() if node.origin is None and node.parent == ""]
    assert len(roots) == len({u.provenance[r].type for r in roots})


def test_witness_decomposition_pieces(researcher):
    reasoner, _, d = researcher
    u = build_universal(reasoner, d, 2)
    pieces = witness_decomposition(u)
    assert len(pieces) == 1 and "mary" in pieces[0].adom()


def test_cl_q_small_examples():
    assert [tree_code(q) for q in cl_q(["A"], [], 1)] == [tree_code(parse_query("q() :- A(x) .").atoms)]
    two = list(cl_q([], ["r"], 2))
    # r(x,y); r(y,x) is the same tree; r both ways between two variables
    assert len(two) == 2
    reasoner = Reasoner(parse_ontology("func(r)\n"))
    three_free = {tree_code(q) for q in cl_q([], ["r"], 3)}
    three_func = {tree_code(q) for q in cl_q([], ["r"], 3, reasoner)}
    assert three_func < three_free
    assert all(len({tree_code(q) for q in cl_q(["A"], ["r"], k)}) == len(list(cl_q(["A"], ["r"], k)))
               for k in (1, 2, 3))


def test_tree_code_ignores_variable_names():
    a = parse_query("q() :- r(x,y), A(y), s(z,x) .").atoms
    b = parse_query("q() :- r(u,v), A(v), s(w,u) .").atoms
    c = parse_query("q() :- r(x,y), A(x), s(z,x) .").atoms
    assert tree_code(a) == tree_code(b) != tree_code(c)


def test_canonical_db_of_query():
    d = canonical_db_of_query(parse_query("q(x) :- r(x,y), A(y) ."))
    assert d.fact_set() == {("A", "y"), ("r", "x", "y")}
