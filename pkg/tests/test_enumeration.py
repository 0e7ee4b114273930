import tracemalloc

import pytest

from helpers import random_instance
from omqe import OMQ, Database, NotEligible, OMQError, Reasoner, parse_ontology
from omqe.analysis import classify
from omqe.enumeration import enumerate_complete, evaluate_original, preprocess_complete
from omqe.gen import gen_bmm_bench
from omqe.partial import homomorphisms
from omqe.syntax import parse_database, parse_query
from omqe.umodel import functionality_violations


def test_researcher_has_no_complete_answers(researcher):
    reasoner, Q, d = researcher
    assert list(enumerate_complete(reasoner, Q, d)) == []


def test_researcher_with_named_university(researcher):
    reasoner, Q, _ = researcher
    d = parse_database("Researcher(mary).\nworksFor(mary,tud).\nUniversity(tud).\n")
    assert list(enumerate_complete(reasoner, Q, d)) == [("mary", "tud")]


def test_cycle_query_functional_extension_answers(cycle):
    reasoner, Q, _ = cycle
    d = parse_database("R1(a,b).\nR2(b,c).\nR3(c,a).\nR4(t1,b).\nR4(t2,b).\nR1(e,b).\n")
    assert sorted(enumerate_complete(reasoner, Q, d)) == [("a", "t1"), ("a", "t2")]


def test_not_eligible_query():
    reasoner = Reasoner(parse_ontology(""))
    q = parse_query("q(x,z) :- r(x,y), r(y,z) .")
    Q = OMQ.make(parse_ontology(""), q)
    with pytest.raises(NotEligible):
        preprocess_complete(reasoner, Q, Database())


def test_symbols_outside_schema_rejected(researcher):
    reasoner, Q, _ = researcher
    with pytest.raises(OMQError):
        preprocess_complete(reasoner, Q, parse_database("Other(mary).\n"))


def test_empty_database(researcher):
    reasoner, Q, _ = researcher
    state = preprocess_complete(reasoner, Q, Database())
    assert list(state) == [] and state.next_answer() is None


def test_boolean_query():
    o = parse_ontology("A sub exists r . B\n")
    Q = OMQ.make(o, parse_query("q() :- r(x,y), B(y) ."))
    reasoner = Reasoner(o)
    assert list(enumerate_complete(reasoner, Q, parse_database("A(a).\n"))) == [()]
    assert list(enumerate_complete(reasoner, Q, parse_database("B(a).\n"))) == []


def test_next_answer_drains_in_order(researcher):
    reasoner, Q, _ = researcher
    d = parse_database("Researcher(mary).\nworksFor(mary,tud).\nworksFor(bob,tud).\nAcademia(tud).\n")
    state = preprocess_complete(reasoner, Q, d)
    got = [state.next_answer(), state.next_answer()]
    assert state.next_answer() is None
    assert sorted(got) == [("bob", "tud"), ("mary", "tud")] == sorted(state)


def test_composite_join_keys():
    """Join-tree neighbours sharing two variables go through the multi-key index."""
    o = parse_ontology("")
    q = parse_query("q(x,y,z) :- r(x,y), s(x,y), t(y,z), u(y,z) .")
    d = parse_database("r(a,b).\ns(a,b).\nr(a,c).\nt(b,d).\nu(b,d).\nt(c,d).\nu(c,e).\n")
    got = list(enumerate_complete(Reasoner(o), OMQ.make(o, q), d))
    assert got == [("a", "b", "d")]


def test_unnamed_answers_are_element_ids(researcher):
    reasoner, Q, _ = researcher
    d = parse_database("worksFor(mary,tud).\nAcademia(tud).\n")
    state = preprocess_complete(reasoner, Q, d)
    (ids,) = list(state.answers(named=False))
    assert tuple(state.elements[i] for i in ids) == ("mary", "tud")


@pytest.mark.parametrize("seed", range(400))
def test_complete_answers_match_oracle(seed):
    inst = random_instance(seed)
    if inst is None:
        return
    reasoner, Q, d, want = inst
    if not classify(reasoner, Q).complete_eligible:
        with pytest.raises(NotEligible):
            preprocess_complete(reasoner, Q, d)
        return
    got = list(enumerate_complete(reasoner, Q, d))
    assert len(got) == len(set(got))
    assert set(got) == want


@pytest.mark.parametrize("seed", range(200))
def test_evaluate_original_matches_backtracking(seed):
    """On a plain database the free-connex evaluator finds exactly the homomorphic images."""
    inst = random_instance(seed)
    if inst is None:
        return
    reasoner, Q, d, _ = inst
    q = Q.query
    if not classify(reasoner, q).partial_eligible:
        return
    try:
        got = list(evaluate_original(reasoner, q, d))
    except OMQError:
        return
    want = {tuple(h[x] for x in q.answer_vars) for h in homomorphisms(q.atoms, d)}
    # q⁺ may use functional atoms not present in d; it only agrees when d respects functionality
    if list(functionality_violations(reasoner, d)):
        return
    assert len(got) == len(set(got)) and set(got) == want


def test_enumeration_phase_memory_is_flat():
    """Extra memory while draining answers does not grow with the database (measured, not certified)."""
    peaks = []
    for n in (2 ** 9, 2 ** 12, 2 ** 15):
        Q, d = gen_bmm_bench(n)
        state = preprocess_complete(Reasoner(Q.ontology), Q, d)
        list(state.answers(named=False))  # compile the walker outside the measurement
        tracemalloc.start()
        base = tracemalloc.get_traced_memory()[0]
        count = sum(1 for _ in state.answers(named=False))
        peaks.append(tracemalloc.get_traced_memory()[1] - base)
        tracemalloc.stop()
        assert count > 0
    assert max(peaks) <= 2 * min(peaks) + 1024
