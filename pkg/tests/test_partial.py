import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instance
from omqe import OMQError
from omqe.oracle import brute_minimal_partial, wildcard_tuples
from omqe.partial import (MULTI, SINGLE, canonicalize_multi, check_tuple, collapse, enumerate_partial,
                          generalizations, is_minimal_partial_answer, is_partial_answer, minimal_antichain,
                          parse_tuple, prec, preceq)
from omqe.syntax import parse_database


def test_researcher_single_wildcard(researcher):
    reasoner, Q, d = researcher
    assert list(enumerate_partial(reasoner, Q, d)) == [("mary", "*")]
    assert is_partial_answer(reasoner, Q, d, ("mary", "*"))
    assert is_minimal_partial_answer(reasoner, Q, d, ("mary", "*"))
    assert not is_partial_answer(reasoner, Q, d, ("mary", "mary"))
    assert is_partial_answer(reasoner, Q, d, ("*", "*"))
    assert not is_minimal_partial_answer(reasoner, Q, d, ("*", "*"))


def test_factory_multi_wildcards(factory):
    reasoner, Q, d = factory
    assert list(enumerate_partial(reasoner, Q, d, MULTI)) == [("*1", "*2", "*2")]
    assert list(enumerate_partial(reasoner, Q, d, SINGLE)) == [("*", "*", "*")]
    assert is_minimal_partial_answer(reasoner, Q, d, ("*1", "*2", "*2"), MULTI)
    assert not is_minimal_partial_answer(reasoner, Q, d, ("*1", "*2", "*3"), MULTI)


def test_owned_factory_names_owner(factory_owned):
    reasoner, Q, d = factory_owned
    assert list(enumerate_partial(reasoner, Q, d, MULTI)) == [("*1", "tesla", "tesla")]
    assert list(enumerate_partial(reasoner, Q, d, SINGLE)) == [("*", "tesla", "tesla")]


def test_multi_order_examples():
    assert preceq(("a", "b"), ("*1", "*2"), MULTI)
    assert preceq(("a", "a"), ("*1", "*1"), MULTI)
    assert not preceq(("a", "b"), ("*1", "*1"), MULTI)
    assert preceq(("*1", "*1"), ("*1", "*2"), MULTI)
    assert not preceq(("*1", "*2"), ("*1", "*1"), MULTI)
    assert prec(("a", "*"), ("*", "*")) and not prec(("a", "*"), ("a", "*"))
    assert not preceq(("a", "*"), ("b", "*"))


def test_malformed_tuples():
    with pytest.raises(ValueError):
        check_tuple(("*2", "a"), MULTI)
    with pytest.raises(ValueError):
        check_tuple(("*1",), SINGLE)
    with pytest.raises(ValueError):
        preceq(("a",), ("a", "b"))
    assert parse_tuple("(mary, *)") == ("mary", "*") and parse_tuple("()") == ()


def test_canonicalize_and_collapse():
    assert canonicalize_multi(("_n4", "a", "_n2", "_n4"), {"_n2", "_n4"}) == ("*1", "a", "*2", "*1")
    assert collapse(("*1", "a", "*2")) == ("*", "a", "*")


def test_minimal_antichain():
    ts = [("*", "*"), ("a", "*"), ("a", "b"), ("c", "*")]
    assert minimal_antichain(ts, SINGLE) == [("a", "b"), ("c", "*")]
    assert minimal_antichain([("*1", "*2"), ("*1", "*1")], MULTI) == [("*1", "*1")]


ADOM = ["a", "b"]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([SINGLE, MULTI]), st.integers(0, 3), st.data())
def test_generalizations_are_exactly_the_upper_set(mode, k, data):
    pool = wildcard_tuples(ADOM, k, mode)
    t = data.draw(st.sampled_from(pool))
    assert set(generalizations(t, mode)) == {g for g in pool if preceq(t, g, mode)}


@pytest.mark.parametrize("mode", [SINGLE, MULTI])
def test_order_is_a_partial_order(mode):
    pool = wildcard_tuples(ADOM, 3, mode)
    for a in pool:
        assert preceq(a, a, mode)
    for a, b in itertools.product(pool, repeat=2):
        if a != b and preceq(a, b, mode):
            assert not preceq(b, a, mode)
    sample = pool[::3]
    for a, b, c in itertools.product(sample, repeat=3):
        if preceq(a, b, mode) and preceq(b, c, mode):
            assert preceq(a, c, mode)


@pytest.mark.parametrize("seed", range(300))
@pytest.mark.parametrize("mode", [SINGLE, MULTI])
def test_minimal_partial_answers_match_oracle(seed, mode):
    inst = random_instance(seed)
    if inst is None:
        return
    reasoner, Q, d, certain = inst
    got = list(enumerate_partial(reasoner, Q, d, mode))
    assert len(got) == len(set(got))
    assert set(got) == brute_minimal_partial(reasoner, Q, d, mode)
    # wildcard-free minimal partial answers are exactly the certain answers
    assert {t for t in got if not any(v.startswith("*") for v in t)} == certain
    for a, b in itertools.combinations(got, 2):
        assert not preceq(a, b, mode) and not preceq(b, a, mode)


@pytest.mark.parametrize("seed", range(0, 120, 2))
def test_decision_procedures_agree_with_enumeration(seed):
    inst = random_instance(seed, nconst=3)
    if inst is None:
        return
    reasoner, Q, d, _ = inst
    for mode in (SINGLE, MULTI):
        got = set(enumerate_partial(reasoner, Q, d, mode))
        for t in wildcard_tuples(d.adom(), len(Q.query.answer_vars), mode):
            assert is_minimal_partial_answer(reasoner, Q, d, t, mode) == (t in got)


@pytest.mark.parametrize("seed", range(0, 200, 2))
def test_multi_answers_refine_single_answers(seed):
    """Forgetting the numbering of a minimal multi answer gives a partial answer above some single one."""
    inst = random_instance(seed)
    if inst is None:
        return
    reasoner, Q, d, _ = inst
    singles = list(enumerate_partial(reasoner, Q, d, SINGLE))
    for m in enumerate_partial(reasoner, Q, d, MULTI):
        assert is_partial_answer(reasoner, Q, d, collapse(m), SINGLE)
        assert any(preceq(s, collapse(m), SINGLE) for s in singles)
    assert bool(singles) == bool(list(enumerate_partial(reasoner, Q, d, MULTI)))


def test_partial_answers_respect_schema(researcher):
    reasoner, Q, _ = researcher
    with pytest.raises(OMQError):
        list(enumerate_partial(reasoner, Q, parse_database("Other(mary).\n")))
