"""Wildcard tuples, the ≼ order, partial-answer tests and minimal partial answer enumeration."""
from __future__ import annotations

import re
from typing import Iterable, Iterator

from .analysis import classify
from .enumeration import _check_sigma, evaluate_original
from .reasoner import Reasoner
from .syntax import CQ, OMQ, Atom, Database, Role
from .umodel import UniversalModel, build_u_dq

STAR = "*"
SINGLE, MULTI = "single", "multi"
_MULTI_STAR = re.compile(r"\*(\d+)$")


def is_wildcard(v: str) -> bool:
    return v.startswith(STAR)


def star_index(v: str) -> int:
    m = _MULTI_STAR.match(v)
    if not m or int(m.group(1)) < 1:
        raise ValueError(f"{v!r} is not a multi-wildcard")
    return int(m.group(1))


def parse_tuple(text: str) -> tuple[str, ...]:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    if not text.strip():
        return ()
    return tuple(p.strip() for p in text.split(","))


def format_tuple(t: Iterable[str]) -> str:
    return ",".join(t)


def mode_of(t: tuple[str, ...]) -> str:
    return MULTI if any(is_wildcard(v) and v != STAR for v in t) else SINGLE


def check_tuple(t: tuple[str, ...], mode: str) -> None:
    """Raise ValueError unless t is a well-formed wildcard tuple of the given mode."""
    if mode == SINGLE:
        bad = [v for v in t if is_wildcard(v) and v != STAR]
        if bad:
            raise ValueError(f"numbered wildcard {bad[0]} in a single-wildcard tuple")
        return
    if mode != MULTI:
        raise ValueError(f"unknown mode {mode!r}")
    top = 0
    for v in t:
        if not is_wildcard(v):
            continue
        k = star_index(v)
        if k > top + 1:
            raise ValueError(f"{v} appears before *{k - 1}")
        top = max(top, k)


def preceq(a: tuple[str, ...], b: tuple[str, ...], mode: str = SINGLE) -> bool:
    """a ≼ b: b is a (possibly) less informative version of a."""
    if len(a) != len(b):
        raise ValueError(f"tuples of different length {len(a)} and {len(b)}")
    check_tuple(a, mode)
    check_tuple(b, mode)
    if mode == SINGLE:
        return all(x == y or y == STAR for x, y in zip(a, b))
    for x, y in zip(a, b):
        if x != y and not is_wildcard(y):
            return False
    first: dict[str, str] = {}
    for x, y in zip(a, b):
        if first.setdefault(y, x) != x:
            return False
    return True


def prec(a: tuple[str, ...], b: tuple[str, ...], mode: str = SINGLE) -> bool:
    return a != b and preceq(a, b, mode)


def canonicalize_multi(t: Iterable[str], nulls: set[str] | frozenset[str]) -> tuple[str, ...]:
    """Replace nulls by *1, *2, ... in order of first occurrence."""
    names: dict[str, str] = {}
    out = []
    for v in t:
        if v in nulls:
            v = names.setdefault(v, f"*{len(names) + 1}")
        out.append(v)
    return tuple(out)


def collapse(t: tuple[str, ...]) -> tuple[str, ...]:
    """Forget wildcard numbering."""
    return tuple(STAR if is_wildcard(v) else v for v in t)


def to_wildcards(t: tuple[str, ...], nulls, mode: str) -> tuple[str, ...]:
    if mode == MULTI:
        return canonicalize_multi(t, nulls)
    return tuple(STAR if v in nulls else v for v in t)


# ---------------------------------------------------------------- homomorphisms

def homomorphisms(atoms: tuple[Atom, ...], db: Database, fixed: dict[str, str] | None = None) -> Iterator[dict[str, str]]:
    """All homomorphisms from atoms into db extending `fixed`, by backtracking."""
    fixed = dict(fixed or {})
    vars_ = list(dict.fromkeys(v for a in atoms for v in a.args))
    order: list[str] = [v for v in vars_ if v in fixed]
    rest = [v for v in vars_ if v not in fixed]
    # connected order: prefer variables adjacent to already ordered ones
    while rest:
        nxt = next((v for v in rest if any(v in a.args and set(a.args) & set(order) for a in atoms)), rest[0])
        order.append(nxt)
        rest.remove(nxt)
    checks: dict[str, list[Atom]] = {v: [] for v in order}
    pos = {v: i for i, v in enumerate(order)}
    for a in atoms:
        checks[max(a.args, key=pos.__getitem__)].append(a)
    domain = db.adom()
    h: dict[str, str] = {}

    def candidates(v: str) -> Iterable[str]:
        if v in fixed:
            return (fixed[v],)
        for a in atoms:
            if len(a.args) == 2 and a.args[0] != a.args[1]:
                x, y = a.args
                if x == v and y in h:
                    return db.successors(Role(a.pred, True), h[y])
                if y == v and x in h:
                    return db.successors(Role(a.pred), h[x])
        return domain

    def ok(a: Atom) -> bool:
        if len(a.args) == 1:
            return db.has_unary(a.pred, h[a.args[0]])
        return db.has_binary(a.pred, h[a.args[0]], h[a.args[1]])

    def go(i: int) -> Iterator[dict[str, str]]:
        if i == len(order):
            yield dict(h)
            return
        v = order[i]
        for c in candidates(v):
            h[v] = c
            if all(ok(a) for a in checks[v]):
                yield from go(i + 1)
        h.pop(v, None)

    yield from go(0)


# ---------------------------------------------------------------- testing

def _bind(q: CQ, c: tuple[str, ...], mode: str) -> dict[str, str] | None:
    """Pin answer variables to the constants of c; equate variables sharing a wildcard.

    Returns a map var -> constant, or var -> '?k' placeholder for wildcard
    classes (resolved by the caller), or None if c contradicts itself.
    """
    if len(c) != len(q.answer_vars):
        raise ValueError(f"tuple has length {len(c)}, query has {len(q.answer_vars)} answer variables")
    check_tuple(c, mode)
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            x = parent[x]
        return x

    for x, v in zip(q.answer_vars, c):
        if is_wildcard(v) and mode == SINGLE:
            find(x)
            continue
        key = ("?" + v) if is_wildcard(v) else ("=" + v)
        a, b = find(x), find(key)
        if a != b:
            parent[a] = b
    # a class may hold at most one constant
    consts: dict[str, str] = {}
    for k in list(parent):
        if k.startswith("="):
            r = find(k)
            if r in consts and consts[r] != k[1:]:
                return None
            consts[r] = k[1:]
    out = {}
    for x in q.answer_vars:
        r = find(x)
        out[x] = consts[r] if r in consts else "?" + r
    return out


def _substituted(q: CQ, binding: dict[str, str]) -> tuple[tuple[Atom, ...], dict[str, str]]:
    """Give each wildcard class one variable; report the pinned constants."""
    cls: dict[str, str] = {}
    ren = {}
    for x, v in binding.items():
        ren[x] = cls.setdefault(v, f"_w{len(cls)}") if v.startswith("?") else x
    fixed = {x: v for x, v in binding.items() if not v.startswith("?")}
    atoms = tuple(Atom(a.pred, tuple(ren.get(v, v) for v in a.args)) for a in q.atoms)
    return atoms, fixed


def is_partial_answer(reasoner: Reasoner, Q: OMQ, d: Database, c: tuple[str, ...], mode: str = SINGLE,
                      model: UniversalModel | None = None) -> bool:
    """Is c a partial answer (single or multi wildcards)?"""
    q = Q.query
    binding = _bind(q, tuple(c), mode)
    if binding is None:
        return False
    u = model if model is not None else build_u_dq(reasoner, d, Q)
    adom = set(d.adom())
    if any(v not in adom for x, v in binding.items() if not v.startswith("?")):
        return False
    atoms, fixed = _substituted(q, binding)
    return next(homomorphisms(atoms, u.db, fixed), None) is not None


def refinements(c: tuple[str, ...], adom: list[str], mode: str) -> Iterator[tuple[str, ...]]:
    """One-step strict refinements: a constant for a wildcard (class), or a merge of two classes."""
    if mode == SINGLE:
        for i, v in enumerate(c):
            if v == STAR:
                for a in adom:
                    yield c[:i] + (a,) + c[i + 1:]
        return
    stars = sorted({star_index(v) for v in c if is_wildcard(v)})
    for j in stars:
        for a in adom:
            t = tuple(a if v == f"*{j}" else v for v in c)
            yield canonicalize_multi(t, {v for v in t if is_wildcard(v)})
    for i in stars:
        for j in stars:
            if i < j:
                t = tuple(f"*{i}" if v == f"*{j}" else v for v in c)
                yield canonicalize_multi(t, {v for v in t if is_wildcard(v)})


def is_minimal_partial_answer(reasoner: Reasoner, Q: OMQ, d: Database, c: tuple[str, ...],
                              mode: str = SINGLE, model: UniversalModel | None = None) -> bool:
    u = model if model is not None else build_u_dq(reasoner, d, Q)
    if not is_partial_answer(reasoner, Q, d, c, mode, u):
        return False
    return not any(is_partial_answer(reasoner, Q, d, r, mode, u) for r in refinements(tuple(c), d.adom(), mode))


# ---------------------------------------------------------------- enumeration

def generalizations(t: tuple[str, ...], mode: str) -> Iterator[tuple[str, ...]]:
    """All tuples g with t ≼ g (t itself included)."""
    if mode == SINGLE:
        idx = [i for i, v in enumerate(t) if v != STAR]
        for mask in range(1 << len(idx)):
            g = list(t)
            for b, i in enumerate(idx):
                if mask >> b & 1:
                    g[i] = STAR
            yield tuple(g)
        return
    n = len(t)
    g: list[str] = []
    cls_val: list[str] = []  # value of t shared by every member of a class

    def go(i: int) -> Iterator[tuple[str, ...]]:
        if i == n:
            yield tuple(g)
            return
        v = t[i]
        if not is_wildcard(v):
            g.append(v)
            yield from go(i + 1)
            g.pop()
        for k, val in enumerate(cls_val):
            if val == v:
                g.append(f"*{k + 1}")
                yield from go(i + 1)
                g.pop()
        cls_val.append(v)
        g.append(f"*{len(cls_val)}")
        yield from go(i + 1)
        g.pop()
        cls_val.pop()

    yield from go(0)


def minimal_antichain(tuples: Iterable[tuple[str, ...]], mode: str) -> list[tuple[str, ...]]:
    """The ≺-minimal members of a set of wildcard tuples, in first-seen order."""
    seen = list(dict.fromkeys(tuples))
    dominated: set[tuple[str, ...]] = set()
    for t in seen:
        for g in generalizations(t, mode):
            if g != t:
                dominated.add(g)
    return [t for t in seen if t not in dominated]


def model_images(reasoner: Reasoner, q: CQ, u: UniversalModel) -> Iterator[tuple[str, ...]]:
    """Distinct answer tuples of q over the model, nulls included."""
    if classify(reasoner, q).partial_eligible:
        yield from evaluate_original(reasoner, q, u.db)
        return
    seen = set()
    for h in homomorphisms(q.atoms, u.db):
        t = tuple(h[x] for x in q.answer_vars)
        if t not in seen:
            seen.add(t)
            yield t


def enumerate_partial(reasoner: Reasoner, Q: OMQ, d: Database, mode: str = SINGLE,
                      model: UniversalModel | None = None) -> Iterator[tuple[str, ...]]:
    """Minimal partial answers with single (`*`) or numbered (`*1`, `*2`, ...) wildcards."""
    if mode not in (SINGLE, MULTI):
        raise ValueError(f"unknown mode {mode!r}")
    _check_sigma(Q, d)
    u = model if model is not None else build_u_dq(reasoner, d, Q)
    nulls = u.db.nulls
    images = (to_wildcards(t, nulls, mode) for t in model_images(reasoner, Q.query, u))
    yield from minimal_antichain(images, mode)
