"""Brute-force reference implementations.

Nothing here calls the Horn chase, the query-directed model builder, the
enumeration engine or the partial-answer module.  Certain answers are
read off an explicitly materialized, sufficiently deep part of the trace
model over the rule-based chase.
"""
from __future__ import annotations

import os
from collections import deque
from itertools import combinations, product
from typing import Iterable

from .errors import InstanceTooLarge
from .horn import functional_clash, naive_chase
from .errors import Unsatisfiable
from .reasoner import Reasoner, bits, inv_mask
from .syntax import CQ, OMQ, Atom, Database, Role

BUDGET = int(os.environ.get("OMQE_ORACLE_BUDGET", "200000"))


def _trace_name(origin: str, steps: tuple) -> str:
    return "_t[" + origin + "".join(f"/{r:x}.{m:x}" for r, m in steps) + "]"


def trace_structure(reasoner: Reasoner, d: Database, n: int) -> Database:
    """Finite part of the trace model of d that every query with ≤ n variables needs.

    Contains the chase, all traces of length ≤ n below constants, and, for
    every (incoming roles, type) state that occurs anywhere, the depth-n
    subtree below its shortest trace.
    """
    base = naive_chase(reasoner, d)
    clash = functional_clash(reasoner, base)
    if clash:
        raise Unsatisfiable(f"{clash[0]} has two {clash[1]}-successors")
    types = {c: 1 for c in base.adom()}
    outs: dict[str, int] = {}
    for a, c in base.unary:
        types[c] |= 1 << reasoner.concept_id(a)
    for r, c, e in base.binary:
        code = reasoner.role_code(Role(r))
        outs[c] = outs.get(c, 0) | 1 << code
        outs[e] = outs.get(e, 0) | 1 << (code ^ 1)
    func = reasoner.func_mask

    def children(origin: str, steps: tuple) -> list[tuple[int, int]]:
        if not steps:
            succ = reasoner.succ_masks(reasoner.entailed_mask(types[origin]))
            return [(r, m) for r, m in succ if not r & outs.get(origin, 0) & func]
        rho_in, m = steps[-1]
        back = inv_mask(rho_in) & func
        return [(r, m2) for r, m2 in reasoner.succ_masks(m) if not r & back]

    out = base.copy()
    made: set[tuple] = set()

    def add(origin: str, steps: tuple) -> None:
        if (origin, steps) in made:
            return
        made.add((origin, steps))
        if len(made) > BUDGET:
            raise InstanceTooLarge("trace structure exceeds the oracle budget")
        name = _trace_name(origin, steps)
        parent = _trace_name(origin, steps[:-1]) if len(steps) > 1 else origin
        rho, m = steps[-1]
        out.nulls.add(name)
        for a in bits(m):
            if a:
                out.add_unary(reasoner.concepts[a], name)
        for code in bits(rho):
            r = reasoner.role_names[code >> 1]
            if code & 1:
                out.add_binary(r, name, parent)
            else:
                out.add_binary(r, parent, name)

    def grow(origin: str, steps: tuple, depth: int) -> None:
        if depth == 0:
            return
        for s in children(origin, steps):
            nxt = steps + (s,)
            add(origin, nxt)
            grow(origin, nxt, depth - 1)

    for c in base.adom():
        grow(c, (), n)
    seen_states: set[tuple[int, int]] = set()
    queue = deque((c, ()) for c in base.adom())
    while queue:
        origin, steps = queue.popleft()
        for s in children(origin, steps):
            if s in seen_states:
                continue
            seen_states.add(s)
            nxt = steps + (s,)
            for k in range(1, len(nxt) + 1):
                add(origin, nxt[:k])
            grow(origin, nxt, n)
            queue.append((origin, nxt))
    return out


def _join(atoms: Iterable[Atom], db: Database, start: dict[str, str] | None = None) -> list[dict[str, str]]:
    """All homomorphisms as a left-deep join over the atom list."""
    rows: list[dict[str, str]] = [dict(start or {})]
    un: dict[str, list[str]] = {}
    bi: dict[str, list[tuple[str, str]]] = {}
    for a, c in db.unary:
        un.setdefault(a, []).append(c)
    for r, c, e in db.binary:
        bi.setdefault(r, []).append((c, e))
    pending = list(atoms)
    while pending:
        # next atom: one sharing a bound variable if possible
        bound = set(rows[0]) if rows else set()
        pending.sort(key=lambda a: -len(set(a.args) & bound))
        at = pending.pop(0)
        nxt = []
        facts = [(c,) for c in un.get(at.pred, [])] if len(at.args) == 1 else bi.get(at.pred, [])
        for row in rows:
            for f in facts:
                ext = dict(row)
                good = True
                for v, val in zip(at.args, f):
                    if ext.setdefault(v, val) != val:
                        good = False
                        break
                if good:
                    nxt.append(ext)
        rows = nxt
        if len(rows) > BUDGET:
            raise InstanceTooLarge("homomorphism search exceeds the oracle budget")
        if not rows:
            return []
    return rows


def query_images(reasoner: Reasoner, Q: OMQ, d: Database) -> tuple[set[tuple[str, ...]], set[str]]:
    """All answer tuples of q over the trace structure, and the structure's nulls."""
    q = Q.query
    s = trace_structure(reasoner, d, len(q.variables()))
    return {tuple(h[x] for x in q.answer_vars) for h in _join(q.atoms, s)}, s.nulls


def brute_answers(reasoner: Reasoner, Q: OMQ, d: Database) -> set[tuple[str, ...]]:
    """Certain (complete) answers."""
    images, nulls = query_images(reasoner, Q, d)
    return {t for t in images if not any(v in nulls for v in t)}


def _below(t: tuple[str, ...], c: tuple[str, ...]) -> bool:
    """An element tuple t witnesses the wildcard tuple c."""
    first: dict[str, str] = {}
    for x, y in zip(t, c):
        if y.startswith("*"):
            if y != "*" and first.setdefault(y, x) != x:
                return False
        elif x != y:
            return False
    return True


def _strictly_below(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
    """a ≺ b for wildcard tuples of one mode."""
    if a == b:
        return False
    for x, y in zip(a, b):
        if not y.startswith("*") and x != y:
            return False
    for i, j in combinations(range(len(b)), 2):
        if b[i] == b[j] and b[i] != "*" and a[i] != a[j]:
            return False
    return True


def wildcard_tuples(adom: list[str], k: int, mode: str) -> list[tuple[str, ...]]:
    if mode == "single":
        return list(product(list(adom) + ["*"], repeat=k))
    out = []

    def go(prefix: tuple[str, ...], top: int) -> None:
        if len(prefix) == k:
            out.append(prefix)
            return
        for a in adom:
            go(prefix + (a,), top)
        for j in range(1, top + 2):
            go(prefix + (f"*{j}",), max(top, j))

    go((), 0)
    return out


def brute_partial(reasoner: Reasoner, Q: OMQ, d: Database, mode: str = "single") -> set[tuple[str, ...]]:
    """Every partial answer, by testing every wildcard tuple."""
    k = len(Q.query.answer_vars)
    adom = d.adom()
    if (len(adom) + k) ** k > BUDGET:
        raise InstanceTooLarge(f"{len(adom)} constants and {k} answer positions exceed the oracle budget")
    images, _ = query_images(reasoner, Q, d)
    return {c for c in wildcard_tuples(adom, k, mode) if any(_below(t, c) for t in images)}


def brute_minimal_partial(reasoner: Reasoner, Q: OMQ, d: Database, mode: str = "single") -> set[tuple[str, ...]]:
    part = brute_partial(reasoner, Q, d, mode)
    return {c for c in part if not any(_strictly_below(c2, c) for c2 in part)}


# ---------------------------------------------------------------- simulations

def greatest_simulation(i: Database, j: Database) -> set[tuple[str, str]]:
    """Largest S ⊆ adom(i) × adom(j) closed under concept facts and role successors (inverses included)."""
    ti = {c: i.concepts_of(c) for c in i.adom()}
    tj = {c: j.concepts_of(c) for c in j.adom()}
    s = {(a, b) for a in ti for b in tj if ti[a] <= tj[b]}
    nb_i = {a: list(i.neighbours(a)) for a in ti}
    changed = True
    while changed:
        changed = False
        for a, b in list(s):
            for role, a2 in nb_i[a]:
                if not any((a2, b2) in s for b2 in j.successors(role, b)):
                    s.discard((a, b))
                    changed = True
                    break
    return s


def is_simulation(s: set[tuple[str, str]], i: Database, j: Database) -> bool:
    for a, b in s:
        if not i.concepts_of(a) <= j.concepts_of(b):
            return False
        for role, a2 in i.neighbours(a):
            if not any((a2, b2) in s for b2 in j.successors(role, b)):
                return False
    return True


# ---------------------------------------------------------------- combinatorics

def brute_triangle(edges: Iterable[tuple[int, int]]) -> bool:
    adj: dict[int, set[int]] = {}
    for a, b in edges:
        if a != b:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
    return any(adj[a] & adj[b] for a in adj for b in adj[a])


def brute_hyperclique(hyperedges: Iterable[Iterable[int]], k: int) -> bool:
    """Is there a (k+1)-set all of whose k-subsets are hyperedges?"""
    es = {frozenset(e) for e in hyperedges}
    verts = sorted({v for e in es for v in e})
    return any(all(frozenset(sub) in es for sub in combinations(cand, k))
               for cand in combinations(verts, k + 1))


def brute_mat_product(m1: Iterable[tuple], m2: Iterable[tuple]) -> set[tuple]:
    m2 = list(m2)
    return {(a, c) for a, b in m1 for b2, c in m2 if b == b2}
