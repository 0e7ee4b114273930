"""Database generators for the triangle, hyperclique, matrix-multiplication and BMM reductions.

Constants of the core database are pairs <x, f> of a query variable and a
partial function from the chosen variables Y to vertices/indices; they are
written ``x@y0:a@y2:b`` (``x@`` when f is empty).  Tree gadgets glued to a
constant c use names ``c$R1:R2-:...`` where a trailing ``-`` marks an inverse.
"""
from __future__ import annotations

import os
import random
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

import networkx as nx

from .analysis import fa_extension, functional_reach, gaifman
from .errors import DepthCapExceeded, NotApplicable, Unsatisfiable
from .horn import chase
from .reasoner import Reasoner
from .syntax import CQ, OMQ, Atom, Database, Ontology, Role, parse_ontology, parse_query

ROOT = "e"


# ---------------------------------------------------------------- constants

def encode_const(x: str, f: dict[str, object], order: Sequence[str]) -> str:
    return x + "@" + "@".join(f"{y}:{f[y]}" for y in order if y in f)


def decode_const(c: str) -> tuple[str, dict[str, str]] | None:
    if "@" not in c or "$" in c:
        return None
    x, *rest = c.split("@")
    f = {}
    for part in rest:
        if part:
            y, _, v = part.partition(":")
            f[y] = v
    return x, f


def y_sets(reasoner: Reasoner, q: CQ, ys: Sequence[str]) -> dict[str, list[str]]:
    """Y_x for every variable x: the chosen variables reachable from x on a functional path."""
    yset = set(ys)
    return {x: [y for y in ys if y in functional_reach(reasoner, q, [x]) and y in yset]
            for x in q.variables()}


def _word_fn(yx: list[str], ys: Sequence[str], word: Sequence) -> dict[str, object]:
    pos = {y: i for i, y in enumerate(ys)}
    return {y: word[pos[y]] for y in yx}


def split_sigma(Q: OMQ) -> tuple[set[str], set[str]]:
    """Σ concept names and Σ role names."""
    o, q = Q.ontology, Q.query
    concepts = o.concept_names() | {a.pred for a in q.atoms if len(a.args) == 1}
    roles = o.role_names() | {a.pred for a in q.atoms if len(a.args) == 2}
    return {s for s in Q.sigma if s in concepts}, {s for s in Q.sigma if s in roles}


# ---------------------------------------------------------------- D_omega and D_tree

def _tok(r: Role) -> str:
    return r.name + ("-" if r.inverted else "")


def sigma_roles(roles: Iterable[str]) -> list[Role]:
    return [x for r in sorted(roles) for x in (Role(r), Role(r, True))]


def omega_prefix(concepts: Iterable[str], roles: Iterable[str], depth: int) -> Database:
    """Depth-bounded prefix of the Σ-tree over reduced words (no R directly followed by R⁻)."""
    rs = sigma_roles(roles)
    concepts = sorted(concepts)
    db = Database()
    frontier: list[tuple[str, Role | None]] = [(ROOT, None)]
    for a in concepts:
        db.add_unary(a, ROOT)
    for _ in range(depth):
        nxt = []
        for w, last in frontier:
            for r in rs:
                if last is not None and r == last.inv():
                    continue
                w2 = (w + ":" if w != ROOT else "") + _tok(r)
                if r.inverted:
                    db.add_binary(r.name, w2, w)
                else:
                    db.add_binary(r.name, w, w2)
                for a in concepts:
                    db.add_unary(a, w2)
                nxt.append((w2, r))
        frontier = nxt
    return db


@dataclass
class TreeGadget:
    depth: int
    db: Database
    nonempty: frozenset[str]
    roles: list[Role]

    def fragment(self, r: Role) -> Database:
        """D_R: the edge from the root to R and the subtree below R."""
        t = _tok(r)
        out = Database()
        for a, c in self.db.unary:
            if c == t or c.startswith(t + ":"):
                out.add_unary(a, c)
        for name, c, d in self.db.binary:
            if all(x == ROOT or x == t or x.startswith(t + ":") for x in (c, d)) and (c != ROOT or d == t) and (d != ROOT or c == t):
                out.add_binary(name, c, d)
        return out


def depth_cap() -> int:
    return int(os.environ.get("OMQE_DEPTH_CAP", "6"))


def build_d_tree(reasoner: Reasoner, concepts: Iterable[str], roles: Iterable[str],
                 cap: int | None = None) -> TreeGadget:
    """Smallest prefix (depth ≥ 1) at whose root every non-empty concept name is entailed."""
    concepts, roles = set(concepts), set(roles)
    cap = depth_cap() if cap is None else cap
    target = reasoner.nonempty_concepts(concepts, roles)
    for k in range(1, cap + 1):
        db = omega_prefix(concepts, roles, k)
        try:
            ch = chase(reasoner, db)
        except Unsatisfiable as e:
            raise NotApplicable(f"the Σ-tree is inconsistent with the ontology: {e}") from e
        if target <= ch.concepts_of(ROOT) | {"top"}:
            return TreeGadget(k, db, target, sigma_roles(roles))
    raise DepthCapExceeded(f"no prefix of depth ≤ {cap} entails all non-empty concept names at the root")


def attach_trees(d0: Database, tree: TreeGadget) -> Database:
    """For each constant of d0 and each Σ-role R without an R-edge there, glue a copy of D_R."""
    out = d0.copy()
    frags = {r: tree.fragment(r) for r in tree.roles}
    for c in d0.adom():
        for r in tree.roles:
            if d0.successors(r, c):
                continue
            ren = lambda w: c if w == ROOT else f"{c}${w}"  # noqa: E731
            frag = frags[r]
            for a, w in frag.unary:
                out.add_unary(a, ren(w))
            for name, u, v in frag.binary:
                out.add_binary(name, ren(u), ren(v))
    return out


def _concept_facts(d: Database, concepts: Iterable[str]) -> None:
    for c in d.adom():
        for a in sorted(concepts):
            d.add_unary(a, c)


# ---------------------------------------------------------------- pattern search

def chordless_cycle(reasoner: Reasoner, q: CQ) -> list[str] | None:
    """A chordless cycle of length ≥ 4 in the Gaifman graph of q⁺, if any."""
    g = gaifman(fa_extension(reasoner, q).atoms)
    best = None
    for cyc in nx.chordless_cycles(g):
        if len(cyc) >= 4 and (best is None or len(cyc) < len(best)):
            best = cyc
    if best is None:
        return None
    order = {v: i for i, v in enumerate(q.variables())}
    # canonical rotation: start at the earliest variable, then its earlier neighbour
    i = min(range(len(best)), key=lambda j: order[best[j]])
    best = best[i:] + best[:i]
    if order[best[-1]] < order[best[1]]:
        best = [best[0]] + best[1:][::-1]
    return best


def uncovered_clique(reasoner: Reasoner, q: CQ) -> list[str] | None:
    """A clique Y of the Gaifman graph of q⁺ inside no atom whose proper subsets all are."""
    atoms = fa_extension(reasoner, q).atoms
    edges = [set(a.args) for a in atoms]
    g = gaifman(atoms)
    order = {v: i for i, v in enumerate(q.variables())}
    best = None
    for clique in nx.enumerate_all_cliques(g):
        if len(clique) >= 3 and not any(set(clique) <= e for e in edges):
            if all(any(set(clique) - {v} <= e for e in edges) for v in clique):
                cand = sorted(clique, key=order.__getitem__)
                if best is None or len(cand) < len(best):
                    best = cand
    return best


def bad_path(reasoner: Reasoner, q: CQ) -> list[str] | None:
    """A chordless path between two answer variables of q⁺(x̄⁺) through quantified variables, length ≥ 2."""
    ext = fa_extension(reasoner, q)
    g = gaifman(ext.atoms)
    free = list(ext.extended_answer)
    best = None
    for i, a in enumerate(free):
        for b in free[i + 1:]:
            if g.has_edge(a, b):
                continue
            allowed = [v for v in g if v not in free or v in (a, b)]
            sub = g.subgraph(allowed)
            if a in sub and b in sub and nx.has_path(sub, a, b):
                p = nx.shortest_path(sub, a, b)
                if best is None or len(p) < len(best):
                    best = p
    return best


def _check_shape(q: CQ) -> None:
    preds = [a.pred for a in q.atoms]
    if len(preds) != len(set(preds)):
        raise NotApplicable("the query is not self-join free")


# ---------------------------------------------------------------- reductions

def gen_triangle_db(reasoner: Reasoner, Q: OMQ, edges: Iterable[tuple], cycle: Sequence[str] | None = None,
                    tree: TreeGadget | None = None) -> Database:
    q = Q.query
    _check_shape(q)
    ys = list(cycle) if cycle else chordless_cycle(reasoner, q)
    if not ys or len(ys) < 4:
        raise NotApplicable("the Gaifman graph of q+ is chordal")
    k = len(ys) - 1
    sc, sr = split_sigma(Q)
    yx = y_sets(reasoner, q, ys)
    sym = {(a, b) for a, b in edges if a != b} | {(b, a) for a, b in edges if a != b}
    verts = sorted({v for e in sym for v in e}, key=str)
    d0 = Database()
    for at in q.atoms:
        if len(at.args) != 2 or at.pred not in sr:
            continue
        x, y = at.args
        touched = set(yx[x]) | set(yx[y])
        if ys[0] in touched:
            words = [(a,) + (b,) * k for a, b in sorted(sym, key=str)]
        elif ys[k] in touched:
            words = [(a,) * k + (b,) for a, b in sorted(sym, key=str)]
        else:
            words = [(b,) * (k + 1) for b in verts]
        for w in words:
            d0.add_binary(at.pred, encode_const(x, _word_fn(yx[x], ys, w), ys),
                          encode_const(y, _word_fn(yx[y], ys, w), ys))
    _concept_facts(d0, sc)
    tree = tree or build_d_tree(reasoner, sc, sr)
    return attach_trees(d0, tree)


def gen_hyperclique_db(reasoner: Reasoner, Q: OMQ, hyperedges: Iterable[Iterable], clique: Sequence[str] | None = None,
                       tree: TreeGadget | None = None) -> Database:
    """Every atom r(x,y) gets one fact per hyperedge and injective assignment of its vertices to Y_x ∪ Y_y."""
    q = Q.query
    _check_shape(q)
    ys = list(clique) if clique else uncovered_clique(reasoner, q)
    if not ys:
        raise NotApplicable("the hypergraph of q+ is conformal")
    k = len(ys) - 1
    es = [tuple(sorted(set(e), key=str)) for e in hyperedges]
    if any(len(e) != k for e in es):
        raise NotApplicable(f"hyperedges must have exactly {k} vertices")
    sc, sr = split_sigma(Q)
    yx = y_sets(reasoner, q, ys)
    d0 = Database()
    for at in q.atoms:
        if len(at.args) != 2 or at.pred not in sr:
            continue
        x, y = at.args
        touched = [v for v in ys if v in yx[x] or v in yx[y]]
        for e in es:
            for vals in permutations(e, len(touched)):
                g = dict(zip(touched, vals))
                d0.add_binary(at.pred, encode_const(x, {v: g[v] for v in yx[x]}, ys),
                              encode_const(y, {v: g[v] for v in yx[y]}, ys))
    tree = tree or build_d_tree(reasoner, sc, sr)
    d = attach_trees(d0, tree)
    _concept_facts(d, sc)
    return d


def gen_mm_db(reasoner: Reasoner, Q: OMQ, m1: Iterable[tuple], m2: Iterable[tuple],
              path: Sequence[str] | None = None, tree: TreeGadget | None = None) -> Database:
    q = Q.query
    _check_shape(q)
    ys = list(path) if path else bad_path(reasoner, q)
    if not ys or len(ys) < 3:
        raise NotApplicable("q+(x+) has no bad path (it is free-connex or cyclic)")
    k = len(ys) - 1
    m1, m2 = sorted(set(m1), key=str), sorted(set(m2), key=str)
    sc, sr = split_sigma(Q)
    yx = y_sets(reasoner, q, ys)
    mids = sorted({b for _, b in m1} | {b for b, _ in m2}, key=str)
    d0 = Database()
    for at in q.atoms:
        if len(at.args) != 2 or at.pred not in sr:
            continue
        x, y = at.args
        touched = set(yx[x]) | set(yx[y])
        if ys[0] in touched:
            words = [(a,) + (b,) * k for a, b in m1]
        elif ys[k] in touched:
            words = [(b,) * k + (c,) for b, c in m2]
        else:
            words = [(b,) * (k + 1) for b in mids]
        for w in words:
            d0.add_binary(at.pred, encode_const(x, _word_fn(yx[x], ys, w), ys),
                          encode_const(y, _word_fn(yx[y], ys, w), ys))
    _concept_facts(d0, sc)
    tree = tree or build_d_tree(reasoner, sc, sr)
    return attach_trees(d0, tree)


def extract_pairs(answers: Iterable[tuple[str, ...]], path: Sequence[str]) -> set[tuple[str, str]]:
    """(f_{x1}(y0), f_{x2}(yk)) for answers whose first two entries are core constants."""
    out = set()
    for t in answers:
        if len(t) < 2:
            continue
        a, b = decode_const(t[0]), decode_const(t[1])
        if a and b and path[0] in a[1] and path[-1] in b[1]:
            out.add((a[1][path[0]], b[1][path[-1]]))
    return out


# ---------------------------------------------------------------- BMM

BMM_ONTOLOGY = "A sub exists inv(f) . top\nfunc(f)\n"
BMM_QUERY = "q(x,z,y) :- r1(x,u1), f(z,u1), f(z,u2), r2(u2,y) ."


def bmm_omq() -> OMQ:
    o = parse_ontology(BMM_ONTOLOGY)
    return OMQ(o, frozenset({"A", "r1", "r2", "f"}), parse_query(BMM_QUERY))


def gen_bmm_instance(m1: Iterable[tuple], m2: Iterable[tuple]) -> tuple[OMQ, Database]:
    d = Database()
    for a, c in m1:
        d.add_binary("r1", str(a), str(c))
        d.add_unary("A", str(c))
    for c, b in m2:
        d.add_binary("r2", str(c), str(b))
        d.add_unary("A", str(c))
    return bmm_omq(), d


def random_matrix(n: int, density: float, rng: random.Random) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if rng.random() < density]


def gen_bmm_bench(nfacts: int, seed: int = 0, degree: int = 2, named: float = 1.0) -> tuple[OMQ, Database]:
    """Sparse BMM database with about `nfacts` facts for scaling runs.

    Each middle index c gets `degree` r1-predecessors and `degree`
    r2-successors; a fraction `named` of them also gets a named
    f-predecessor so that complete answers exist.
    """
    rng = random.Random(seed)
    per_mid = 2 * degree + 1 + (1 if named > 0 else 0)
    mids = max(1, nfacts // per_mid)
    rows = max(2, mids)
    m1, m2 = [], []
    for c in range(mids):
        for _ in range(degree):
            m1.append((f"a{rng.randrange(rows)}", f"c{c}"))
            m2.append((f"c{c}", f"b{rng.randrange(rows)}"))
    Q, d = gen_bmm_instance(m1, m2)
    for c in range(mids):
        if rng.random() < named:
            d.add_binary("f", f"z{c}", f"c{c}")
    return Q, d


# ---------------------------------------------------------------- fixed OMQs used by tests and the CLI

TRIANGLE_ONTOLOGY = "exists s . A sub B\n"
TRIANGLE_QUERY = "q(x0) :- r1(x0,x1), r2(x1,x2), r3(x2,x3), r4(x3,x0), B(x2) ."
HYPER_QUERY = ("q(a) :- g1(e1,a), h1(e1,b), k1(e1,c), g2(e2,a), h2(e2,b), k2(e2,d), "
               "g3(e3,a), h3(e3,c), k3(e3,d), g4(e4,b), h4(e4,c), k4(e4,d) .")
MM_QUERY = "q(x,y) :- r1(x,u), r2(u,y) ."


def triangle_omq() -> OMQ:
    o = parse_ontology(TRIANGLE_ONTOLOGY)
    return OMQ(o, frozenset({"r1", "r2", "r3", "r4", "s", "A"}), parse_query(TRIANGLE_QUERY))


def hyperclique_omq() -> OMQ:
    q = parse_query(HYPER_QUERY)
    roles = sorted({a.pred for a in q.atoms})
    o = parse_ontology("".join(f"func({r})\n" for r in roles))
    return OMQ(o, frozenset(roles), q)


def mm_omq() -> OMQ:
    return OMQ(Ontology(()), frozenset({"r1", "r2"}), parse_query(MM_QUERY))


def parse_edges(text: str) -> list[tuple[str, ...]]:
    """One edge / hyperedge / matrix entry per line, whitespace or comma separated."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].replace(",", " ").split()
        if line:
            out.append(tuple(line))
    return out
