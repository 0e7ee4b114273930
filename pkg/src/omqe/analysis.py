"""Functional paths, the FA-extension q⁺, acyclicity and free-connex tests, query classification."""
from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .reasoner import Reasoner
from .syntax import CQ, OMQ, Atom, Role


@dataclass(frozen=True)
class JoinTree:
    nodes: tuple[Atom, ...]
    edges: tuple[tuple[int, int], ...]

    def neighbours(self, i: int) -> list[int]:
        return [b if a == i else a for a, b in self.edges if i in (a, b)]

    def is_valid(self) -> bool:
        """Every variable's occurrence set is connected and the edges form a tree."""
        g = nx.Graph()
        g.add_nodes_from(range(len(self.nodes)))
        g.add_edges_from(self.edges)
        if len(self.nodes) and not nx.is_tree(g):
            return False
        for v in {v for a in self.nodes for v in a.args}:
            occ = [i for i, a in enumerate(self.nodes) if v in a.args]
            if not nx.is_connected(g.subgraph(occ)):
                return False
        return True


@dataclass(frozen=True)
class ExtendedQuery:
    base: CQ
    answer_vars: tuple[str, ...]
    extended_answer: tuple[str, ...]
    atoms: tuple[Atom, ...]
    origin: tuple[Atom, ...]

    def as_cq(self) -> CQ:
        return CQ(self.answer_vars, self.atoms, self.base.name + "+")

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        return f"{self.base.name}+({','.join(self.answer_vars)}) :- {body} ."


def functional_edges(reasoner: Reasoner, q: CQ) -> list[tuple[str, str, Atom]]:
    """Directed steps u → v of functional paths, with the atom that licenses them."""
    out = []
    for at in q.atoms:
        if len(at.args) != 2 or at.args[0] == at.args[1]:
            continue
        u, v = at.args
        if reasoner.entails_func(Role(at.pred)):
            out.append((u, v, at))
        if reasoner.entails_func(Role(at.pred, True)):
            out.append((v, u, at))
    return out


def functional_reach(reasoner: Reasoner, q: CQ, start: set[str] | list[str] | tuple[str, ...]) -> set[str]:
    """Variables reachable from `start` on functional paths (including `start`)."""
    adj: dict[str, list[str]] = {}
    for u, v, _ in functional_edges(reasoner, q):
        adj.setdefault(u, []).append(v)
    seen = set(start)
    stack = list(start)
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def functional_closure(reasoner: Reasoner, q: CQ, xs: tuple[str, ...] | list[str]) -> tuple[str, ...]:
    """x̄⁺: xs followed by the newly reachable variables in the fixed variable order."""
    reach = functional_reach(reasoner, q, list(xs))
    xs = tuple(dict.fromkeys(xs))
    return xs + tuple(v for v in q.variables() if v in reach and v not in xs)


def fa_extension(reasoner: Reasoner, q: CQ, answer_mode: str = "extended") -> ExtendedQuery:
    """Replace each atom R(ȳ) by a fresh R'k(ȳ⁺); answers x̄⁺ (extended) or x̄ (original)."""
    if answer_mode not in ("extended", "original"):
        raise ValueError(f"unknown answer mode {answer_mode!r}")
    atoms = []
    for k, at in enumerate(q.atoms, 1):
        atoms.append(Atom(f"R'{k}", functional_closure(reasoner, q, at.args)))
    xplus = functional_closure(reasoner, q, q.answer_vars)
    ans = xplus if answer_mode == "extended" else q.answer_vars
    return ExtendedQuery(q, ans, xplus, tuple(atoms), q.atoms)


def gyo(atoms: list[Atom] | tuple[Atom, ...]) -> JoinTree | None:
    """GYO reduction; removes the least ear (by printed atom) each round."""
    atoms = tuple(atoms)
    live = {i: set(a.args) for i, a in enumerate(atoms)}
    order = sorted(live, key=lambda i: (str(atoms[i]), i))
    edges: list[tuple[int, int]] = []
    while len(live) > 1:
        found = None
        for i in order:
            if i not in live:
                continue
            others = [j for j in order if j in live and j != i]
            shared = {v for v in live[i] if any(v in live[j] for j in others)}
            for j in others:
                if shared <= live[j]:
                    found = (i, j)
                    break
            if found:
                break
        if not found:
            return None
        i, j = found
        edges.append((i, j))
        del live[i]
    return JoinTree(atoms, tuple(edges))


def is_acyclic(q: CQ | ExtendedQuery | list[Atom]) -> JoinTree | None:
    return gyo(_atoms(q))


def is_free_connex(q: CQ | ExtendedQuery | list[Atom], answer_vars: tuple[str, ...] | None = None) -> JoinTree | None:
    """Join tree of q plus a head atom H(x̄), if q itself is acyclic and that extension is too."""
    atoms = list(_atoms(q))
    if answer_vars is None:
        answer_vars = q.answer_vars if not isinstance(q, list) else ()
    if gyo(atoms) is None:
        return None
    return gyo(atoms + [Atom("H", tuple(answer_vars))])


def _atoms(q) -> tuple[Atom, ...]:
    if isinstance(q, (CQ, ExtendedQuery)):
        return tuple(q.atoms)
    return tuple(q)


def gaifman(atoms) -> nx.Graph:
    g = nx.Graph()
    for a in atoms:
        g.add_nodes_from(a.args)
        vs = list(dict.fromkeys(a.args))
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                g.add_edge(vs[i], vs[j])
    return g


def is_conformal(atoms) -> bool:
    g = gaifman(atoms)
    sets = [set(a.args) for a in atoms]
    return all(any(set(c) <= s for s in sets) for c in nx.find_cliques(g))


def is_self_join_free(q: CQ) -> bool:
    preds = [a.pred for a in q.atoms]
    return len(preds) == len(set(preds))


def is_connected(q: CQ) -> bool:
    g = gaifman(q.atoms)
    return g.number_of_nodes() == 0 or nx.is_connected(g)


@dataclass
class Verdict:
    qplus: ExtendedQuery
    ext_acyclic: bool
    ext_free_connex: bool
    orig_acyclic: bool
    orig_free_connex: bool
    q_acyclic: bool
    self_join_free: bool
    connected: bool
    chordal: bool
    conformal: bool
    notes: list[str] = field(default_factory=list)

    @property
    def complete_eligible(self) -> bool:
        return self.ext_acyclic and self.ext_free_connex

    @property
    def partial_eligible(self) -> bool:
        return self.orig_acyclic and self.orig_free_connex

    def lines(self) -> list[str]:
        yn = {True: "yes", False: "no"}
        x_plus = ",".join(self.qplus.extended_answer)
        x = ",".join(self.qplus.base.answer_vars)
        return [
            f"q+: {self.qplus}",
            f"q+({x_plus}) acyclic: {yn[self.ext_acyclic]}",
            f"q+({x_plus}) free-connex: {yn[self.ext_free_connex]}",
            f"q+({x}) acyclic: {yn[self.orig_acyclic]}",
            f"q+({x}) free-connex: {yn[self.orig_free_connex]}",
            f"q acyclic: {yn[self.q_acyclic]}",
            f"q self-join free: {yn[self.self_join_free]}",
            f"q connected: {yn[self.connected]}",
            f"q+ Gaifman graph chordal: {yn[self.chordal]}",
            f"q+ hypergraph conformal: {yn[self.conformal]}",
        ] + self.notes


def classify(reasoner: Reasoner, Q: OMQ | CQ) -> Verdict:
    q = Q.query if isinstance(Q, OMQ) else Q
    ext = fa_extension(reasoner, q, "extended")
    ea = gyo(ext.atoms) is not None
    efc = is_free_connex(list(ext.atoms), ext.extended_answer) is not None
    ofc = is_free_connex(list(ext.atoms), q.answer_vars) is not None
    g = gaifman(ext.atoms)
    v = Verdict(ext, ea, efc, ea, ofc, gyo(q.atoms) is not None, is_self_join_free(q),
                is_connected(q), nx.is_chordal(g) if g.number_of_nodes() else True,
                is_conformal(ext.atoms))
    if v.complete_eligible:
        v.notes.append("complete answers: linear preprocessing, constant delay")
    elif v.self_join_free and v.connected:
        v.notes.append("complete answers: not constant-delay enumerable after linear preprocessing "
                       "under the triangle/hyperclique/sparse-BMM hypotheses")
    else:
        v.notes.append("complete answers: not eligible for the constant-delay pipeline")
    if v.partial_eligible:
        v.notes.append("minimal partial answers: linear preprocessing, constant delay")
    elif v.complete_eligible:
        v.notes.append("minimal partial answers: outside the constant-delay pipeline; "
                       "OMQs of this shape can be hard under the sparse-BMM hypothesis")
    else:
        v.notes.append("minimal partial answers: not eligible for the constant-delay pipeline")
    return v
