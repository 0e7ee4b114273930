"""Trace-based universal models, depth-bounded, and the query-directed variant used for answering."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Iterator

from .errors import MalformedWitness
from .horn import chase
from .reasoner import Reasoner, bits, inv_mask
from .syntax import CQ, NULL_PREFIX, OMQ, Atom, Database, Role


@dataclass(frozen=True)
class TraceNode:
    """Provenance of one null: where it hangs and what it was created for."""
    parent: str
    roles: int
    type: int
    depth: int
    origin: str | None


@dataclass
class UniversalModel:
    base: Database
    db: Database
    provenance: dict[str, TraceNode] = field(default_factory=dict)
    reasoner: Reasoner | None = None
    depth: int = 0

    @property
    def nulls(self) -> set[str]:
        return self.db.nulls

    def trace_of(self, null: str) -> list[tuple[frozenset[Role], frozenset[str]]]:
        """The role-set/type sequence leading from the origin to `null`."""
        steps = []
        while null in self.provenance:
            node = self.provenance[null]
            steps.append((self.reasoner.rset(node.roles), self.reasoner.cnames(node.type)))
            null = node.parent
        return steps[::-1]


def out_roles(reasoner: Reasoner, d: Database) -> dict[str, int]:
    """For every constant the mask of role codes R with some R(c, c') in d."""
    out: dict[str, int] = {}
    for r, c, e in d.binary:
        code = 2 * reasoner.rid[r]
        out[c] = out.get(c, 0) | (1 << code)
        out[e] = out.get(e, 0) | (1 << (code ^ 1))
    return out


def type_masks(reasoner: Reasoner, d: Database) -> dict[str, int]:
    t = {c: 1 for c in d.adom()}
    for a, c in d.unary:
        t[c] |= 1 << reasoner.concept_id(a)
    return t


class _Unfolder:
    """Expands trace successors from a type and caches subtree templates."""

    def __init__(self, reasoner: Reasoner):
        self.r = reasoner
        self.cache: dict[tuple, list[tuple[int, int, int]]] = {}

    def successors(self, mask: int, rho_in: int | None) -> list[tuple[int, int]]:
        """Trace successors of an element with saturated type `mask` entered via `rho_in`."""
        succ = self.r.succ_masks(mask)
        if rho_in is None:
            return succ
        back = inv_mask(rho_in) & self.r.func_mask
        return [(rho, m) for rho, m in succ if not rho & back]

    def template(self, mask: int, rho_in: int | None, depth: int) -> list[tuple[int, int, int]]:
        """Nodes (parent index, roles, type) below a root at index 0, up to `depth` levels."""
        key = (mask, rho_in, depth)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        nodes: list[tuple[int, int, int]] = []
        if depth > 0:
            for rho, m in self.successors(mask, rho_in):
                idx = len(nodes) + 1
                nodes.append((0, rho, m))
                for p, rho2, m2 in self.template(m, rho, depth - 1):
                    nodes.append((idx + p if p else idx, rho2, m2))
        self.cache[key] = nodes
        return nodes


class _Builder:
    def __init__(self, reasoner: Reasoner, base: Database, depth: int):
        self.r = reasoner
        self.depth = depth
        self.db = base.copy()
        self.unfold = _Unfolder(reasoner)
        self.prov: dict[str, TraceNode] = {}
        used = {c for c in base.adom() if c.startswith(NULL_PREFIX)}
        self._ids = (f"{NULL_PREFIX}{k}" for k in count(1) if f"{NULL_PREFIX}{k}" not in used)

    def attach(self, anchor: str, nodes: list[tuple[int, int, int]], origin: str | None,
               anchor_depth: int) -> None:
        names = [anchor]
        concepts = self.r.concepts
        role_names = self.r.role_names
        for parent, rho, m in nodes:
            n = next(self._ids)
            names.append(n)
            self.db.nulls.add(n)
            p = names[parent]
            pd = self.prov[p].depth if p in self.prov else anchor_depth
            self.prov[n] = TraceNode(p, rho, m, pd + 1, origin)
            for a in bits(m):
                if a:
                    self.db.add_unary(concepts[a], n)
            for code in bits(rho):
                if code & 1:
                    self.db.add_binary(role_names[code >> 1], n, p)
                else:
                    self.db.add_binary(role_names[code >> 1], p, n)

    def traces_from_constants(self, base: Database) -> None:
        types = type_masks(self.r, base)
        outs = out_roles(self.r, base)
        for c, t in types.items():
            blocked = outs.get(c, 0) & self.r.func_mask
            for rho, m in self.r.succ_masks(self.r.entailed_mask(t)):
                if rho & blocked:
                    continue
                self.attach(c, [(0, rho, m)] + [(p + 1 if p else 1, r2, m2)
                                                for p, r2, m2 in self.unfold.template(m, rho, self.depth - 1)],
                            c, 0)

    def detached_trees(self, base: Database) -> None:
        for m in sorted(reachable_types(self.r, base)):
            root = next(self._ids)
            self.db.nulls.add(root)
            self.prov[root] = TraceNode("", 0, m, 0, None)
            for a in bits(m):
                if a:
                    self.db.add_unary(self.r.concepts[a], root)
            self.attach(root, self.unfold.template(m, None, self.depth), None, 0)


def reachable_types(reasoner: Reasoner, d: Database) -> set[int]:
    """Types of elements in the universal models of the single-element databases D_{M_c}."""
    unfold = _Unfolder(reasoner)
    seen_states: set[tuple[int, int | None]] = set()
    types: set[int] = set()
    stack = [(reasoner.entailed_mask(t), None) for t in type_masks(reasoner, d).values()]
    while stack:
        st = stack.pop()
        if st in seen_states:
            continue
        seen_states.add(st)
        types.add(st[0])
        for rho, m in unfold.successors(*st):
            stack.append((m, rho))
    return types


def trace_successors(reasoner: Reasoner, base: Database, origin: str,
                     trace: tuple[tuple[int, int], ...] = ()) -> list[tuple[tuple[int, int], ...]]:
    """One-step extensions of a trace given as ((roles, type), ...) masks from `origin`."""
    if not trace:
        t = reasoner.entailed_mask(type_masks(reasoner, base).get(origin, 1))
        blocked = out_roles(reasoner, base).get(origin, 0) & reasoner.func_mask
        return [((rho, m),) for rho, m in reasoner.succ_masks(t) if not rho & blocked]
    rho_in, m = trace[-1]
    return [trace + (s,) for s in _Unfolder(reasoner).successors(m, rho_in)]


def build_universal(reasoner: Reasoner, d: Database, depth: int) -> UniversalModel:
    """ch(D) plus all traces of length at most `depth` as fresh nulls."""
    base = chase(reasoner, d)
    b = _Builder(reasoner, base, depth)
    if depth > 0:
        b.traces_from_constants(base)
    return UniversalModel(base, b.db, b.prov, reasoner, depth)


def build_u_dq(reasoner: Reasoner, d: Database, q: OMQ | CQ) -> UniversalModel:
    """Query-directed universal model.

    Depth-|var(q)| traces hang off the constants.  In addition every type
    occurring in the universal model of some D_{M_c} gets one detached tree
    of depth |var(q)|; these stand in for all tree-shaped query images that
    avoid the constants.
    """
    cq = q.query if isinstance(q, OMQ) else q
    n = len(cq.variables())
    base = chase(reasoner, d)
    b = _Builder(reasoner, base, n)
    if n > 0:
        b.traces_from_constants(base)
        b.detached_trees(base)
    return UniversalModel(base, b.db, b.prov, reasoner, n)


def witness_decomposition(u: UniversalModel) -> list[Database]:
    """Null-connected pieces of the model once constant-only facts are set aside."""
    nulls = u.db.nulls
    parent: dict[str, str] = {n: n for n in nulls}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r, c, e in u.db.binary:
        if c in nulls and e in nulls:
            a, b = find(c), find(e)
            if a != b:
                parent[a] = b
    pieces: dict[str, Database] = {}
    anchors: dict[str, set[str]] = {}
    for a, c in u.db.unary:
        if c in nulls:
            pieces.setdefault(find(c), Database()).add_unary(a, c)
    for r, c, e in u.db.binary:
        if c in nulls or e in nulls:
            k = find(c if c in nulls else e)
            pieces.setdefault(k, Database()).add_binary(r, c, e)
            for x in (c, e):
                if x not in nulls:
                    anchors.setdefault(k, set()).add(x)
    out = []
    for k, piece in pieces.items():
        if len(anchors.get(k, ())) > 1:
            raise MalformedWitness(f"piece around {k} touches constants {sorted(anchors[k])}")
        piece.nulls = {c for c in piece.adom() if c in nulls}
        out.append(piece)
    return out


def functionality_violations(reasoner: Reasoner, d: Database) -> Iterator[tuple[str, Role]]:
    """Elements with two distinct successors under an entailed-functional role."""
    seen: dict[tuple[str, int], str] = {}
    bad = set()
    for r, c, e in d.binary:
        if r not in reasoner.rid:
            continue
        code = 2 * reasoner.rid[r]
        for x, y, k in ((c, e, code), (e, c, code ^ 1)):
            if reasoner.is_func_code(k):
                prev = seen.setdefault((x, k), y)
                if prev != y and (x, k) not in bad:
                    bad.add((x, k))
                    yield x, reasoner.role_of(k)


def canonical_db_of_query(q: CQ) -> Database:
    d = Database()
    for at in q.atoms:
        if len(at.args) == 1:
            d.add_unary(at.pred, at.args[0])
        else:
            d.add_binary(at.pred, *at.args)
    return d


def tree_code(atoms: list[Atom], root: str | None = None) -> str:
    """Canonical code of a tree-shaped CQ, invariant under variable renaming."""
    vars_ = sorted({v for a in atoms for v in a.args})
    if not vars_:
        return "()"
    labels: dict[str, list[str]] = {v: [] for v in vars_}
    adj: dict[str, list[tuple[str, str]]] = {v: [] for v in vars_}
    for a in atoms:
        if len(a.args) == 1:
            labels[a.args[0]].append(a.pred)
        else:
            x, y = a.args
            adj[x].append((y, a.pred))
            adj[y].append((x, "inv(" + a.pred + ")"))

    def enc(v: str, par: str | None) -> str:
        kids: dict[str, list[str]] = {}
        for w, lab in adj[v]:
            if w != par:
                kids.setdefault(w, []).append(lab)
        parts = sorted("[" + ",".join(sorted(labs)) + "]" + enc(w, v) for w, labs in kids.items())
        return "{" + ",".join(sorted(labels[v])) + "|" + "".join(parts) + "}"

    roots = [root] if root else vars_
    return min(enc(r, None) for r in roots)


def cl_q(concepts: list[str], roles: list[str], n: int, reasoner: Reasoner | None = None) -> Iterator[list[Atom]]:
    """Boolean tree CQs with at most n variables over the given symbols, one per isomorphism class.

    Multiple role atoms between the same two variables are allowed; no
    reflexive atoms.  With a reasoner, queries that violate an entailed
    functionality assertion (two distinct successors) are skipped.
    """
    role_labels = [Role(r) for r in roles] + [Role(r, True) for r in roles]
    concept_sets = _subsets(sorted(concepts))
    edge_sets = [s for s in _subsets(role_labels) if s]
    seen: set[str] = set()

    def func_ok(atoms: list[Atom]) -> bool:
        if reasoner is None:
            return True
        succ: dict[tuple[str, Role], set[str]] = {}
        for a in atoms:
            if len(a.args) == 2:
                x, y = a.args
                for r, s, t in ((Role(a.pred), x, y), (Role(a.pred, True), y, x)):
                    if reasoner.entails_func(r):
                        succ.setdefault((s, r), set()).add(t)
        return all(len(v) <= 1 for v in succ.values())

    def shapes(k: int) -> Iterator[list[int]]:
        # parent arrays of rooted trees on k nodes (node i > 0 has parent < i)
        def rec(prefix: list[int]) -> Iterator[list[int]]:
            if len(prefix) == k:
                yield list(prefix)
                return
            for p in range(len(prefix)):
                yield from rec(prefix + [p])
        yield from rec([-1])

    for k in range(1, n + 1):
        for par in shapes(k):
            vs = [f"v{i}" for i in range(k)]
            for labs in _product([concept_sets] * k):
                for edges in _product([edge_sets] * (k - 1)):
                    atoms = [Atom(c, (vs[i],)) for i in range(k) for c in labs[i]]
                    for i in range(1, k):
                        for r in edges[i - 1]:
                            x, y = (vs[i], vs[par[i]]) if r.inverted else (vs[par[i]], vs[i])
                            atoms.append(Atom(r.name, (x, y)))
                    if not atoms:
                        continue
                    code = tree_code(atoms)
                    if code in seen or not func_ok(atoms):
                        continue
                    seen.add(code)
                    yield atoms


def _subsets(items: list) -> list[tuple]:
    out: list[tuple] = [()]
    for it in items:
        out += [s + (it,) for s in out]
    return out


def _product(pools: list[list]) -> Iterator[tuple]:
    if not pools:
        yield ()
        return
    for x in pools[0]:
        for rest in _product(pools[1:]):
            yield (x,) + rest
