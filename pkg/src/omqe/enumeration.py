"""Complete-answer enumeration: D₀⁺ construction, full semijoin reduction, constant-delay traversal."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels
from .analysis import ExtendedQuery, JoinTree, classify, fa_extension, gyo
from .errors import NotEligible, OMQError
from .reasoner import Reasoner
from .syntax import CQ, OMQ, Atom, Database, Role
from .umodel import UniversalModel, build_u_dq, functionality_violations

MARK = "_D"


class Store:
    """Integer-interned copy of a database with per-predicate arrays and functional successor maps."""

    def __init__(self, d: Database):
        self.elements: list[str] = d.adom()
        self.eid = {c: i for i, c in enumerate(self.elements)}
        n = len(self.elements)
        self.n = n
        un: dict[str, list[int]] = {}
        for a, c in d.unary:
            un.setdefault(a, []).append(self.eid[c])
        self.unary = {a: np.unique(np.array(v, np.int64)) for a, v in un.items()}
        bi: dict[str, list[tuple[int, int]]] = {}
        for r, c, e in d.binary:
            bi.setdefault(r, []).append((self.eid[c], self.eid[e]))
        self.binary = {r: np.array(v, np.int64).reshape(-1, 2) for r, v in bi.items()}
        self._pairs: dict[str, np.ndarray] = {}
        self._succ: dict[Role, np.ndarray] = {}

    def pair_keys(self, r: str) -> np.ndarray:
        k = self._pairs.get(r)
        if k is None:
            arr = self.binary.get(r, np.zeros((0, 2), np.int64))
            k = np.unique(arr[:, 0] * self.n + arr[:, 1])
            self._pairs[r] = k
        return k

    def functional_successor(self, role: Role) -> np.ndarray:
        """succ[c] = the unique role-successor of c, or -1."""
        s = self._succ.get(role)
        if s is None:
            s = np.full(self.n, -1, np.int64)
            arr = self.binary.get(role.name, np.zeros((0, 2), np.int64))
            src, dst = (arr[:, 1], arr[:, 0]) if role.inverted else (arr[:, 0], arr[:, 1])
            s[src] = dst
            if len(src) and np.any(s[src] != dst):
                raise OMQError(f"role {role} is not functional in the model")
            self._succ[role] = s
        return s


def _atom_tuples(store: Store, at: Atom) -> np.ndarray:
    """Rows h(ȳ) for all facts matching atom at, one column per distinct variable."""
    if len(at.args) == 1:
        return store.unary.get(at.pred, np.zeros(0, np.int64)).reshape(-1, 1)
    arr = store.binary.get(at.pred, np.zeros((0, 2), np.int64))
    if at.args[0] == at.args[1]:
        return arr[arr[:, 0] == arr[:, 1]][:, :1]
    return arr


def _holds(store: Store, at: Atom, cols: dict[str, np.ndarray]) -> np.ndarray:
    if len(at.args) == 1:
        table = store.unary.get(at.pred, np.zeros(0, np.int64))
        return _kernels.member(cols[at.args[0]], table)
    keys = cols[at.args[0]] * store.n + cols[at.args[1]]
    return _kernels.member(keys, store.pair_keys(at.pred))


def build_d0_plus(reasoner: Reasoner, ext: ExtendedQuery, store: Store) -> list[np.ndarray]:
    """For every atom R(ȳ) of the base query the relation of R'(ȳ⁺) over the store.

    Each base fact is extended along the functional paths that define ȳ⁺
    with successor lookups, then kept only if every base atom over ȳ⁺ holds.
    """
    q = ext.base
    fedges = []
    for at in q.atoms:
        if len(at.args) == 2 and at.args[0] != at.args[1]:
            u, v = at.args
            if reasoner.entails_func(Role(at.pred)):
                fedges.append((u, v, Role(at.pred)))
            if reasoner.entails_func(Role(at.pred, True)):
                fedges.append((v, u, Role(at.pred, True)))
    out = []
    for base_atom, plus in zip(ext.origin, ext.atoms):
        yplus = plus.args
        ybar = tuple(dict.fromkeys(base_atom.args))
        rows = _atom_tuples(store, base_atom)
        cols = {v: rows[:, i] for i, v in enumerate(ybar)}
        # extend along functional edges in breadth-first order
        have = set(ybar)
        progress = True
        while progress and len(have) < len(yplus):
            progress = False
            for u, v, role in fedges:
                if u in have and v not in have and v in yplus:
                    nxt = store.functional_successor(role)[cols[u]]
                    keep = nxt >= 0
                    cols = {k: c[keep] for k, c in cols.items()}
                    cols[v] = nxt[keep]
                    have.add(v)
                    progress = True
        inside = set(yplus)
        keep = np.ones(len(next(iter(cols.values()))) if cols else 0, np.bool_)
        for at in q.atoms:
            if set(at.args) <= inside:
                keep &= _holds(store, at, cols)
        rel = np.stack([cols[v][keep] for v in yplus], axis=1) if yplus else np.zeros((0, 0), np.int64)
        out.append(np.unique(rel, axis=0) if len(rel) else rel.reshape(0, len(yplus)))
    return out


def _joint_keys(a: np.ndarray, b: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer keys for the rows of a and b such that equal rows get equal keys."""
    k = a.shape[1]
    if k == 0:
        return np.zeros(len(a), np.int64), np.zeros(len(b), np.int64)
    if k == 1:
        return a[:, 0].astype(np.int64), b[:, 0].astype(np.int64)
    if n ** k < 2 ** 62:
        w = n ** np.arange(k, dtype=np.int64)
        return a @ w, b @ w
    both = np.concatenate([a, b])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    return inv[: len(a)], inv[len(a):]


def semijoin(left: np.ndarray, lcols: list[int], right: np.ndarray, rcols: list[int], n: int) -> np.ndarray:
    """Rows of left that agree with some row of right on the given columns."""
    if not lcols:
        return left if len(right) else left[:0]
    ka, kb = _joint_keys(left[:, lcols], right[:, rcols], n)
    return left[_kernels.member(ka, kb)]


@dataclass
class EnumState:
    """Preprocessed structure; iterate to obtain the answers."""
    answer_vars: tuple[str, ...]
    project: int
    elements: list[str]
    order: list[int] = field(default_factory=list)
    new_vars: list[tuple[str, ...]] = field(default_factory=list)
    key_vars: list[tuple[str, ...]] = field(default_factory=list)
    index: list[dict] = field(default_factory=list)
    empty: bool = False

    _walk: object = None

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return self.answers()

    def answers(self, named: bool = True) -> Iterator[tuple]:
        if self.empty:
            return iter(())
        if self._walk is None:
            self._walk = _compile_walk(self)
        return self._walk(self.index, self.elements, named)

    def next_answer(self):
        if not hasattr(self, "_cursor"):
            self._cursor = self.answers()
        return next(self._cursor, None)


def _compile_walk(state: "EnumState"):
    """Nested-loop generator specialized to the node order of a prepared state.

    One loop per indexed node; moving on from an exhausted inner loop costs
    one offset lookup (or one dictionary lookup for composite keys), which
    keeps the gap between answers flat.
    """
    slot: dict[str, str] = {}
    lines = ["def walk(index, names, named):"]
    depth = 1
    if not state.order:
        lines.append("    yield ()")
    for level, (keyv, newv) in enumerate(zip(state.key_vars, state.new_vars)):
        for v in newv:
            slot[v] = f"v{len(slot)}"
        target = "".join(slot[v] + "," for v in newv)
        if not keyv:
            source = f"index[{level}]"
        elif len(keyv) == 1:
            k = slot[keyv[0]]
            lines.append("    " * depth + f"start, rows = index[{level}]")
            source = f"rows[start[{k}]:start[{k} + 1]]"
        else:
            source = f"index[{level}][({''.join(slot[v] + ',' for v in keyv)})]"
        lines.append("    " * depth + f"for ({target}) in {source}:")
        depth += 1
    if state.order:
        out = "".join(slot[v] + "," for v in state.answer_vars[: state.project])
        named_out = "".join(f"names[{slot[v]}]," for v in state.answer_vars[: state.project])
        lines.append("    " * depth + f"yield ({named_out}) if named else ({out})")
    return _walker("\n".join(lines))


@functools.lru_cache(maxsize=256)
def _walker(source: str):
    # one function object per loop shape: repeated preprocessing of the same
    # query reuses it, together with the interpreter's specialized bytecode
    ns: dict = {}
    exec(source, ns)
    return ns["walk"]


def prepare(atoms: tuple[Atom, ...], rels: list[np.ndarray], tree: JoinTree,
            answer_vars: tuple[str, ...], project: int, elements: list[str]) -> EnumState:
    """Full reduction over the join tree, then per-node indexes over the answer variables."""
    n = max(len(elements), 1)
    k = len(atoms)
    adj: dict[int, list[int]] = {i: [] for i in range(k)}
    for a, b in tree.edges:
        adj[a].append(b)
        adj[b].append(a)
    root = 0
    parent = {root: -1}
    order = [root]
    for i in order:
        for j in sorted(adj[i]):
            if j not in parent:
                parent[j] = i
                order.append(j)
    vars_ = [tuple(a.args) for a in atoms]
    rels = list(rels)

    def cols(i: int, vs) -> list[int]:
        return [vars_[i].index(v) for v in vs]

    for i in reversed(order[1:]):  # children reduce parents
        p = parent[i]
        shared = [v for v in vars_[i] if v in vars_[p]]
        rels[p] = semijoin(rels[p], cols(p, shared), rels[i], cols(i, shared), n)
    for i in order[1:]:  # parents reduce children
        p = parent[i]
        shared = [v for v in vars_[i] if v in vars_[p]]
        rels[i] = semijoin(rels[i], cols(i, shared), rels[p], cols(p, shared), n)
    state = EnumState(tuple(answer_vars), project, elements)
    if any(len(r) == 0 for r in rels):
        state.empty = True
        return state
    free = set(answer_vars)
    bound: set[str] = set()
    plan = []
    for i in order:
        fv = [v for v in vars_[i] if v in free]
        keyv = tuple(v for v in fv if v in bound)
        newv = tuple(v for v in fv if v not in bound)
        if newv:
            plan.append((i, keyv, newv))
            bound.update(newv)
    first_key = {}
    for level, (_, keyv, _) in enumerate(plan):
        for v in keyv:
            first_key.setdefault(v, level)
    for i, keyv, newv in plan:
        proj = np.unique(rels[i][:, cols(i, keyv + newv)], axis=0)
        # inside a key group, visit rows in the order later levels look them up,
        # so those lookups walk their dictionaries front to back
        nk = len(keyv)
        later = sorted(range(len(newv)), key=lambda j: first_key.get(newv[j], len(plan)))
        sort_cols = list(range(nk)) + [nk + j for j in later]
        proj = proj[np.lexsort(proj[:, sort_cols[::-1]].T)] if len(proj) else proj
        idx: object
        if nk == 0:
            idx = [tuple(row) for row in proj.tolist()]
        elif nk == 1:
            # offsets by element id, rows grouped by key in ascending order
            start = np.zeros(n + 1, np.int64)
            np.cumsum(np.bincount(proj[:, 0], minlength=n), out=start[1:])
            idx = (start.tolist(), [tuple(row) for row in proj[:, 1:].tolist()])
        else:
            idx = {}
            for row in proj.tolist():
                idx.setdefault(tuple(row[:nk]), []).append(tuple(row[nk:]))
        state.order.append(i)
        state.key_vars.append(keyv)
        state.new_vars.append(newv)
        state.index.append(idx)
    return state


def _check_sigma(Q: OMQ, d: Database) -> None:
    extra = d.signature() - Q.sigma - {"top"}
    if extra:
        raise OMQError(f"database uses symbols outside the data schema: {sorted(extra)}")


def preprocess_complete(reasoner: Reasoner, Q: OMQ, d: Database,
                        model: UniversalModel | None = None) -> EnumState:
    """Linear-time preprocessing for complete answers; iterate the result to enumerate."""
    q = Q.query
    verdict = classify(reasoner, q)
    if not verdict.complete_eligible:
        raise NotEligible("q+ with extended answer variables is not acyclic and free-connex")
    _check_sigma(Q, d)
    u = model if model is not None else build_u_dq(reasoner, d, Q)
    d0 = u.db.copy()
    mark = MARK
    while mark in d0.signature() or mark in reasoner.cid:
        mark += "_"
    for c in d.adom():
        d0.add_unary(mark, c)
    for _ in functionality_violations(reasoner, d0):
        raise OMQError("query-directed model violates a functionality assertion")
    q0 = CQ(q.answer_vars, q.atoms + tuple(Atom(mark, (x,)) for x in dict.fromkeys(q.answer_vars)), q.name)
    ext = fa_extension(reasoner, q0, "extended")
    store = Store(d0)
    rels = build_d0_plus(reasoner, ext, store)
    tree = gyo(ext.atoms)
    return prepare(ext.atoms, rels, tree, ext.extended_answer, len(q.answer_vars), store.elements)


def enumerate_complete(reasoner: Reasoner, Q: OMQ, d: Database) -> Iterator[tuple[str, ...]]:
    return iter(preprocess_complete(reasoner, Q, d))


def evaluate_original(reasoner: Reasoner, q: CQ, model: Database) -> Iterator[tuple[str, ...]]:
    """Distinct answers of q over a database via q⁺(x̄); needs q⁺(x̄) free-connex."""
    ext = fa_extension(reasoner, q, "original")
    tree = gyo(ext.atoms)
    if tree is None:
        raise NotEligible("q+ is not acyclic")
    store = Store(model)
    rels = build_d0_plus(reasoner, ext, store)
    return iter(prepare(ext.atoms, rels, tree, q.answer_vars, len(q.answer_vars), store.elements))
