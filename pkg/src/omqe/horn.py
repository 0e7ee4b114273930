"""Chase computation: propositional Horn encoding solved in linear time, plus a rule-based reference."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import Unsatisfiable
from .reasoner import Reasoner, bits, inv_mask
from .syntax import TOP, Database, Role


@dataclass
class HornFormula:
    """Definite Horn clauses over variables x_{A(c)} and x_{r(c,c')}.

    Concept variable of (A, c) is ``c * nconcepts + A``.  Each edge
    {lo, hi} of the database owns a block of ``2 * nroles`` role variables;
    role code R in that block stands for R(lo, hi).
    """
    constants: list[str]
    nconcepts: int
    nroles: int
    edges: np.ndarray
    units: np.ndarray
    ptr: np.ndarray
    body: np.ndarray
    head: np.ndarray
    reasoner: Reasoner

    @property
    def nvars(self) -> int:
        return len(self.constants) * self.nconcepts + len(self.edges) * 2 * self.nroles

    def __len__(self) -> int:
        return len(self.units) + len(self.body) + len(self.head)

    def var_name(self, v: int) -> str:
        nc_total = len(self.constants) * self.nconcepts
        if v < nc_total:
            c, a = divmod(v, self.nconcepts)
            return f"{self.reasoner.concepts[a]}({self.constants[c]})"
        e, code = divmod(v - nc_total, 2 * self.nroles)
        lo, hi = self.edges[e]
        r = self.reasoner.role_names[code >> 1]
        if code & 1:
            lo, hi = hi, lo
        return f"{r}({self.constants[lo]},{self.constants[hi]})"

    def clauses(self) -> Iterator[tuple[tuple[str, ...], str]]:
        """Readable clauses; unit facts come first with an empty body."""
        for u in self.units:
            yield (), self.var_name(int(u))
        for j in range(len(self.head)):
            b = tuple(self.var_name(int(v)) for v in self.body[self.ptr[j]:self.ptr[j + 1]])
            yield b, self.var_name(int(self.head[j]))


class _Clauses:
    def __init__(self):
        self.groups: list[tuple[np.ndarray, np.ndarray]] = []

    def add(self, body: np.ndarray, head: np.ndarray) -> None:
        if len(head):
            self.groups.append((np.asarray(body, np.int64).reshape(len(head), -1),
                                np.asarray(head, np.int64)))

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.groups:
            return np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64)
        lengths = np.concatenate([np.full(len(h), b.shape[1], np.int64) for b, h in self.groups])
        ptr = np.zeros(len(lengths) + 1, np.int64)
        np.cumsum(lengths, out=ptr[1:])
        body = np.concatenate([b.ravel() for b, _ in self.groups])
        head = np.concatenate([h for _, h in self.groups])
        return ptr, body, head


def _generators(reasoner: Reasoner) -> list[tuple[int, int]]:
    gens = getattr(reasoner, "_horn_generators", None)
    if gens is None:
        gens = reasoner.minimal_generators()
        reasoner._horn_generators = gens
    return gens


def build_horn(reasoner: Reasoner, d: Database) -> HornFormula:
    consts = d.adom()
    cidx = {c: i for i, c in enumerate(consts)}
    for a, _ in d.unary:
        reasoner.concept_id(a)
    for r, _, _ in d.binary:
        reasoner.role_code(Role(r))
    gens = _generators(reasoner)
    NC = len(reasoner.concepts)
    NR = len(reasoner.role_names)
    n = len(consts)
    cl = _Clauses()
    units: list[np.ndarray] = []

    # (1) facts, plus ⊤ and everything ⊤ entails at every constant
    if d.unary:
        units.append(np.array([cidx[c] * NC + reasoner.cid[a] for a, c in d.unary], np.int64))
    cids = np.arange(n, dtype=np.int64) * NC
    for a in bits(reasoner.entailed_mask(1)):
        units.append(cids + a)

    pairs = {}
    for r, c, e in d.binary:
        i, j = cidx[c], cidx[e]
        pairs.setdefault((min(i, j), max(i, j)), None)
    edges = np.array(list(pairs), np.int64).reshape(-1, 2)
    eidx = {p: k for k, p in enumerate(pairs)}
    RB = n * NC
    W = 2 * NR
    if d.binary:
        fv = []
        for r, c, e in d.binary:
            i, j = cidx[c], cidx[e]
            code = 2 * reasoner.rid[r]
            if i > j:
                code ^= 1
            fv.append(RB + eidx[(min(i, j), max(i, j))] * W + code)
        units.append(np.array(fv, np.int64))

    # (2) entailed conjunctions at every constant
    for k, a in gens:
        prem = [p for p in bits(k) if p]
        cl.add(np.stack([cids + p for p in prem], axis=1), cids + a)

    if len(edges):
        lo, hi = edges[:, 0], edges[:, 1]
        blocks = RB + np.arange(len(edges), dtype=np.int64) * W
        loops = lo == hi
        # orientation 0: (c1, c2) = (lo, hi); orientation 1: (hi, lo)
        orient = [(lo, hi, 0), (hi, lo, 1)]

        def rv(code: int, o: int) -> np.ndarray:
            return blocks + (code ^ o)

        # (3) ∃S.A1 ⊑ A2: A1(c1) ∧ S(c2, c1) → A2(c2)
        for s, a1, a2 in reasoner.ex_lhs:
            for c1, c2, o in orient:
                role = rv(s, 1 - o)
                if a1:
                    cl.add(np.stack([c1 * NC + a1, role], axis=1), c2 * NC + a2)
                else:
                    cl.add(role[:, None], c2 * NC + a2)
        # (4) role inclusions
        for code in range(W):
            for s in bits(reasoner.sup(code) & ~(1 << code)):
                cl.add(rv(code, 0)[:, None], rv(s, 0))
        # (5) A ⊑ ∃S.B with S ⊑* R and func(R): A(c1) ∧ R(c1,c2) → S'(c1,c2), B(c2)
        for a, s, b in reasoner.ex_rhs:
            sup_s = reasoner.sup(s)
            for r in bits(sup_s & reasoner.func_mask):
                for c1, c2, o in orient:
                    body = np.stack([c1 * NC + a, rv(r, o)], axis=1)
                    for s2 in bits(sup_s):
                        cl.add(body, rv(s2, o))
                    if b:
                        cl.add(body, c2 * NC + b)
        # a self-loop r(c,c) is also r⁻(c,c)
        if loops.any():
            lb = blocks[loops]
            for i in range(NR):
                cl.add((lb + 2 * i)[:, None], lb + 2 * i + 1)
                cl.add((lb + 2 * i + 1)[:, None], lb + 2 * i)

    ptr, body, head = cl.csr()
    u = np.unique(np.concatenate(units)) if units else np.zeros(0, np.int64)
    return HornFormula(consts, NC, NR, edges, u, ptr, body, head, reasoner)


def minimal_model(f: HornFormula, backend: str | None = None) -> np.ndarray:
    return _kernels.horn_minimal_model(f.nvars, f.units, f.ptr, f.body, f.head, backend)


def _read_off(f: HornFormula, val: np.ndarray, d: Database) -> Database:
    NC, W = f.nconcepts, 2 * f.nroles
    n = len(f.constants)
    out = d.copy()
    cv = np.flatnonzero(val[: n * NC])
    names = f.reasoner.concepts
    for v in cv:
        c, a = divmod(int(v), NC)
        if a:
            out.add_unary(names[a], f.constants[c])
    rv = np.flatnonzero(val[n * NC:])
    for v in rv:
        e, code = divmod(int(v), W)
        lo, hi = f.edges[e]
        if code & 1:
            lo, hi = hi, lo
        out.add_binary(f.reasoner.role_names[code >> 1], f.constants[lo], f.constants[hi])
    return out


def functional_clash(reasoner: Reasoner, d: Database) -> tuple | None:
    """A constant with two distinct successors under an entailed-functional role, if any."""
    seen: dict[tuple[str, int], str] = {}
    for r, c, e in d.binary:
        if r not in reasoner.rid:
            continue
        code = 2 * reasoner.rid[r]
        for x, y, k in ((c, e, code), (e, c, code ^ 1)):
            if reasoner.is_func_code(k):
                prev = seen.setdefault((x, k), y)
                if prev != y:
                    return x, reasoner.role_of(k), prev, y
    return None


def chase(reasoner: Reasoner, d: Database, backend: str | None = None) -> Database:
    """ch(D) read off the least model of the Horn encoding; raises Unsatisfiable on a clash."""
    f = build_horn(reasoner, d)
    out = _read_off(f, minimal_model(f, backend), d)
    clash = functional_clash(reasoner, out)
    if clash:
        c, r, a, b = clash
        raise Unsatisfiable(f"{c} has two {r}-successors {a} and {b}")
    return out


def naive_chase(reasoner: Reasoner, d: Database) -> Database:
    """Exhaustive application of the four chase rules on explicit types and edge labels."""
    for a, _ in d.unary:
        reasoner.concept_id(a)
    for r, _, _ in d.binary:
        reasoner.role_code(Role(r))
    types: dict[str, int] = {c: 1 for c in d.adom()}
    for a, c in d.unary:
        types[c] |= 1 << reasoner.cid[a]
    labels: dict[tuple[str, str], int] = {}
    for r, c, e in d.binary:
        code = 2 * reasoner.rid[r]
        labels[(c, e)] = labels.get((c, e), 0) | (1 << code)
        labels[(e, c)] = labels.get((e, c), 0) | (1 << (code ^ 1))
    changed = True
    while changed:
        changed = False
        for c, t in types.items():  # R1
            t2 = reasoner.entailed_mask(t)
            if t2 != t:
                types[c] = t2
                changed = True
        for (c, e), lab in labels.items():  # R3
            lab2 = reasoner.role_closure(lab)
            if lab2 != lab:
                labels[(c, e)] = lab2
                labels[(e, c)] = inv_mask(lab2)
                changed = True
        for (c, e), lab in labels.items():  # R2: ∃S.A1 ⊑ A2 at c via its S-neighbour e
            for s, a1, a2 in reasoner.ex_lhs:
                if lab >> s & 1 and types[e] >> a1 & 1 and not types[c] >> a2 & 1:
                    types[c] |= 1 << a2
                    changed = True
        for (c, e) in list(labels):  # R4
            lab = labels[(c, e)]
            for rho, m in reasoner.succ_masks(reasoner.entailed_mask(types[c])):
                if rho & lab & reasoner.func_mask:
                    if rho & ~lab:
                        lab |= rho
                        labels[(c, e)] = lab
                        labels[(e, c)] = inv_mask(lab)
                        changed = True
                    if m & ~types[e]:
                        types[e] |= m
                        changed = True
    out = d.copy()
    for c, t in types.items():
        for a in bits(t):
            if a:
                out.add_unary(reasoner.concepts[a], c)
    for (c, e), lab in labels.items():
        for code in bits(lab):
            if not code & 1:
                out.add_binary(reasoner.role_names[code >> 1], c, e)
    return out


def is_satisfiable(reasoner: Reasoner, d: Database) -> bool:
    try:
        chase(reasoner, d)
    except Unsatisfiable:
        return False
    return True
