"""Type saturation and successor requirements for normalized ELIHF ontologies.

Concept sets and role sets are Python int bitmasks.  Concept id 0 is ⊤,
which every element carries.  Role name i has code 2*i, its inverse 2*i+1.

The saturation runs over *contexts*.  A context describes an element by
the concepts it was created with, the roles on the edge from its parent
(absent for a root), and the full type of that parent.  Each context keeps
its derived type, the groups of successor requirements it spawns (merged
along shared functional roles) and what it forces back onto its parent.
A global worklist reprocesses contexts whose children changed until
nothing grows; every quantity is monotone so this terminates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .syntax import CI, RI, Conj, Database, Exists, Func, Name, Ontology, Role, Top, TOP, normalize


def inv_mask(mask: int) -> int:
    """Swap every role code with its inverse."""
    even = int("01" * (mask.bit_length() // 2 + 1), 2)
    return ((mask & even) << 1) | ((mask >> 1) & even)


def bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class SuccessorRequirement:
    """A successor reachable over all roles in `roles` that satisfies all of `target`."""
    roles: frozenset[Role]
    target: frozenset[str]


@dataclass
class _Ctx:
    seeds: int
    rho_in: int | None
    parent: int | None
    L: int = 1
    up_concepts: int = 0
    up_roles: int = 0
    groups: list = field(default_factory=list)
    dependents: set = field(default_factory=set)


class Reasoner:
    def __init__(self, ontology: Ontology):
        if not ontology.normalized:
            ontology = normalize(ontology)
        self.ontology = ontology
        self.concepts: list[str] = [TOP]
        self.cid: dict[str, int] = {TOP: 0}
        self.role_names: list[str] = []
        self.rid: dict[str, int] = {}
        self.top_subs = 1
        self.conj: list[tuple[int, int]] = []
        self.ex_rhs: list[tuple[int, int, int]] = []
        self.ex_lhs: list[tuple[int, int, int]] = []
        declared_ris: list[tuple[int, int]] = []
        declared_funcs: list[int] = []
        for ax in ontology.axioms:
            if isinstance(ax, RI):
                declared_ris.append((self.role_code(ax.sub), self.role_code(ax.sup)))
            elif isinstance(ax, Func):
                declared_funcs.append(self.role_code(ax.role))
            else:
                self._add_ci(ax)
        self._ris = declared_ris
        self._funcs = declared_funcs
        self._sup: dict[int, int] = {}
        self._compute_role_closure()
        self.ctx: dict[tuple, _Ctx] = {}
        self._work: list[tuple] = []
        self._queued: set[tuple] = set()
        self._succ_cache: dict[int, list[tuple[int, int]]] = {}
        self._nonempty_cache: dict[frozenset, tuple[int, dict[int, int]]] = {}

    # ----------------------------------------------------------- interning
    def concept_id(self, name: str) -> int:
        i = self.cid.get(name)
        if i is None:
            i = len(self.concepts)
            self.concepts.append(name)
            self.cid[name] = i
        return i

    def role_code(self, role: Role) -> int:
        i = self.rid.get(role.name)
        if i is None:
            i = len(self.role_names)
            self.role_names.append(role.name)
            self.rid[role.name] = i
        return 2 * i + int(role.inverted)

    def role_of(self, code: int) -> Role:
        return Role(self.role_names[code >> 1], bool(code & 1))

    def cmask(self, names: Iterable[str]) -> int:
        m = 1
        for n in names:
            m |= 1 << self.concept_id(n)
        return m

    def cnames(self, mask: int) -> frozenset[str]:
        return frozenset(self.concepts[i] for i in bits(mask) if i)

    def rmask(self, roles: Iterable[Role]) -> int:
        m = 0
        for r in roles:
            m |= 1 << self.role_code(r)
        return m

    def rset(self, mask: int) -> frozenset[Role]:
        return frozenset(self.role_of(c) for c in bits(mask))

    def _atom(self, c) -> int:
        return 0 if isinstance(c, Top) else self.concept_id(c.name)

    def _add_ci(self, ci: CI) -> None:
        lhs, rhs = ci.lhs, ci.rhs
        if isinstance(rhs, Exists):
            self.ex_rhs.append((self._atom(lhs), self.role_code(rhs.role), self._atom(rhs.filler)))
            return
        a = self._atom(rhs)
        if isinstance(lhs, Top):
            self.top_subs |= 1 << a
        elif isinstance(lhs, Name):
            self.conj.append((1 << self.concept_id(lhs.name), a))
        elif isinstance(lhs, Conj):
            self.conj.append(((1 << self._atom(lhs.left)) | (1 << self._atom(lhs.right)), a))
        else:
            self.ex_lhs.append((self.role_code(lhs.role), self._atom(lhs.filler), a))

    # ------------------------------------------------------------- roles
    def _compute_role_closure(self) -> None:
        edges: dict[int, set[int]] = {}
        for r, s in self._ris:
            edges.setdefault(r, set()).add(s)
            edges.setdefault(r ^ 1, set()).add(s ^ 1)
        sup: dict[int, int] = {}
        for start in list(edges):
            seen = {start}
            stack = [start]
            while stack:
                x = stack.pop()
                for y in edges.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            m = 0
            for y in seen:
                m |= 1 << y
            sup[start] = m
        self._sup = sup
        func = 0
        declared = 0
        for f in self._funcs:
            declared |= 1 << f
        for i in range(2 * len(self.role_names)):
            if self.sup(i) & declared:
                func |= 1 << i
        self.func_mask = func

    def sup(self, code: int) -> int:
        return self._sup.get(code, 1 << code)

    def role_closure(self, mask: int) -> int:
        out = 0
        for c in bits(mask):
            out |= self.sup(c)
        return out

    def is_func_code(self, code: int) -> bool:
        return bool(self.func_mask >> code & 1) if code < 2 * len(self.role_names) else False

    def entails_func(self, r: Role) -> bool:
        if r.name not in self.rid:
            return False
        return self.is_func_code(self.role_code(r))

    def entails_role_incl(self, r: Role, s: Role) -> bool:
        if r == s:
            return True
        if r.name not in self.rid or s.name not in self.rid:
            return False
        return bool(self.sup(self.role_code(r)) >> self.role_code(s) & 1)

    # ---------------------------------------------------------- saturation
    def close(self, mask: int) -> int:
        """Closure under ⊤ ⊑ A and conjunction axioms."""
        mask |= self.top_subs
        changed = True
        while changed:
            changed = False
            for prem, a in self.conj:
                if mask & prem == prem and not mask >> a & 1:
                    mask |= 1 << a
                    changed = True
        return mask

    def _get_ctx(self, key: tuple) -> _Ctx:
        c = self.ctx.get(key)
        if c is None:
            c = _Ctx(*key)
            c.L = self.close(key[0] | 1)
            self.ctx[key] = c
            self._enqueue(key)
        return c

    def _enqueue(self, key: tuple) -> None:
        if key not in self._queued:
            self._queued.add(key)
            self._work.append(key)

    def _run(self) -> None:
        while self._work:
            key = self._work.pop()
            self._queued.discard(key)
            c = self.ctx[key]
            before = (c.L, c.up_concepts, c.up_roles)
            self._process(key, c)
            if (c.L, c.up_concepts, c.up_roles) != before:
                for dep in c.dependents:
                    self._enqueue(dep)

    def _process(self, key: tuple, c: _Ctx) -> None:
        root = c.rho_in is None
        while True:
            start = (c.L, c.up_concepts, c.up_roles)
            L = self.close(c.L | c.seeds)
            if not root:
                to_parent = inv_mask(c.rho_in) | c.up_roles
                for s, a1, a2 in self.ex_lhs:
                    if to_parent >> s & 1 and c.parent >> a1 & 1:
                        L |= 1 << a2
            reqs = [(self.sup(r), 1 << a2) for a1, r, a2 in self.ex_rhs if L >> a1 & 1]
            groups = self._merge(reqs)
            real: list[tuple[int, int, tuple]] = []
            up_c, up_r = c.up_concepts, c.up_roles
            # resolve groups against children's feedback until stable
            while True:
                again = False
                real = []
                for rho, seeds in groups:
                    if not root and rho & self.func_mask & (inv_mask(c.rho_in) | up_r):
                        up_r |= rho
                        up_c |= seeds
                        continue
                    ckey = (seeds, rho, L)
                    child = self._get_ctx(ckey)
                    child.dependents.add(key)
                    extra = self.role_closure(inv_mask(child.up_roles)) & ~rho
                    if extra:
                        again = True
                        rho |= extra
                    real.append((rho, seeds, ckey))
                if not again:
                    break
                groups = self._merge([(rho, seeds) for rho, seeds, _ in real])
            for rho, seeds, ckey in real:
                child = self.ctx[ckey]
                L |= child.up_concepts
                for s, a1, a2 in self.ex_lhs:
                    if rho >> s & 1 and child.L >> a1 & 1:
                        L |= 1 << a2
            c.L = self.close(L)
            c.up_concepts, c.up_roles = up_c, up_r
            c.groups = real
            if (c.L, c.up_concepts, c.up_roles) == start:
                break

    def _merge(self, reqs: list[tuple[int, int]]) -> list[tuple[int, int]]:
        """Union requirements that share an entailed-functional role."""
        groups = [list(r) for r in reqs]
        merged = True
        while merged:
            merged = False
            out: list[list[int]] = []
            for g in groups:
                for h in out:
                    if g[0] & h[0] & self.func_mask:
                        h[0] |= g[0]
                        h[1] |= g[1]
                        merged = True
                        break
                else:
                    out.append(g)
            groups = out
        seen = {}
        for rho, seeds in groups:
            seen.setdefault((self.role_closure(rho), seeds), None)
        return list(seen)

    def _root(self, mask: int) -> _Ctx:
        key = (self.close(mask | 1), None, None)
        c = self._get_ctx(key)
        self._run()
        return c

    # -------------------------------------------------------- mask-level API
    def entailed_mask(self, mask: int) -> int:
        return self._root(mask).L

    def succ_masks(self, mask: int) -> list[tuple[int, int]]:
        """Maximal (roles, type) successor requirements of a saturated type mask."""
        hit = self._succ_cache.get(mask)
        if hit is not None:
            return hit
        c = self._root(mask)
        cands = {(rho, self.ctx[ckey].L) for rho, _, ckey in c.groups}
        out = [(rho, t) for rho, t in cands
               if not any((r2, t2) != (rho, t) and r2 & rho == rho and t2 & t == t
                          for r2, t2 in cands)]
        out.sort()
        self._succ_cache[mask] = out
        self._succ_cache[c.L] = out
        return out

    # --------------------------------------------------------- public API
    def entailed_concepts(self, m: Iterable[str]) -> frozenset[str]:
        return self.cnames(self.entailed_mask(self.cmask(m)))

    def maximal_succs(self, m: Iterable[str]) -> list[SuccessorRequirement]:
        mask = self.entailed_mask(self.cmask(m))
        return [SuccessorRequirement(self.rset(rho), self.cnames(t))
                for rho, t in self.succ_masks(mask)]

    def entails_succ(self, m: Iterable[str], roles: Iterable[Role], m2: Iterable[str]) -> bool:
        rho = self.rmask(roles)
        if not rho:
            return False
        t = self.cmask(m2)
        mask = self.entailed_mask(self.cmask(m))
        return any(r & rho == rho and tt & t == t for r, tt in self.succ_masks(mask))

    def is_satisfiable(self, d: Database) -> bool:
        from .horn import chase
        from .errors import Unsatisfiable
        try:
            chase(self, d)
        except Unsatisfiable:
            return False
        return True

    # ---------------------------------------------------- non-empty concepts
    def homogeneous_fixpoint(self, concepts: Iterable[str], roles: Iterable[str]) -> tuple[int, dict[int, int]]:
        """Type and edge labels shared by all elements of the chase of the full Σ-tree.

        In that tree every element carries every Σ concept name and has
        exactly one neighbour per Σ role and direction, so the chase is the
        same at every element and can be computed on a single representative.
        """
        key = (frozenset(concepts), frozenset(roles))
        hit = self._nonempty_cache.get(key)
        if hit is not None:
            return hit
        sig_roles = [self.role_code(Role(n)) for n in sorted(key[1])]
        T = self.close(self.cmask(key[0]))
        labels: dict[int, int] = {}
        for r in sig_roles:
            labels[r] = self.sup(r)
            labels[r ^ 1] = self.sup(r ^ 1)
        changed = True
        while changed:
            changed = False
            T2 = self.entailed_mask(T)
            edge_union = 0
            for lab in labels.values():
                edge_union |= lab
            for s, a1, a2 in self.ex_lhs:
                if edge_union >> s & 1 and T2 >> a1 & 1:
                    T2 |= 1 << a2
            for rho, m in self.succ_masks(self.entailed_mask(T2)):
                for r, lab in list(labels.items()):
                    if rho & lab & self.func_mask:
                        T2 |= m
                        new = self.role_closure(lab | rho)
                        if new != lab:
                            labels[r] = new
                            labels[r ^ 1] = self.role_closure(inv_mask(new))
                            changed = True
            T2 = self.close(T2)
            if T2 != T:
                T = T2
                changed = True
        self._nonempty_cache[key] = (T, labels)
        return T, labels

    def nonempty_concepts(self, concepts: Iterable[str], roles: Iterable[str]) -> frozenset[str]:
        """Concept names entailed at some constant of some Σ-database."""
        T, _ = self.homogeneous_fixpoint(concepts, roles)
        return self.cnames(T)

    def is_nonempty_concept(self, a: str, concepts: Iterable[str], roles: Iterable[str]) -> bool:
        return a in self.nonempty_concepts(concepts, roles)

    # ----------------------------------------------------------- utilities
    def minimal_generators(self, relevant: int | None = None) -> list[tuple[int, int]]:
        """All (K, A) with A entailed by the conjunction K and by no proper subset of K.

        Only concept names occurring in a premise position are considered as
        members of K; other names trigger nothing.
        """
        if relevant is None:
            relevant = self.premise_names()
        names = [i for i in bits(relevant) if i]
        base = self.entailed_mask(1)
        out: list[tuple[int, int]] = []
        ent: dict[int, int] = {1: base}
        for size in range(1, len(names) + 1):
            for combo in combinations(names, size):
                k = 1
                for i in combo:
                    k |= 1 << i
                e = self.entailed_mask(k)
                ent[k] = e
                new = e & ~k
                for i in combo:
                    new &= ~ent[k & ~(1 << i)]
                for a in bits(new):
                    out.append((k, a))
        return out

    def premise_names(self) -> int:
        m = 0
        for prem, _ in self.conj:
            m |= prem
        for a1, _, _ in self.ex_rhs:
            m |= 1 << a1
        for _, a1, _ in self.ex_lhs:
            m |= 1 << a1
        return m & ~1
