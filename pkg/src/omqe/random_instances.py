"""Random normalized ontologies, databases and queries for property tests and cross-checks."""
from __future__ import annotations

import random

from .syntax import CI, CQ, OMQ, RI, Atom, Conj, Database, Exists, Func, Name, Ontology, Role, Top

CONCEPTS = ("A", "B", "C", "D")
ROLES = ("r", "s", "t")


def _role(rng: random.Random, roles) -> Role:
    return Role(rng.choice(roles), rng.random() < 0.3)


def _filler(rng: random.Random, concepts):
    return Top() if rng.random() < 0.15 else Name(rng.choice(concepts))


# cumulative thresholds for: top, conjunction, inclusion, rhs existential, lhs existential (rest: RI)
PROFILES = {
    "mixed": (0.08, 0.25, 0.4, 0.65, 0.88),
    "existential": (0.05, 0.15, 0.25, 0.7, 0.9),
}


def random_ontology(rng: random.Random, max_axioms: int = 6, concepts=CONCEPTS, roles=ROLES,
                    func_density: float = 0.3, profile: str = "mixed") -> Ontology:
    """Normal-form axioms; every role and every inverse is declared functional with probability func_density."""
    t_top, t_conj, t_inc, t_rhs, t_lhs = PROFILES[profile]
    axioms = []
    for _ in range(rng.randint(1, max_axioms)):
        kind = rng.random()
        a, b, c = (Name(rng.choice(concepts)) for _ in range(3))
        if kind < t_top:
            axioms.append(CI(Top(), a))
        elif kind < t_conj:
            axioms.append(CI(Conj(a, b), c))
        elif kind < t_inc:
            axioms.append(CI(a, b))
        elif kind < t_rhs:
            axioms.append(CI(a, Exists(_role(rng, roles), _filler(rng, concepts))))
        elif kind < t_lhs:
            axioms.append(CI(Exists(_role(rng, roles), _filler(rng, concepts)), b))
        else:
            r1, r2 = _role(rng, roles), _role(rng, roles)
            if r1 != r2:
                axioms.append(RI(r1, r2))
    for r in roles:
        for inv in (False, True):
            if rng.random() < func_density:
                axioms.append(Func(Role(r, inv)))
    return Ontology(tuple(dict.fromkeys(axioms)), True)


def random_database(rng: random.Random, nconst: int = 5, nfacts: int = 8, concepts=CONCEPTS,
                    roles=ROLES) -> Database:
    consts = [f"c{i}" for i in range(nconst)]
    d = Database()
    for _ in range(nfacts):
        if rng.random() < 0.45:
            d.add_unary(rng.choice(concepts), rng.choice(consts))
        else:
            d.add_binary(rng.choice(roles), rng.choice(consts), rng.choice(consts))
    return d


def random_query(rng: random.Random, nvars: int = 4, nanswer: int = 2, concepts=CONCEPTS, roles=ROLES,
                 extra_edges: float = 0.2) -> CQ:
    """Mostly tree-shaped CQ; answer variables are a random subset of the variables."""
    vs = [f"v{i}" for i in range(nvars)]
    atoms: list[Atom] = []
    for i in range(1, nvars):
        j = rng.randrange(i)
        u, w = (vs[j], vs[i]) if rng.random() < 0.5 else (vs[i], vs[j])
        atoms.append(Atom(rng.choice(roles), (u, w)))
    if nvars > 2 and rng.random() < extra_edges:
        u, w = rng.sample(vs, 2)
        atoms.append(Atom(rng.choice(roles), (u, w)))
    for v in vs:
        if rng.random() < 0.4:
            atoms.append(Atom(rng.choice(concepts), (v,)))
    if not atoms:
        atoms.append(Atom(rng.choice(concepts), (vs[0],)))
    ans = tuple(rng.sample(vs, min(nanswer, nvars)))
    return CQ(ans, tuple(dict.fromkeys(atoms)))


def random_omq(rng: random.Random, max_axioms: int = 6, nvars: int = 4, nanswer: int = 2,
               func_density: float = 0.3, profile: str = "mixed") -> OMQ:
    o = random_ontology(rng, max_axioms, func_density=func_density, profile=profile)
    q = random_query(rng, nvars, nanswer)
    return OMQ(o, frozenset(CONCEPTS) | frozenset(ROLES), q)


def _tree_concept(q: CQ, root: str, rng: random.Random, keep: float):
    """A concept describing a spanning tree of q below `root`; each branch is kept with probability `keep`."""
    seen = {root}

    def build(v: str):
        parts = [Name(a.pred) for a in q.atoms if len(a.args) == 1 and a.args[0] == v]
        for a in q.atoms:
            if len(a.args) != 2 or a.args[0] == a.args[1]:
                continue
            for mine, other, inv in ((a.args[0], a.args[1], False), (a.args[1], a.args[0], True)):
                if mine == v and other not in seen and rng.random() < keep:
                    seen.add(other)
                    parts.append(Exists(Role(a.pred, inv), build(other)))
        if not parts:
            return Top()
        c = parts[0]
        for p in parts[1:]:
            c = Conj(c, p)
        return c

    return build(root)


def random_witnessed(rng: random.Random, max_axioms: int = 4, nvars: int = 4, nanswer: int = 2,
                     nconst: int = 4, nfacts: int = 6, func_density: float = 0.2) -> tuple[OMQ, Database]:
    """OMQ and database where part of the query is forced into the anonymous part of the model.

    A seed concept S is declared to imply a tree-shaped description of the
    query around a random variable, and S holds at one constant.
    """
    q = random_query(rng, nvars, nanswer)
    extra = random_ontology(rng, max_axioms, func_density=func_density, profile="existential")
    root = rng.choice(q.variables())
    tree = _tree_concept(q, root, rng, 0.8)
    axioms = (CI(Name("S"), tree),) + extra.axioms
    d = random_database(rng, nconst, nfacts)
    d.add_unary("S", f"c{rng.randrange(nconst)}")
    o = Ontology(tuple(dict.fromkeys(axioms)), False)
    return OMQ(o, frozenset(CONCEPTS) | frozenset(ROLES) | {"S"}, q), d
