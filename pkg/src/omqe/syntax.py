"""Data model, parsers, printers and normalization for ontologies, databases and CQs."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import ParseError

TOP = "top"
FRESH_PREFIX = "_N"
NULL_PREFIX = "_n"

KEYWORDS = {"sub", "subr", "and", "exists", "top", "func", "inv"}


@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def inv(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return f"inv({self.name})" if self.inverted else self.name


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return TOP


@dataclass(frozen=True)
class Name:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Conj:
    left: "Concept"
    right: "Concept"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Exists:
    role: Role
    filler: "Concept"

    def __str__(self) -> str:
        return f"(exists {self.role} . {self.filler})"


Concept = Union[Top, Name, Conj, Exists]


@dataclass(frozen=True)
class CI:
    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{_strip(self.lhs)} sub {_strip(self.rhs)}"


@dataclass(frozen=True)
class RI:
    sub: Role
    sup: Role

    def __str__(self) -> str:
        return f"{self.sub} subr {self.sup}"


@dataclass(frozen=True)
class Func:
    role: Role

    def __str__(self) -> str:
        return f"func({self.role})"


Axiom = Union[CI, RI, Func]


def _strip(c: Concept) -> str:
    s = str(c)
    if isinstance(c, (Conj, Exists)):
        return s[1:-1]
    return s


def concept_names(c: Concept) -> Iterator[str]:
    if isinstance(c, Name):
        yield c.name
    elif isinstance(c, Conj):
        yield from concept_names(c.left)
        yield from concept_names(c.right)
    elif isinstance(c, Exists):
        yield from concept_names(c.filler)


def concept_roles(c: Concept) -> Iterator[str]:
    if isinstance(c, Conj):
        yield from concept_roles(c.left)
        yield from concept_roles(c.right)
    elif isinstance(c, Exists):
        yield c.role.name
        yield from concept_roles(c.filler)


@dataclass(frozen=True)
class Ontology:
    axioms: tuple[Axiom, ...] = ()
    normalized: bool = False

    @property
    def cis(self) -> list[CI]:
        return [a for a in self.axioms if isinstance(a, CI)]

    @property
    def ris(self) -> list[RI]:
        return [a for a in self.axioms if isinstance(a, RI)]

    @property
    def funcs(self) -> list[Role]:
        return [a.role for a in self.axioms if isinstance(a, Func)]

    def concept_names(self) -> set[str]:
        out: set[str] = set()
        for ci in self.cis:
            out.update(concept_names(ci.lhs))
            out.update(concept_names(ci.rhs))
        return out

    def role_names(self) -> set[str]:
        out: set[str] = set()
        for ax in self.axioms:
            if isinstance(ax, CI):
                out.update(concept_roles(ax.lhs))
                out.update(concept_roles(ax.rhs))
            elif isinstance(ax, RI):
                out.update((ax.sub.name, ax.sup.name))
            else:
                out.add(ax.role.name)
        return out

    def signature(self) -> set[str]:
        return self.concept_names() | self.role_names()

    def __len__(self) -> int:
        return len(self.axioms)


class Database:
    """A finite set of unary and binary facts; some constants may be marked as nulls.

    Facts keep insertion order and duplicates are dropped.  Role successor
    indexes are built lazily and cover inverse roles.
    """

    def __init__(self, unary: Iterable[tuple[str, str]] = (),
                 binary: Iterable[tuple[str, str, str]] = (),
                 nulls: Iterable[str] = ()):
        self._unary: dict[tuple[str, str], None] = dict.fromkeys(unary)
        self._binary: dict[tuple[str, str, str], None] = dict.fromkeys(binary)
        self.nulls: set[str] = set(nulls)
        self._succ: dict | None = None
        self._types: dict | None = None
        self._adom: list[str] | None = None

    @property
    def unary(self) -> list[tuple[str, str]]:
        return list(self._unary)

    @property
    def binary(self) -> list[tuple[str, str, str]]:
        return list(self._binary)

    def add_unary(self, a: str, c: str) -> None:
        if (a, c) not in self._unary:
            self._unary[(a, c)] = None
            self._succ = self._types = self._adom = None

    def add_binary(self, r: str, c: str, d: str) -> None:
        if (r, c, d) not in self._binary:
            self._binary[(r, c, d)] = None
            self._succ = self._types = self._adom = None

    def has_unary(self, a: str, c: str) -> bool:
        return (a, c) in self._unary

    def has_binary(self, r: str, c: str, d: str) -> bool:
        return (r, c, d) in self._binary

    def adom(self) -> list[str]:
        if self._adom is None:
            seen: dict[str, None] = dict.fromkeys(c for _, c in self._unary)
            for _, c, d in self._binary:
                seen[c] = None
                seen[d] = None
            self._adom = list(seen)
        return list(self._adom)

    def constants(self) -> list[str]:
        return [c for c in self.adom() if c not in self.nulls]

    def _index(self) -> dict:
        if self._succ is None:
            succ: dict[tuple[str, bool, str], list[str]] = {}
            for r, c, d in self._binary:
                succ.setdefault((r, False, c), []).append(d)
                succ.setdefault((r, True, d), []).append(c)
            self._succ = succ
        return self._succ

    def successors(self, role: Role, c: str) -> list[str]:
        return self._index().get((role.name, role.inverted, c), [])

    def concepts_of(self, c: str) -> set[str]:
        if self._types is None:
            t: dict[str, set[str]] = {}
            for a, d in self._unary:
                t.setdefault(d, set()).add(a)
            self._types = t
        return self._types.get(c, set())

    def neighbours(self, c: str) -> Iterator[tuple[Role, str]]:
        """All (role, d) with role(c, d) holding, inverse roles included."""
        for (r, inv, e), ds in self._index().items():
            if e == c:
                for d in ds:
                    yield Role(r, inv), d

    def signature(self) -> set[str]:
        return {a for a, _ in self._unary} | {r for r, _, _ in self._binary}

    def copy(self) -> "Database":
        return Database(self._unary, self._binary, self.nulls)

    def fact_set(self) -> set[tuple]:
        return {(a, c) for a, c in self._unary} | set(self._binary)

    def __len__(self) -> int:
        return len(self._unary) + len(self._binary)

    def __eq__(self, other) -> bool:
        return isinstance(other, Database) and self.fact_set() == other.fact_set()

    def __repr__(self) -> str:
        return f"Database({len(self._unary)} unary, {len(self._binary)} binary)"


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True)
class CQ:
    answer_vars: tuple[str, ...]
    atoms: tuple[Atom, ...]
    name: str = "q"

    def variables(self) -> list[str]:
        """Variables in first-occurrence order (head first, then body)."""
        seen: dict[str, None] = dict.fromkeys(self.answer_vars)
        for at in self.atoms:
            for v in at.args:
                seen.setdefault(v)
        return list(seen)

    def quantified_vars(self) -> list[str]:
        ans = set(self.answer_vars)
        return [v for v in self.variables() if v not in ans]

    def signature(self) -> set[str]:
        return {a.pred for a in self.atoms}

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        return f"{self.name}({','.join(self.answer_vars)}) :- {body} ."


@dataclass(frozen=True)
class OMQ:
    ontology: Ontology
    sigma: frozenset[str]
    query: CQ

    @staticmethod
    def make(ontology: Ontology, query: CQ, sigma: Iterable[str] | None = None) -> "OMQ":
        if sigma is None:
            sigma = ontology.signature() | query.signature()
        return OMQ(ontology, frozenset(sigma), query)


# ---------------------------------------------------------------- tokenizing

_TOKEN = re.compile(r"\s*(?:(?P<sym>:-|[().,])|(?P<name>[A-Za-z0-9_'\-:@$]+))")


def _tokens(line: str, lineno: int) -> list[tuple[str, int]]:
    out = []
    pos = 0
    line = line.rstrip()
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m or m.end() == pos:
            col = pos + 1
            while col <= len(line) and line[col - 1].isspace():
                col += 1
            raise ParseError(f"unexpected character {line[col - 1]!r}", lineno, col)
        tok = m.group("name") or m.group("sym")
        out.append((tok, m.start(m.lastindex) + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, toks: list[tuple[str, int]], lineno: int):
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def peek(self) -> str | None:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def col(self) -> int:
        if self.i < len(self.toks):
            return self.toks[self.i][1]
        return self.toks[-1][1] + len(self.toks[-1][0]) if self.toks else 1

    def next(self) -> str:
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of input", self.lineno, self.col())
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.peek()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}", self.lineno, self.col())
        self.i += 1

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.lineno, self.col())

    def done(self) -> bool:
        return self.i >= len(self.toks)


def _is_ident(tok: str | None) -> bool:
    return bool(tok) and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok) is not None


def _name(cur: _Cursor, what: str) -> str:
    tok = cur.peek()
    if not _is_ident(tok) or tok in KEYWORDS:
        raise cur.error(f"expected {what} name, got {tok!r}")
    cur.next()
    return tok


def _role(cur: _Cursor) -> Role:
    if cur.peek() == "inv":
        cur.next()
        cur.expect("(")
        r = _name(cur, "role")
        cur.expect(")")
        return Role(r, True)
    return Role(_name(cur, "role"))


def _concept(cur: _Cursor) -> Concept:
    c = _unary_concept(cur)
    while cur.peek() == "and":
        cur.next()
        c = Conj(c, _unary_concept(cur))
    return c


def _unary_concept(cur: _Cursor) -> Concept:
    tok = cur.peek()
    if tok == "(":
        cur.next()
        c = _concept(cur)
        cur.expect(")")
        return c
    if tok == "top":
        cur.next()
        return Top()
    if tok == "exists":
        cur.next()
        r = _role(cur)
        cur.expect(".")
        return Exists(r, _unary_concept(cur))
    return Name(_name(cur, "concept"))


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_ontology(text: str) -> Ontology:
    """Parse one axiom per line; `#` starts a comment."""
    axioms: list[Axiom] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        toks = _tokens(line, lineno)
        cur = _Cursor(toks, lineno)
        words = [t for t, _ in toks]
        if words[0] == "func":
            cur.next()
            cur.expect("(")
            r = _role(cur)
            cur.expect(")")
            ax: Axiom = Func(r)
        elif "subr" in words:
            sub = _role(cur)
            cur.expect("subr")
            ax = RI(sub, _role(cur))
        elif "sub" in words:
            lhs = _concept(cur)
            cur.expect("sub")
            ax = CI(lhs, _concept(cur))
        else:
            raise ParseError("expected an axiom using 'sub', 'subr' or 'func'", lineno, 1)
        if not cur.done():
            raise cur.error(f"unexpected token {cur.peek()!r}")
        axioms.append(ax)
    return Ontology(tuple(dict.fromkeys(axioms)))


_CONST = re.compile(r"[A-Za-z0-9_'\-:@$]+")


def parse_database(text: str) -> Database:
    """Parse facts `A(c).` and `r(c,d).`; constants named `_n<k>` are nulls."""
    db = Database()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        cur = _Cursor(_tokens(line, lineno), lineno)
        while not cur.done():
            pred = _name(cur, "predicate") if cur.peek() != "top" else cur.next()
            cur.expect("(")
            args = [_const(cur)]
            if cur.peek() == ",":
                cur.next()
                args.append(_const(cur))
            cur.expect(")")
            cur.expect(".")
            for c in args:
                if re.fullmatch(NULL_PREFIX + r"\d+", c):
                    db.nulls.add(c)
            if len(args) == 1:
                db.add_unary(pred, args[0])
            else:
                db.add_binary(pred, args[0], args[1])
    return db


def _const(cur: _Cursor) -> str:
    tok = cur.peek()
    if tok is None or not _CONST.fullmatch(tok):
        raise cur.error(f"expected constant, got {tok!r}")
    cur.next()
    return tok


def parse_query(text: str) -> CQ:
    """Parse `q(v1,...,vk) :- atom, ..., atom .` (may span several lines)."""
    lines = [_strip_comment(line) for line in text.splitlines()]
    toks: list[tuple[str, int]] = []
    first = 0
    for lineno, line in enumerate(lines, 1):
        if line.strip():
            first = first or lineno
            toks.extend(_tokens(line, lineno))
    if not toks:
        raise ParseError("empty query", 1, 1)
    cur = _Cursor(toks, first)
    qname = _name(cur, "query")
    cur.expect("(")
    head: list[str] = []
    if cur.peek() != ")":
        head.append(_var(cur))
        while cur.peek() == ",":
            cur.next()
            head.append(_var(cur))
    cur.expect(")")
    cur.expect(":-")
    atoms: list[Atom] = []
    while True:
        pred = cur.next() if cur.peek() == "top" else _name(cur, "predicate")
        cur.expect("(")
        args = [_var(cur)]
        while cur.peek() == ",":
            cur.next()
            args.append(_var(cur))
        cur.expect(")")
        if len(args) > 2:
            raise cur.error(f"atom {pred} has arity {len(args)} > 2")
        atoms.append(Atom(pred, tuple(args)))
        if cur.peek() == ",":
            cur.next()
            continue
        break
    if cur.peek() == ".":
        cur.next()
    if not cur.done():
        raise cur.error(f"unexpected token {cur.peek()!r}")
    body_vars = {v for a in atoms for v in a.args}
    for v in head:
        if v not in body_vars:
            raise ParseError(f"answer variable {v} does not occur in the body", first, 1)
    return CQ(tuple(head), tuple(dict.fromkeys(atoms)), qname)


def _var(cur: _Cursor) -> str:
    tok = cur.peek()
    if not _is_ident(tok):
        raise cur.error(f"expected variable, got {tok!r}")
    cur.next()
    return tok


def print_ontology(o: Ontology) -> str:
    return "".join(f"{ax}\n" for ax in o.axioms)


def print_database(d: Database) -> str:
    lines = [f"{a}({c})." for a, c in d.unary]
    lines += [f"{r}({c},{e})." for r, c, e in d.binary]
    return "".join(line + "\n" for line in lines)


def print_query(q: CQ) -> str:
    return str(q) + "\n"


# -------------------------------------------------------------- normalization

def is_normal_ci(ci: CI) -> bool:
    lhs, rhs = ci.lhs, ci.rhs
    basic = (Name, Top)
    if isinstance(rhs, Name):
        if isinstance(lhs, basic):
            return True
        if isinstance(lhs, Conj):
            return isinstance(lhs.left, Name) and isinstance(lhs.right, Name)
        if isinstance(lhs, Exists):
            return isinstance(lhs.filler, basic)
    if isinstance(rhs, Exists) and isinstance(lhs, Name):
        return isinstance(rhs.filler, basic)
    return False


@dataclass
class _Normalizer:
    used: set[str]
    out: list[Axiom] = field(default_factory=list)
    counter: int = 0

    def fresh(self) -> str:
        while True:
            self.counter += 1
            n = f"{FRESH_PREFIX}{self.counter}"
            if n not in self.used:
                self.used.add(n)
                return n

    def emit(self, ax: Axiom) -> None:
        self.out.append(ax)

    def below(self, c: Concept) -> Concept:
        """A Name or Top X with c ⊑ X ensured by emitted axioms."""
        if isinstance(c, (Name, Top)):
            return c
        x = Name(self.fresh())
        self.ci(c, x)
        return x

    def above(self, c: Concept) -> Concept:
        """A Name or Top X with X ⊑ c ensured by emitted axioms."""
        if isinstance(c, (Name, Top)):
            return c
        x = Name(self.fresh())
        self.ci(x, c)
        return x

    def ci(self, lhs: Concept, rhs: Concept) -> None:
        if isinstance(rhs, Top):
            return
        if isinstance(rhs, Conj):
            if isinstance(lhs, (Conj, Exists)):
                lhs = self.below(lhs)
            self.ci(lhs, rhs.left)
            self.ci(lhs, rhs.right)
            return
        if isinstance(rhs, Exists):
            if isinstance(lhs, Top):
                x = Name(self.fresh())
                self.emit(CI(Top(), x))
                lhs = x
            elif not isinstance(lhs, Name):
                lhs = self.below(lhs)
            self.emit(CI(lhs, Exists(rhs.role, self.above(rhs.filler))))
            return
        # rhs is a concept name
        if isinstance(lhs, (Name, Top)):
            if lhs != rhs:
                self.emit(CI(lhs, rhs))
            return
        if isinstance(lhs, Exists):
            self.emit(CI(Exists(lhs.role, self.below(lhs.filler)), rhs))
            return
        left, right = self.below(lhs.left), self.below(lhs.right)
        if isinstance(left, Top):
            self.ci(right, rhs)
        elif isinstance(right, Top) or left == right:
            self.ci(left, rhs)
        else:
            self.emit(CI(Conj(left, right), rhs))


def normalize(o: Ontology) -> Ontology:
    """Rewrite every CI into one of the normal shapes, introducing fresh `_N` names."""
    norm = _Normalizer(used=o.concept_names())
    for ax in o.axioms:
        if isinstance(ax, CI) and not is_normal_ci(ax):
            norm.ci(ax.lhs, ax.rhs)
        elif not (isinstance(ax, CI) and ax.lhs == ax.rhs):
            norm.emit(ax)
    return Ontology(tuple(dict.fromkeys(norm.out)), normalized=True)
