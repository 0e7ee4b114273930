from pathlib import Path

import pytest

from omqe import OMQ, Reasoner, parse_database, parse_ontology, parse_query

DATA = Path(__file__).parent / "data"


def load(ont: str, db: str | None, query: str | None, sigma=None):
    """Reasoner, OMQ and database from the fixture directory."""
    o = parse_ontology((DATA / ont).read_text())
    q = parse_query((DATA / query).read_text()) if query else None
    d = parse_database((DATA / db).read_text()) if db else None
    Q = OMQ.make(o, q, sigma) if q else None
    return Reasoner(o), Q, d


@pytest.fixture
def researcher():
    return load("researcher.ont", "researcher.db", "researcher.q")


@pytest.fixture
def factory():
    return load("factory.ont", "factory.db", "factory.q")


@pytest.fixture
def factory_owned():
    return load("factory.ont", "factory_owned.db", "factory.q")


@pytest.fixture
def cycle():
    return load("cycle.ont", None, "cycle.q")


VERDICTS: list[str] = []


def verdict(n: int, ok: bool, detail: str) -> None:
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
