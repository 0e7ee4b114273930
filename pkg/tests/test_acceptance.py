"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
import random
import subprocess
import sys
import time
from itertools import combinations

from conftest import load, verdict
from helpers import SIGMA
from omqe import OMQ, Database, Reasoner, Unsatisfiable, parse_ontology
from omqe import bench
from omqe.analysis import classify, fa_extension, is_acyclic, is_free_connex
from omqe.enumeration import enumerate_complete
from omqe.gen import (bad_path, extract_pairs, gen_bmm_instance, gen_hyperclique_db, gen_mm_db, gen_triangle_db,
                      hyperclique_omq, mm_omq, random_matrix, triangle_omq)
from omqe.horn import chase, functional_clash, is_satisfiable, naive_chase
from omqe.oracle import (brute_answers, brute_hyperclique, brute_mat_product, brute_minimal_partial,
                         brute_triangle)
from omqe.partial import MULTI, SINGLE, enumerate_partial, preceq
from omqe.random_instances import random_database, random_omq, random_ontology, random_witnessed
from omqe.umodel import build_u_dq, functionality_violations
from test_umodel import check_model


def _instances(seed0: int, count: int, nconst: int, nanswer: int, keep=lambda r, Q: True):
    """`count` consistent random instances (alternating witnessed and independent draws)."""
    out = []
    seed = seed0
    while len(out) < count:
        rng = random.Random(seed)
        if seed % 2 == 0:
            Q, d = random_witnessed(rng, nvars=rng.randint(2, 5), nanswer=rng.randint(1, nanswer),
                                    nconst=rng.randint(1, nconst))
        else:
            Q = random_omq(rng, 6, rng.randint(1, 4), rng.randint(0, nanswer))
            Q = OMQ.make(Q.ontology, Q.query, SIGMA)
            d = random_database(rng, rng.randint(1, nconst), rng.randint(0, 2 * nconst))
        seed += 1
        reasoner = Reasoner(Q.ontology)
        if not keep(reasoner, Q):
            continue
        try:
            want = brute_answers(reasoner, Q, d)
        except Unsatisfiable:
            continue
        assert len(d.adom()) <= nconst and len(Q.query.answer_vars) <= nanswer
        out.append((reasoner, Q, d, want))
    return out


def test_criterion_01_researcher():
    t0 = time.perf_counter()
    reasoner, Q, d = load("researcher.ont", "researcher.db", "researcher.q")
    complete = set(enumerate_complete(reasoner, Q, d))
    partial = set(enumerate_partial(reasoner, Q, d))
    dt = time.perf_counter() - t0
    verdict(1, complete == set() and partial == {("mary", "*")} and dt < 1.0,
            f"Q(D)={complete or '{}'} Q(D)*={partial} in {dt:.3f}s")


def test_criterion_02_factory():
    reasoner, Q, d = load("factory.ont", "factory.db", "factory.q")
    base = set(enumerate_partial(reasoner, Q, d, MULTI))
    reasoner, Q, d = load("factory.ont", "factory_owned.db", "factory.q")
    ext = set(enumerate_partial(reasoner, Q, d, MULTI))
    verdict(2, base == {("*1", "*2", "*2")} and ext == {("*1", "tesla", "tesla")},
            f"base {base}, with hasOwner(gigafactory1,tesla) {ext}")


def test_criterion_03_cycle_query():
    reasoner, Q, _ = load("cycle.ont", None, "cycle.q")
    ext = fa_extension(reasoner, Q.query)
    shapes = [a.args for a in ext.atoms]
    atoms = list(ext.atoms)
    ok = (shapes == [("x", "y", "z"), ("y", "z"), ("z", "x", "y"), ("t", "y")]
          and is_acyclic(atoms) is not None
          and is_free_connex(atoms, ("x", "t", "y")) is not None
          and is_free_connex(atoms, ("x", "t")) is None
          and is_acyclic(Q.query) is None)
    v = classify(reasoner, Q)
    ok = ok and v.complete_eligible and v.orig_acyclic and not v.orig_free_connex and not v.q_acyclic
    verdict(3, ok, f"q+ atoms {shapes}; (x,t,y) free-connex, (x,t) not, q cyclic; x+={ext.extended_answer}")


def test_criterion_04_chase_equivalence():
    t0 = time.perf_counter()
    mismatches = checked = 0
    for seed in range(200):
        rng = random.Random(seed)
        reasoner = Reasoner(random_ontology(rng, 6, func_density=0.3))
        d = random_database(rng, rng.randint(1, 8), rng.randint(0, 14))
        try:
            fast = chase(reasoner, d).fact_set()
        except Unsatisfiable:
            fast = None
        slow = naive_chase(reasoner, d)
        slow = None if functional_clash(reasoner, slow) else slow.fact_set()
        mismatches += fast != slow
        checked += 1
    dt = time.perf_counter() - t0
    verdict(4, mismatches == 0 and checked >= 200 and dt < 30, f"{checked} instances, {mismatches} mismatches, {dt:.1f}s")


def test_criterion_05_complete_answers():
    insts = _instances(10_000, 200, 12, 3, keep=lambda r, Q: classify(r, Q).complete_eligible)
    bad = nonempty = 0
    for reasoner, Q, d, want in insts:
        got = list(enumerate_complete(reasoner, Q, d))
        bad += len(got) != len(set(got)) or set(got) != want
        nonempty += bool(want)
    verdict(5, bad == 0, f"{len(insts)} eligible instances ({nonempty} with answers), {bad} mismatches")


def test_criterion_06_minimal_partial_answers():
    insts = _instances(20_000, 100, 5, 3)
    bad = wild = 0
    for reasoner, Q, d, _ in insts:
        for mode in (SINGLE, MULTI):
            got = list(enumerate_partial(reasoner, Q, d, mode))
            want = brute_minimal_partial(reasoner, Q, d, mode)
            antichain = all(not preceq(a, b, mode) for a in got for b in got if a != b)
            bad += set(got) != want or len(got) != len(set(got)) or not antichain
            wild += any(v.startswith("*") for t in got for v in t)
    verdict(6, bad == 0, f"{len(insts)} instances x 2 modes, {wild} outputs with wildcards, {bad} mismatches")


def test_criterion_07_bmm_reduction():
    rng = random.Random(7)
    bad = nonzero = 0
    for _ in range(50):
        m1, m2 = random_matrix(4, 0.3, rng), random_matrix(4, 0.3, rng)
        Q, d = gen_bmm_instance(m1, m2)
        got = {(a, b) for a, z, b in enumerate_partial(Reasoner(Q.ontology), Q, d) if z == "*"}
        want = {(str(a), str(b)) for a, b in brute_mat_product(m1, m2)}
        bad += got != want
        nonzero += bool(want)
    verdict(7, bad == 0, f"50 pairs of 4x4 matrices ({nonzero} nonzero products), {bad} mismatches")


def test_criterion_08_triangle_and_hyperclique():
    rng = random.Random(8)
    Q = triangle_omq()
    reasoner = Reasoner(Q.ontology)
    bad_t = tri = 0
    for _ in range(30):
        n = rng.randint(3, 8)
        edges = [(a, b) for a, b in combinations(range(1, n + 1), 2) if rng.random() < 0.35] or [(1, 2)]
        has = brute_triangle(edges)
        bad_t += bool(brute_answers(reasoner, Q, gen_triangle_db(reasoner, Q, edges))) != has
        tri += has
    H = hyperclique_omq()
    hreasoner = Reasoner(H.ontology)
    bad_h = clique = 0
    for i in range(20):
        n = rng.randint(4, 6)
        hyper = [e for e in combinations(range(1, n + 1), 3) if rng.random() < (0.9 if n == 4 else 0.45)]
        if not hyper:
            hyper = [(1, 2, 3)]
        has = brute_hyperclique(hyper, 3)
        bad_h += bool(brute_answers(hreasoner, H, gen_hyperclique_db(hreasoner, H, hyper))) != has
        clique += has
    verdict(8, bad_t == 0 and bad_h == 0,
            f"triangle: 30 graphs ({tri} with a triangle), {bad_t} mismatches; "
            f"hyperclique k=3: 20 hypergraphs ({clique} with a clique), {bad_h} mismatches")


def test_criterion_09_matrix_multiplication_reduction():
    rng = random.Random(9)
    Q = mm_omq()
    reasoner = Reasoner(Q.ontology)
    path = bad_path(reasoner, Q.query)
    bad = 0
    for _ in range(20):
        m1, m2 = random_matrix(3, 0.4, rng), random_matrix(3, 0.4, rng)
        d = gen_mm_db(reasoner, Q, m1, m2)
        want = {(str(a), str(c)) for a, c in brute_mat_product(m1, m2)}
        bad += extract_pairs(brute_answers(reasoner, Q, d), path) != want
    ratios: dict[int, float] = {}
    for n in range(3, 7):
        for _ in range(10):
            m1, m2 = random_matrix(n, 0.4, rng), random_matrix(n, 0.4, rng)
            size = len(m1) + len(m2) + len(brute_mat_product(m1, m2))
            count = len(list(enumerate_partial(reasoner, Q, gen_mm_db(reasoner, Q, m1, m2))))
            ratios[n] = max(ratios.get(n, 0.0), count / max(size, 1))
    c = max(ratios[3], ratios[4])  # fitted on the two smallest sizes
    ok_bound = all(ratios[n] <= c for n in (5, 6))
    verdict(9, bad == 0 and ok_bound,
            f"product pairs: 20 3x3 matrix pairs, {bad} mismatches; answer bound: C={c:.2f} fitted on n=3,4, "
            f"max ratio n=5 {ratios[5]:.2f}, n=6 {ratios[6]:.2f}")


def test_criterion_10_universal_model_soundness():
    insts = _instances(30_000, 100, 5, 3)
    bad = 0
    for reasoner, Q, d, _ in insts:
        u = build_u_dq(reasoner, d, Q)
        try:
            check_model(u)
            assert not list(functionality_violations(reasoner, u.db))
        except AssertionError:
            bad += 1
            continue
        consts = set(d.adom())
        restricted = {f for f in u.db.fact_set() if all(x in consts for x in f[1:])}
        bad += restricted != naive_chase(reasoner, d).fact_set()
        for mode in (SINGLE, MULTI):
            bad += set(enumerate_partial(reasoner, Q, d, mode, model=u)) != brute_minimal_partial(reasoner, Q, d, mode)
    verdict(10, bad == 0, f"{len(insts)} instances: model checks, chase restriction and both wildcard modes; {bad} failures")


def test_criterion_11_scaling():
    # a dedicated process, as for any benchmark: the heap left behind by the
    # other few thousand tests would otherwise be part of what is timed
    out = subprocess.run([sys.executable, "-m", "omqe.cli", "bench", "--sizes", "12-17", "--repeats", "3"],
                         capture_output=True, text=True, check=True).stdout
    rows = [bench.ScalingRow(int(a), float(b), int(c), float(d), float(e))
            for a, b, c, d, e in (line.split(",") for line in out.splitlines()[1:])]
    steps = bench.growth_ratios(rows)
    growth = bench.fitted_growth(rows)
    delay_ratio = rows[-1].max_delay_us / rows[0].median_delay_us
    ok = growth <= 2.6 and delay_ratio <= 3.0
    verdict(11, ok, f"preprocess growth per doubling {growth:.2f} fitted over 2^12..2^17 (<= 2.6; steps "
                    f"{', '.join(f'{g:.2f}' for g in steps)}); max delay at 2^17 {rows[-1].max_delay_us:.2f}us = "
                    f"{delay_ratio:.2f}x median at 2^12 {rows[0].median_delay_us:.2f}us (<= 3)")


def test_criterion_12_satisfiability():
    o1 = Reasoner(parse_ontology("func(r)\n"))
    rej1 = not is_satisfiable(o1, Database(binary=[("r", "a", "b1"), ("r", "a", "b2")]))
    o2 = Reasoner(parse_ontology("r subr s\nfunc(s)\n"))
    rej2 = not is_satisfiable(o2, Database(binary=[("r", "a", "b1"), ("s", "a", "b2")]))
    accepted = 0
    for seed in range(100):
        rng = random.Random(seed)
        reasoner = Reasoner(random_ontology(rng, 6, func_density=0.0))
        accepted += is_satisfiable(reasoner, random_database(rng, 6, 10))
    verdict(12, rej1 and rej2 and accepted == 100,
            f"func clash rejected={rej1}, role-inclusion clash rejected={rej2}, functionality-free accepted {accepted}/100")
