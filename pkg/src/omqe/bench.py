"""Scaling and backend benchmarks over generated BMM databases."""
from __future__ import annotations

import gc
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .enumeration import preprocess_complete
from .gen import gen_bmm_bench
from .horn import build_horn, minimal_model
from .reasoner import Reasoner
from .syntax import Database, parse_ontology

CSV_COLUMNS = ("dbsize", "preprocess_ms", "answers", "max_delay_us", "median_delay_us")


@dataclass
class ScalingRow:
    dbsize: int
    preprocess_ms: float
    answers: int
    max_delay_us: float
    median_delay_us: float

    def csv(self) -> str:
        return (f"{self.dbsize},{self.preprocess_ms:.3f},{self.answers},"
                f"{self.max_delay_us:.3f},{self.median_delay_us:.3f}")


def measure_delays(it) -> tuple[int, list[int]]:
    """Drain an answer iterator; return the count and the gaps (ns) between successive answers.

    Gaps are taken on the thread CPU clock with the garbage collector off,
    so that scheduler preemption and collection pauses do not show up as
    enumeration delay.  Answers are counted, not printed.
    """
    clock = time.thread_time_ns
    gaps: list[int] = []
    count = 0
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        last = clock()
        for _ in it:
            now = clock()
            if count:
                gaps.append(now - last)
            count += 1
            last = clock()
    finally:
        if was_enabled:
            gc.enable()
    return count, gaps


def _one_run(Q, d, reasoner) -> tuple[float, int, np.ndarray]:
    # like timeit: start from a collected heap and keep the cyclic collector
    # out of the timed region; its full passes scale with the live heap
    gc.collect()
    gc.disable()
    try:
        t0 = time.perf_counter()
        state = preprocess_complete(reasoner, Q, d)
        prep = (time.perf_counter() - t0) * 1e3
    finally:
        gc.enable()
    count, gaps = measure_delays(state.answers(named=False))
    return prep, count, np.asarray(gaps, np.int64)


def _summarize(nfacts: int, runs: list) -> ScalingRow:
    counts = {c for _, c, _ in runs}
    if len(counts) != 1:
        raise RuntimeError(f"answer counts differ between runs: {sorted(counts)}")
    gaps = np.min(np.stack([g for _, _, g in runs]), axis=0) if runs[0][2].size else np.zeros(0)
    mx = float(gaps.max()) / 1e3 if gaps.size else 0.0
    med = float(np.median(gaps)) / 1e3 if gaps.size else 0.0
    return ScalingRow(nfacts, min(p for p, _, _ in runs), runs[0][1], mx, med)


def run_size(nfacts: int, repeats: int = 3, seed: int = 0) -> ScalingRow:
    """Best of `repeats` runs on one generated database.

    Preprocessing time is the fastest run.  Enumeration order is
    deterministic, so the k-th gap of every run measures the same step;
    each gap keeps its fastest run before max and median are taken.  A
    stall caused by the machine rarely hits the same step in every run,
    while a step that is slow in the engine is slow in all of them.
    """
    Q, d = gen_bmm_bench(nfacts, seed)
    reasoner = Reasoner(Q.ontology)
    return _summarize(len(d), [_one_run(Q, d, reasoner) for _ in range(repeats)])


def scaling(sizes, repeats: int = 3, seed: int = 0) -> list[ScalingRow]:
    """Best-of-`repeats` rows for every size.

    Repeats go round-robin over the sizes, so a slow stretch of the
    machine costs one run of a few sizes rather than every run of one.
    """
    run_size(min(sizes), 1, seed)  # warm-up: kernel compilation, imports
    inst = []
    for n in sizes:
        Q, d = gen_bmm_bench(n, seed)
        inst.append((Q, d, Reasoner(Q.ontology)))
    runs: list[list] = [[] for _ in sizes]
    for _ in range(repeats):
        for i, (Q, d, reasoner) in enumerate(inst):
            runs[i].append(_one_run(Q, d, reasoner))
    return [_summarize(len(d), r) for (_, d, _), r in zip(inst, runs)]


def growth_ratios(rows: list[ScalingRow]) -> list[float]:
    """Preprocessing time ratio between consecutive sizes, normalized to a doubling."""
    out = []
    for a, b in zip(rows, rows[1:]):
        scale = np.log2(b.dbsize / a.dbsize) if b.dbsize > a.dbsize else 1.0
        out.append((b.preprocess_ms / a.preprocess_ms) ** (1.0 / scale))
    return out


def fitted_growth(rows: list[ScalingRow]) -> float:
    """Preprocessing growth per doubling from a least-squares fit of log time on log size."""
    x = np.log2([r.dbsize for r in rows])
    y = np.log2([r.preprocess_ms for r in rows])
    return float(2.0 ** np.polyfit(x, y, 1)[0])


def _best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def chain_instance(n: int) -> tuple[Reasoner, Database]:
    """A derivation chain of length n: numpy propagation needs n rounds here."""
    d = Database([("A", f"c{n}")], [("r", f"c{i}", f"c{i + 1}") for i in range(n)])
    return Reasoner(parse_ontology("exists r . A sub A\n")), d


def backend_comparison(sizes, repeats: int = 3, seed: int = 0, max_chain: int = 4096) -> list[dict]:
    """Horn least-model and membership kernels under both backends (ms, best of `repeats`).

    Two Horn workloads per size: the BMM benchmark database, which settles
    in a couple of propagation rounds, and a derivation chain (capped at
    `max_chain` links, since the round-based fallback is quadratic there).
    """
    rows = []
    for n in sizes:
        Q, d = gen_bmm_bench(n, seed)
        chain_len = min(n, max_chain)
        workloads = [("bmm", build_horn(Reasoner(Q.ontology), d), len(d)),
                     ("chain", build_horn(*chain_instance(chain_len)), chain_len + 1)]
        rng = np.random.default_rng(seed)
        keys = rng.integers(0, 4 * n, n, dtype=np.int64)
        table = np.unique(rng.integers(0, 4 * n, n, dtype=np.int64))
        for name, f, size in workloads:
            row = {"workload": name, "dbsize": size, "horn_vars": f.nvars, "horn_clauses": len(f)}
            for backend in ("numba", "numpy"):
                if backend == "numba" and _kernels.BACKEND != "numba":
                    row["horn_numba_ms"] = row["member_numba_ms"] = float("nan")
                    continue
                minimal_model(f, backend)  # compile outside the timing
                _kernels.member(keys[:4], table[:4], backend)
                row[f"horn_{backend}_ms"] = _best(lambda: minimal_model(f, backend), repeats)
                row[f"member_{backend}_ms"] = _best(lambda: _kernels.member(keys, table, backend), repeats)
            rows.append(row)
    return rows
