"""Array kernels with a numba implementation and a pure-numpy fallback.

The backend is chosen once at import time from the environment variable
OMQE_BACKEND (``numba`` or ``numpy``; default ``numba`` when importable).
"""
from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("OMQE_BACKEND", "numba").strip().lower()

try:
    if _requested != "numba":
        raise ImportError
    from numba import njit
    BACKEND = "numba"
except ImportError:
    BACKEND = "numpy"
    njit = None


def _horn_numpy(nvars, units, ptr, body, head):
    """Round-based propagation: each round fires every clause whose body holds."""
    val = np.zeros(nvars, dtype=np.bool_)
    val[units] = True
    if len(head) == 0:
        return val
    lengths = np.diff(ptr)
    empty = lengths == 0
    val[head[empty]] = True
    nonempty = ~empty
    starts = ptr[:-1][nonempty]
    h = head[nonempty]
    while True:
        ok = np.logical_and.reduceat(val[body], starts) if len(body) else np.zeros(0, np.bool_)
        fire = h[ok]
        fire = fire[~val[fire]]
        if len(fire) == 0:
            return val
        val[fire] = True


def _member_numpy(keys, table):
    return np.isin(keys, table)


if BACKEND == "numba":
    @njit(cache=True)
    def _horn_numba(nvars, units, ptr, body, head):
        nclauses = len(head)
        val = np.zeros(nvars, dtype=np.bool_)
        missing = np.empty(nclauses, dtype=np.int64)
        # occurrence lists: variable -> clauses having it in the body
        occ_count = np.zeros(nvars + 1, dtype=np.int64)
        for k in range(len(body)):
            occ_count[body[k] + 1] += 1
        occ_ptr = np.cumsum(occ_count)
        fill = occ_ptr[:-1].copy()
        occ = np.empty(len(body), dtype=np.int64)
        for j in range(nclauses):
            for k in range(ptr[j], ptr[j + 1]):
                v = body[k]
                occ[fill[v]] = j
                fill[v] += 1
        stack = np.empty(nvars + len(units) + nclauses, dtype=np.int64)
        top = 0
        for u in units:
            if not val[u]:
                val[u] = True
                stack[top] = u
                top += 1
        for j in range(nclauses):
            missing[j] = ptr[j + 1] - ptr[j]
            if missing[j] == 0 and not val[head[j]]:
                val[head[j]] = True
                stack[top] = head[j]
                top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for k in range(occ_ptr[v], occ_ptr[v + 1]):
                j = occ[k]
                missing[j] -= 1
                if missing[j] == 0:
                    h = head[j]
                    if not val[h]:
                        val[h] = True
                        stack[top] = h
                        top += 1
        return val

    @njit(cache=True)
    def _member_numba(keys, table):
        out = np.zeros(len(keys), dtype=np.bool_)
        n = len(table)
        if n == 0 or len(keys) == 0:
            return out
        lo_v = table.min()
        span = table.max() - lo_v + 1
        if span <= 8 * (n + len(keys)):
            # dense key range: one pass to mark, one pass to probe
            seen = np.zeros(span, dtype=np.bool_)
            for j in range(n):
                seen[table[j] - lo_v] = True
            for i in range(len(keys)):
                k = keys[i] - lo_v
                out[i] = k >= 0 and k < span and seen[k]
            return out
        srt = np.sort(table)
        for i in range(len(keys)):
            k = keys[i]
            lo, hi = 0, n
            while lo < hi:
                mid = (lo + hi) // 2
                if srt[mid] < k:
                    lo = mid + 1
                else:
                    hi = mid
            out[i] = lo < n and srt[lo] == k
        return out


def horn_minimal_model(nvars: int, units: np.ndarray, ptr: np.ndarray,
                       body: np.ndarray, head: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Least model of a definite Horn formula given in CSR form."""
    backend = backend or BACKEND
    args = (int(nvars), np.asarray(units, np.int64), np.asarray(ptr, np.int64),
            np.asarray(body, np.int64), np.asarray(head, np.int64))
    if backend == "numba" and BACKEND == "numba":
        return _horn_numba(*args)
    return _horn_numpy(*args)


def member(keys: np.ndarray, table: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Boolean mask: which entries of `keys` occur in `table` (both int64)."""
    backend = backend or BACKEND
    keys = np.asarray(keys, np.int64)
    table = np.asarray(table, np.int64)
    if backend == "numba" and BACKEND == "numba":
        return _member_numba(keys, table)
    return _member_numpy(keys, table)
