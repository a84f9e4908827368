"""Longest-common-subsequence length kernel over integer-coded token arrays.

This is the hot loop of provenance classification: every typed run is scored
against every eligible chat code block, an O(n*m) dynamic program per pair.
Two interchangeable backends are provided:

* ``numba`` -- @njit scalar two-row DP (default when numba imports).
* ``numpy`` -- row-vectorized DP using a cumulative-maximum recurrence.

Selection: the ``EDITTRACE_LCS_BACKEND`` environment variable (``numba`` or
``numpy``); unset picks numba when available.  ``benchmarks/bench_lcs.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _lcs_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Row-vectorized LCS DP.

    For each row, candidate[j] = max(prev[j], prev[j-1] + 1 if match else 0);
    because DP rows are nondecreasing, the new row is the running maximum of
    the candidates.
    """
    m = b.shape[0]
    row = np.zeros(m + 1, dtype=np.int64)
    for ai in a:
        cand = np.maximum(row[1:], np.where(b == ai, row[:-1] + 1, 0))
        np.maximum.accumulate(cand, out=cand)
        row[1:] = cand
    return int(row[m])


if _HAVE_NUMBA:

    @njit(cache=True)
    def _lcs_numba(a: np.ndarray, b: np.ndarray) -> int:  # pragma: no cover - jitted
        n = a.shape[0]
        m = b.shape[0]
        prev = np.zeros(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(n):
            ai = a[i]
            for j in range(m):
                if ai == b[j]:
                    cur[j + 1] = prev[j] + 1
                else:
                    up = prev[j + 1]
                    left = cur[j]
                    cur[j + 1] = up if up > left else left
            prev, cur = cur, prev
        return int(prev[m])


def _pick_backend() -> str:
    requested = os.environ.get("EDITTRACE_LCS_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("EDITTRACE_LCS_BACKEND=numba but numba is not importable")
        return "numba"
    if requested:
        raise ValueError(f"unknown EDITTRACE_LCS_BACKEND {requested!r}")
    return "numba" if _HAVE_NUMBA else "numpy"


BACKEND = _pick_backend()


def lcs_length(a: np.ndarray, b: np.ndarray, backend: str | None = None) -> int:
    """LCS length of two int64 arrays using the selected backend."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    which = backend or BACKEND
    if which == "numba":
        return _lcs_numba(a, b)
    return _lcs_numpy(a, b)


def encode_pair(a: list[str], b: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Map two token lists onto a shared integer alphabet."""
    codes: dict[str, int] = {}
    def enc(tokens: list[str]) -> np.ndarray:
        out = np.empty(len(tokens), dtype=np.int64)
        for i, tok in enumerate(tokens):
            code = codes.get(tok)
            if code is None:
                code = len(codes)
                codes[tok] = code
            out[i] = code
        return out
    return enc(a), enc(b)
