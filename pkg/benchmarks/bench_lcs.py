"""Compare the LCS kernel backends (numba @njit vs row-vectorized numpy).

Run:  python benchmarks/bench_lcs.py

The same kernel can also be forced package-wide with
EDITTRACE_LCS_BACKEND=numpy|numba.
"""

from __future__ import annotations

import random
import time

import numpy as np

from edittrace._lcs import lcs_length
from edittrace.provenance import similarity, tokenize
from edittrace.forge import generate_gold_session


def bench_kernel(sizes=(32, 128, 512, 2048), repeats=20, vocab=64, seed=0):
    rng = random.Random(seed)
    print(f"{'n x m':>12} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    # Trigger JIT compilation outside the timed region.
    warm = np.array([1, 2, 3], dtype=np.int64)
    lcs_length(warm, warm, backend="numba")
    for n in sizes:
        a = np.array([rng.randrange(vocab) for _ in range(n)], dtype=np.int64)
        b = np.array([rng.randrange(vocab) for _ in range(n)], dtype=np.int64)
        times = {}
        for backend in ("numba", "numpy"):
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                result = lcs_length(a, b, backend=backend)
                best = min(best, time.perf_counter() - t0)
            times[backend] = best
            times[f"{backend}_result"] = result
        assert times["numba_result"] == times["numpy_result"]
        print(f"{n:>5} x {n:<5} {times['numba'] * 1e6:>10.1f}us "
              f"{times['numpy'] * 1e6:>10.1f}us {times['numpy'] / times['numba']:>8.1f}x")


def bench_session_labelling(n_sessions=20, seed=0):
    """End-to-end cost of the classifier's similarity work on synthetic sessions."""
    sessions = [generate_gold_session(seed + i, n_behaviors=25).log
                for i in range(n_sessions)]
    from edittrace.provenance import label_session

    t0 = time.perf_counter()
    for log in sessions:
        label_session(log)
    elapsed = time.perf_counter() - t0
    events = sum(len(log.events) for log in sessions)
    print(f"\nlabel_session over {n_sessions} sessions "
          f"({events} events): {elapsed:.2f}s "
          f"({1e3 * elapsed / n_sessions:.1f} ms/session)")


def bench_similarity_pairs(pairs=2000, seed=1):
    rng = random.Random(seed)
    snippets = [" ".join(rng.choices(
        ["total", "count", "for", "i", "in", "range", "(", ")", ":", "=",
         "items", "value", "return"], k=rng.randint(10, 120)))
        for _ in range(64)]
    tokenized = [tokenize(s) for s in snippets]
    t0 = time.perf_counter()
    for _ in range(pairs):
        a = tokenized[rng.randrange(len(tokenized))]
        b = tokenized[rng.randrange(len(tokenized))]
        similarity(a, b)
    elapsed = time.perf_counter() - t0
    print(f"similarity on {pairs} token-list pairs: {elapsed:.2f}s "
          f"({1e6 * elapsed / pairs:.0f} us/pair)")


if __name__ == "__main__":
    bench_kernel()
    bench_similarity_pairs()
    bench_session_labelling()
