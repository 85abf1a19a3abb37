"""Deterministic chunked execution of Monte Carlo work.

Work of ``n`` samples is cut into fixed-size chunks; chunk ``i`` draws from
``SeedSequence(master_seed).spawn(...)[i]``.  Results are concatenated in
chunk order, so the output depends only on (master_seed, n, chunk_size), never
on the number of workers.  Workers are threads: the compiled kernels release
the GIL, and each chunk owns its Generator, so no state is shared.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_CHUNK = 50_000


def as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return None
    return np.random.SeedSequence(seed)


def chunk_sizes(n, chunk=DEFAULT_CHUNK):
    n = int(n)
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _call(args):
    fn, size, ss = args
    return fn(size, np.random.default_rng(ss))


def run_chunks(fn, n, seed, workers=1, chunk=DEFAULT_CHUNK):
    """Evaluate ``fn(size, rng)`` over chunks and return the list of results.

    ``seed`` may be an int, a SeedSequence or a Generator.  A Generator is used
    as one sequential stream (no chunk seeding, ``workers`` ignored).
    """
    if isinstance(seed, np.random.Generator):
        return [fn(int(n), seed)]
    ss = as_seed_sequence(seed)
    sizes = chunk_sizes(n, chunk)
    children = ss.spawn(len(sizes))
    jobs = [(fn, s, c) for s, c in zip(sizes, children)]
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_call, jobs))
