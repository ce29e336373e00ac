"""Optional process fan-out for the per-flip-count chain family.

Each modified chain is independent once the shared prefix snapshots exist,
so they can be distributed over worker processes.  Workers are forked so the
parent's state (backend context, snapshots) is inherited; when fork is
unavailable or only one CPU is present the caller's serial loop is used
instead.  Results are identical either way.
"""

import multiprocessing
import os

_CTX = None


def _worker(args):
    index, f = args
    ctx = _CTX
    ctx.backend.activate()
    snaps, R, v = ctx._par_state
    return index, ctx._phase2(snaps[ctx.t - f], R, v, f)


def worker_count(requested):
    """Effective number of worker processes for a request of `requested`."""
    avail = os.cpu_count() or 1
    return max(1, min(requested, avail))


def map_phase2(ctx, snaps, R, v, fmax, threads):
    threads = worker_count(threads)
    try:
        mp = multiprocessing.get_context("fork")
    except ValueError:
        threads = 1
    if threads <= 1:
        return [ctx._phase2(snaps[ctx.t - f], R, v, f) for f in range(fmax + 1)]
    global _CTX
    _CTX = ctx
    ctx._par_state = (snaps, R, v)
    try:
        with mp.Pool(threads) as pool:
            out = [None] * (fmax + 1)
            for index, state in pool.imap_unordered(
                _worker, [(f, f) for f in range(fmax + 1)]
            ):
                out[index] = state
        return out
    finally:
        del ctx._par_state
