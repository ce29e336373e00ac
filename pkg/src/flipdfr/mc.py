"""Monte Carlo harness: decoding trials, telemetry, and model comparison.

The reference objects in :mod:`codes` and :mod:`decoder` favour clarity over
speed, so the harness keeps an index-array twin of the same constructions: a
code is held as a (v, n) array whose column j lists the rows checking bit j.
Both representations are built from identical random streams, and a property
test pins their dense equality, so results are interchangeable.

Reproducibility contract: every trial derives its seeds from
(master_seed, point_index, chunk_index) alone, chunks are reduced in index
order, and early stopping trims at an exact trial index — so reports are
byte-identical for any worker count.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .codes import CodeParams, ParameterError, rng_for

__all__ = [
    "FastCode",
    "SweepPoint",
    "ExperimentPlan",
    "PointResult",
    "ExperimentReport",
    "decode_fast",
    "run_experiment",
    "syndrome_weight_samples",
    "clopper_pearson",
]


# ---------------------------------------------------------------------------
# fast code representation


@dataclass(frozen=True)
class FastCode:
    """Column-indexed parity-check matrix: col_rows[k, j] is the k-th row
    containing column j."""

    params: CodeParams
    col_rows: np.ndarray  # (v, n) int32

    @property
    def r(self):
        return self.params.r

    @classmethod
    def generate(cls, params, seed):
        if params.qc is not None:
            return cls._generate_qc(params, seed)
        return cls._generate_regular(params, seed)

    @classmethod
    def _generate_qc(cls, params, seed):
        # same stream as generate_qc_pcm: one weight-v first row per block
        n0, p = params.qc
        v = params.v
        rng = rng_for(seed, "matrix")
        col_rows = np.empty((v, params.n), dtype=np.int32)
        offs = np.arange(p, dtype=np.int64)[None, :]
        for b in range(n0):
            first = rng.choice(p, size=v, replace=False)
            col_rows[:, b * p : (b + 1) * p] = (offs - first[:, None]) % p
        return cls(params, col_rows)

    @classmethod
    def _generate_regular(cls, params, seed):
        n, v, w = params.n, params.v, params.w
        rng = rng_for(seed, "matrix")
        if n % w != 0:
            from .codes import generate_regular_pcm

            H = generate_regular_pcm(params, seed)
            col_rows = np.array(H.col_supports, dtype=np.int32).T
            return cls(params, np.ascontiguousarray(col_rows))
        m = n // w
        layers = rng.permuted(np.tile(np.arange(n), (v, 1)), axis=1)
        row_perm = rng.permutation(v * m)
        # column j sits at position pos[l, j] of layer l, hence in stacked
        # row l*m + pos//w; the row permutation then relabels stacked row i
        # to its final index inv[i]
        pos = np.argsort(layers, axis=1)
        stacked = pos // w + (np.arange(v) * m)[:, None]
        inv = np.empty(v * m, dtype=np.int32)
        inv[row_perm] = np.arange(v * m)
        return cls(params, inv[stacked].astype(np.int32))

    def to_dense(self):
        H = np.zeros((self.r, self.params.n), dtype=np.uint8)
        H[self.col_rows, np.arange(self.params.n)[None, :]] = 1
        return H


def _parity_hits(col_rows, cols, r):
    """Binary vector marking rows touched an odd number of times by `cols`."""
    counts = np.bincount(col_rows[:, cols].ravel(), minlength=r)
    return (counts & 1).astype(np.uint8)


@dataclass
class FastTrace:
    success: bool
    iterations: int
    syndrome_weights: list  # weight entering each iteration
    flips: list  # one boolean mask per iteration
    estimate: np.ndarray


def decode_fast(code, e_support, thresholds, iter_max, keep_flips=False):
    """Parallel bit-flipping decode of a weight-t error on a FastCode.

    Matches :func:`decoder.decode` bit for bit: one upc evaluation per
    iteration, every position at or above the threshold flips at once.
    """
    col_rows = code.col_rows
    r = code.r
    n = col_rows.shape[1]
    syn = _parity_hits(col_rows, np.asarray(e_support, dtype=np.int64), r)
    est = np.zeros(n, dtype=bool)
    sw = []
    flips = []
    it = 0
    while it < iter_max and syn.any():
        sw.append(int(syn.sum()))
        flip = syn[col_rows].sum(axis=0, dtype=np.int32) >= thresholds[it]
        est ^= flip
        syn ^= _parity_hits(col_rows, np.flatnonzero(flip), r)
        if keep_flips:
            flips.append(flip)
        it += 1
    return FastTrace(not syn.any(), it, sw, flips, est)


# ---------------------------------------------------------------------------
# experiment plans


@dataclass(frozen=True)
class SweepPoint:
    params: CodeParams
    t: int
    th1: int
    th2: int

    @property
    def thresholds(self):
        return (self.th1, self.th2)


@dataclass(frozen=True)
class ExperimentPlan:
    points: tuple
    trials: int
    master_seed: int
    failures_target: int = 0  # 0 = never stop early
    iter_max: int = 2
    telemetry: tuple = ()  # subset of TELEMETRY_FLAGS
    chunk_size: int = 256

    def digest(self):
        text = repr(self).encode()
        return hashlib.sha256(text).hexdigest()[:16]


TELEMETRY_FLAGS = (
    "syndrome-weight",
    "discrepancies",
    "class-flips",
    "equation-transitions",
)

_CLASS_KEYS = ("00", "01", "10", "11")


@dataclass
class PointResult:
    point: SweepPoint
    trials: int
    failures: int
    dfr: float
    ci_lo: float
    ci_hi: float
    telemetry: dict = field(default_factory=dict)

    def csv_row(self):
        pr = self.point.params
        p = pr.qc[1] if pr.qc is not None else ""
        return "%d,%s,%d,%d,%d,%d,%d,%d,%d,%.6e,%.6e,%.6e" % (
            pr.n, p, pr.v, pr.w, self.point.t, self.point.th1, self.point.th2,
            self.trials, self.failures, self.dfr, self.ci_lo, self.ci_hi,
        )


CSV_HEADER = "n,p,v,w,t,th1,th2,trials,failures,dfr,ci_lo,ci_hi"


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    results: list

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# plan=%s seed=%d\n" % (self.plan.digest(), self.plan.master_seed))
            fh.write(CSV_HEADER + "\n")
            for res in self.results:
                fh.write(res.csv_row() + "\n")


def clopper_pearson(failures, trials, confidence=0.95):
    """Exact binomial confidence interval for a failure count."""
    if trials <= 0:
        return (0.0, 1.0)
    alpha = 1.0 - confidence
    lo = 0.0 if failures == 0 else float(beta.ppf(alpha / 2, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(beta.ppf(1 - alpha / 2, failures + 1, trials - failures))
    return (lo, hi)


def _run_chunk(point, plan, point_index, chunk_index, size):
    """One deterministic chunk of trials; returns per-trial arrays."""
    rng = rng_for(plan.master_seed, "trial", point_index, chunk_index)
    seeds = rng.integers(0, 2**63, size=(size, 2))
    want_tel = bool(plan.telemetry)
    fail = np.zeros(size, dtype=bool)
    tel = {k: [] for k in plan.telemetry}
    n, t = point.params.n, point.t
    for i in range(size):
        code = FastCode.generate(point.params, int(seeds[i, 0]))
        e_rng = rng_for(int(seeds[i, 1]), "error")
        support = e_rng.choice(n, size=t, replace=False)
        trace = decode_fast(code, support, point.thresholds, plan.iter_max,
                            keep_flips=want_tel)
        fail[i] = not trace.success
        if want_tel:
            _record_telemetry(tel, point, code, support, trace)
    return fail, tel


def _record_telemetry(tel, point, code, support, trace):
    e = np.zeros(point.params.n, dtype=bool)
    e[support] = True
    if "syndrome-weight" in tel:
        tel["syndrome-weight"].append(trace.syndrome_weights[0] if trace.syndrome_weights else 0)
    flip1 = trace.flips[0] if trace.flips else np.zeros_like(e)
    if "discrepancies" in tel:
        d_plus = int(np.count_nonzero(flip1 & ~e))
        d_minus = int(np.count_nonzero(flip1 & e))
        tel["discrepancies"].append((d_plus, d_minus))
    if "class-flips" in tel:
        disc = flip1 ^ e  # estimate after iteration 1 is exactly flip1
        flip2 = trace.flips[1] if len(trace.flips) > 1 else np.zeros_like(e)
        row = []
        for a, b in ((0, 0), (0, 1), (1, 0), (1, 1)):
            cls = (e == bool(a)) & (disc == bool(b))
            row.append(int(np.count_nonzero(cls)))
            row.append(int(np.count_nonzero(cls & flip2)))
        tel["class-flips"].append(tuple(row))
    if "equation-transitions" in tel:
        syn1 = _parity_hits(code.col_rows, np.flatnonzero(flip1 ^ e), code.r)
        flip2 = trace.flips[1] if len(trace.flips) > 1 else np.zeros_like(e)
        syn2 = _parity_hits(code.col_rows, np.flatnonzero(flip1 ^ flip2 ^ e), code.r)
        become = int(np.count_nonzero(syn2 & ~syn1))
        stay = int(np.count_nonzero(syn2 & syn1))
        tel["equation-transitions"].append((become, stay, int(syn1.sum()), code.r))


def run_experiment(plan, threads=1):
    """Execute every sweep point of the plan.

    `threads` only selects how chunks are scheduled; the reduction is always
    in chunk order, so the report does not depend on it.
    """
    del threads  # single reduction order regardless of scheduling
    results = []
    for pi, point in enumerate(plan.points):
        n_chunks = math.ceil(plan.trials / plan.chunk_size)
        fail_parts = []
        tel_parts = []
        failures = 0
        done = 0
        for ci in range(n_chunks):
            size = min(plan.chunk_size, plan.trials - ci * plan.chunk_size)
            fail, tel = _run_chunk(point, plan, pi, ci, size)
            if plan.failures_target and failures + int(fail.sum()) >= plan.failures_target:
                # trim at the exact trial reaching the target
                hit = np.flatnonzero(np.cumsum(fail) + failures >= plan.failures_target)[0]
                fail = fail[: hit + 1]
                tel = {k: v[: hit + 1] for k, v in tel.items()}
                fail_parts.append(fail)
                tel_parts.append(tel)
                failures += int(fail.sum())
                done += len(fail)
                break
            fail_parts.append(fail)
            tel_parts.append(tel)
            failures += int(fail.sum())
            done += size
        telemetry = {}
        for key in plan.telemetry:
            merged = []
            for tel in tel_parts:
                merged.extend(tel[key])
            telemetry[key] = _summarize_telemetry(key, merged)
        lo, hi = clopper_pearson(failures, done)
        results.append(
            PointResult(point, done, failures,
                        failures / done if done else 0.0, lo, hi, telemetry)
        )
    return ExperimentReport(plan, results)


def _summarize_telemetry(key, values):
    if key == "syndrome-weight":
        return _histogram(values)
    if key == "discrepancies":
        arr = np.array(values, dtype=np.int64).reshape(-1, 2)
        return {"d_plus": _histogram(arr[:, 0]), "d_minus": _histogram(arr[:, 1])}
    if key == "class-flips":
        arr = np.array(values, dtype=np.int64).reshape(-1, 8)
        out = {}
        for i, ab in enumerate(_CLASS_KEYS):
            size = int(arr[:, 2 * i].sum())
            flips = int(arr[:, 2 * i + 1].sum())
            out[ab] = {"size": size, "flips": flips,
                       "flip_rate": flips / size if size else float("nan")}
        return out
    if key == "equation-transitions":
        arr = np.array(values, dtype=np.int64).reshape(-1, 4)
        unsat = int(arr[:, 2].sum())
        sat = int((arr[:, 3] - arr[:, 2]).sum())
        return {
            "become_rate": float(arr[:, 0].sum() / sat) if sat else float("nan"),
            "stay_rate": float(arr[:, 1].sum() / unsat) if unsat else float("nan"),
        }
    raise ValueError("unknown telemetry flag %r" % key)


def _histogram(values):
    arr = np.asarray(values, dtype=np.int64)
    counts = np.bincount(arr) if arr.size else np.zeros(1, dtype=np.int64)
    return {int(vv): int(cc) for vv, cc in enumerate(counts) if cc}


def histogram_to_csv(hist, path, plan=None):
    with open(path, "w") as fh:
        if plan is not None:
            fh.write("# plan=%s seed=%d\n" % (plan.digest(), plan.master_seed))
        fh.write("value,count\n")
        for vv in sorted(hist):
            fh.write("%d,%d\n" % (vv, hist[vv]))


def hist_tv_distance(hist, pmf):
    """Total variation distance between a count histogram and a model Pmf."""
    total = sum(hist.values())
    if total == 0:
        raise ValueError("empty histogram")
    acc = 0.0
    for vv in range(min(min(hist), pmf.lo), max(max(hist), pmf.hi) + 1):
        acc += abs(hist.get(vv, 0) / total - float(pmf[vv]))
    return acc / 2.0


# ---------------------------------------------------------------------------
# direct syndrome-weight sampling (no decoding)


def _distinct_rows(rng, count, t, n):
    """(count, t) integer array, entries of each row distinct, uniform."""
    vals = rng.integers(0, n, size=(count, t))
    while True:
        s = np.sort(vals, axis=1)
        bad = np.flatnonzero((s[:, 1:] == s[:, :-1]).any(axis=1))
        if bad.size == 0:
            return vals
        vals[bad] = rng.integers(0, n, size=(bad.size, t))


def _odd_multiplicity_counts(vals):
    """Per row of `vals`: how many distinct values occur an odd number of
    times.  Greedy adjacent pairing on the sorted row cancels values in
    twos; the leftovers are exactly the odd-multiplicity ones."""
    s = np.sort(vals, axis=1)
    t = s.shape[1]
    eq = s[:, 1:] == s[:, :-1]
    pairs = np.zeros(s.shape[0], dtype=np.int64)
    prev = np.zeros(s.shape[0], dtype=bool)
    for i in range(t - 1):
        take = eq[:, i] & ~prev
        pairs += take
        prev = take
    return t - 2 * pairs


def syndrome_weight_samples(params, t, count, master_seed, batch=20000):
    """`count` samples of the initial syndrome weight, each over a fresh
    random code and fresh weight-t error.

    Exploits the layered construction: the v layers place the t error
    columns at independent uniform distinct positions, and a row holds an
    odd number of them exactly when its syndrome bit is set.  For the
    quasi-cyclic shape the row of an error bit is its block offset minus a
    fresh uniform shift, reduced mod p.
    """
    if t < 0 or t > params.n:
        raise ParameterError("need 0 <= t <= n")
    out = np.empty(count, dtype=np.int64)
    done = 0
    idx = 0
    while done < count:
        size = min(batch, count - done)
        rng = rng_for(master_seed, "telemetry", idx)
        if params.qc is not None:
            out[done : done + size] = _qc_weight_batch(params, t, rng, size)
        else:
            out[done : done + size] = _regular_weight_batch(params, t, rng, size)
        done += size
        idx += 1
    return out


def _regular_weight_batch(params, t, rng, size):
    n, v, w = params.n, params.v, params.w
    if n % w != 0:
        raise ParameterError("fast sampler needs w | n")
    total = np.zeros(size, dtype=np.int64)
    for _ in range(v):
        pos = _distinct_rows(rng, size, t, n)
        total += _odd_multiplicity_counts(pos // w)
    return total


def _qc_weight_batch(params, t, rng, size):
    n0, p = params.qc
    v = params.v
    support = _distinct_rows(rng, size, t, params.n)
    block = support // p
    offset = support % p
    rows = np.empty((size, t * v), dtype=np.int64)
    # fresh first-row supports per sample and block: v distinct shifts each
    shifts = np.empty((size, n0, v), dtype=np.int64)
    for s in range(size):
        for b in range(n0):
            shifts[s, b] = rng.choice(p, size=v, replace=False)
    for k in range(v):
        sh = shifts[np.arange(size)[:, None], block, k]
        rows[:, k * t : (k + 1) * t] = (offset - sh) % p
    return _odd_multiplicity_counts(rows)
