"""Parallel bit-flipping decoder with per-iteration telemetry.

Each iteration counts, for every position j, the unsatisfied parity checks
involving j (upc_j) against the syndrome the iteration entered with, then
flips every position with upc_j >= th at once and updates the syndrome by
XOR of the flipped columns.  Ties (upc == th) flip.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .codes import ErrorVector, ParityCheckMatrix, Syndrome

__all__ = ["ThresholdSchedule", "DecodeTrace", "compute_upc", "decode", "classify_positions"]


@dataclass(frozen=True)
class ThresholdSchedule:
    """Fixed per-iteration flip thresholds, each in [ceil((v+1)/2), v]."""

    per_iteration: tuple

    @classmethod
    def majority(cls, v, iter_max):
        return cls((int(np.ceil((v + 1) / 2)),) * iter_max)

    @classmethod
    def fixed(cls, values):
        return cls(tuple(int(x) for x in values))

    def validate(self, v, iter_max):
        if len(self.per_iteration) < iter_max:
            raise ValueError("schedule shorter than iteration budget")
        lo = (v + 1 + 1) // 2
        for th in self.per_iteration[:iter_max]:
            if not (lo <= th <= v):
                raise ValueError("threshold %d outside [%d, %d]" % (th, lo, v))

    def __getitem__(self, it):
        return self.per_iteration[it]


@dataclass
class IterationRecord:
    syndrome_weight_in: int
    threshold: int
    flipped: tuple
    upc: Optional[np.ndarray] = None
    class_counts: Optional[tuple] = None  # (e00, e01, e10, e11), truth only
    discrepancy: Optional[int] = None  # |e xor ebar| after the iteration


@dataclass
class DecodeTrace:
    iterations: List[IterationRecord]
    decode_ok: bool
    estimate: ErrorVector
    final_syndrome: Syndrome


def _upc_array(H, s_bits):
    n = H.params.n
    upc = np.zeros(n, dtype=np.int64)
    for i in np.nonzero(s_bits)[0]:
        upc[list(H.row_supports[i])] += 1
    return upc


def compute_upc(H, s):
    """upc_j = number of unsatisfied checks whose support contains j."""
    if s.r != H.params.r:
        raise ValueError("dimension mismatch between H and s")
    return _upc_array(H, np.asarray(s.bits, dtype=np.uint8))


def classify_positions(e, ebar1):
    """Counts (e00, e01, e10, e11) of the classes J_ab, a = true error bit,
    b = post-iteration discrepancy bit (e xor ebar)."""
    if e.n != ebar1.n:
        raise ValueError("length mismatch")
    te = set(e.support)
    tb = set(ebar1.support)
    t = len(te)
    e11 = len(te - tb)  # still discrepant error bits (not flipped)
    e10 = t - e11
    e01 = len(tb - te)  # clean bits wrongly flipped
    e00 = e.n - t - e01
    return (e00, e01, e10, e11)


def decode(H, s, sched, iter_max, truth=None, keep_upc=False):
    """Run the parallel bit-flipping decoder for at most iter_max iterations.

    Telemetry: per-iteration syndrome weight, flipped set, and - when the
    true error is supplied - the J-class counts and residual discrepancy.
    decode_ok is True iff the final working syndrome is zero.
    """
    if iter_max < 1:
        raise ValueError("iter_max must be >= 1")
    v = H.params.v
    sched.validate(v, iter_max)
    s_bits = np.asarray(s.bits, dtype=np.uint8).copy()
    ebar = np.zeros(H.params.n, dtype=np.uint8)
    records = []
    for it in range(iter_max):
        if not s_bits.any():
            break
        th = sched[it]
        sw_in = int(np.count_nonzero(s_bits))
        upc = _upc_array(H, s_bits)
        flips = np.nonzero(upc >= th)[0]
        for j in flips:
            ebar[j] ^= 1
            for i in H.col_supports[j]:
                s_bits[i] ^= 1
        rec = IterationRecord(
            syndrome_weight_in=sw_in,
            threshold=th,
            flipped=tuple(int(j) for j in flips),
            upc=upc if keep_upc else None,
        )
        records.append(rec)
        if truth is not None:
            est = ErrorVector(H.params.n, tuple(int(j) for j in np.nonzero(ebar)[0]))
            rec.class_counts = classify_positions(truth, est)
            rec.discrepancy = len(set(truth.support) ^ set(est.support))
    estimate = ErrorVector(H.params.n, tuple(int(j) for j in np.nonzero(ebar)[0]))
    final = Syndrome(H.params.r, tuple(int(b) for b in s_bits))
    return DecodeTrace(records, final.is_zero(), estimate, final)
