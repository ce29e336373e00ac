"""Parity-check matrix generation, error sampling, and syndrome computation
for (v,w)-regular and quasi-cyclic LDPC/MDPC codes.

All randomness flows through :func:`rng_for`, which splits a 64-bit master
seed by purpose tag and index via numpy's SeedSequence, so every artifact is
reproducible independently of thread count.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "CodeParams",
    "ParityCheckMatrix",
    "ErrorVector",
    "Syndrome",
    "rng_for",
    "generate_regular_pcm",
    "generate_qc_pcm",
    "sample_error",
    "syndrome",
    "export_pcm",
    "import_pcm",
]


class ParameterError(ValueError):
    """Raised for infeasible code parameters (CLI exit code 2)."""


_PURPOSES = {"matrix": 0xA1, "error": 0xB2, "trial": 0xC3, "telemetry": 0xD4}


def rng_for(master_seed, purpose, *indices):
    """Deterministic per-purpose random generator.

    Stream split rule: SeedSequence(master_seed, purpose_code, *indices).
    Distinct (purpose, indices) tuples yield independent streams.
    """
    code = _PURPOSES[purpose]
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), code, *map(int, indices)])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class CodeParams:
    """Ensemble descriptor for a (v,w)-regular code of length n, redundancy r."""

    n: int
    k: int
    v: int
    w: int
    qc: Optional[Tuple[int, int]] = None  # (n0, p)

    def __post_init__(self):
        if not (0 < self.k < self.n):
            raise ParameterError("need 0 < k < n")
        if self.qc is not None:
            n0, p = self.qc
            if self.n != n0 * p or self.k != (n0 - 1) * p:
                raise ParameterError("qc shape requires n = n0*p, k = (n0-1)*p")
            if self.w != n0 * self.v:
                raise ParameterError("qc codes are (v, n0*v)-regular")
            if self.v >= p:
                raise ParameterError("qc requires v < p")
        else:
            if self.n * self.v != self.r * self.w:
                raise ParameterError("regularity needs v*n = w*r")

    @property
    def r(self):
        return self.n - self.k

    @classmethod
    def regular(cls, n, r, v, w):
        return cls(n=n, k=n - r, v=v, w=w)

    @classmethod
    def quasi_cyclic(cls, n0, p, v):
        return cls(n=n0 * p, k=(n0 - 1) * p, v=v, w=n0 * v, qc=(n0, p))


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary r x n matrix stored as row supports and column supports."""

    params: CodeParams
    row_supports: tuple  # r tuples of sorted column indices, each of size w
    col_supports: tuple  # n tuples of sorted row indices, each of size v

    def to_dense(self):
        H = np.zeros((self.params.r, self.params.n), dtype=np.uint8)
        for i, sup in enumerate(self.row_supports):
            H[i, list(sup)] = 1
        return H

    def to_sparse(self):
        """scipy CSR matrix (uint8) for fast batched syndrome updates."""
        from scipy.sparse import csr_matrix

        r, n, w = self.params.r, self.params.n, self.params.w
        indptr = np.arange(0, (r + 1) * w, w)
        indices = np.fromiter(
            (j for sup in self.row_supports for j in sup), dtype=np.int64, count=r * w
        )
        data = np.ones(r * w, dtype=np.uint8)
        return csr_matrix((data, indices, indptr), shape=(r, n))


def _cols_from_rows(row_supports, n):
    cols = [[] for _ in range(n)]
    for i, sup in enumerate(row_supports):
        for j in sup:
            cols[j].append(i)
    return tuple(tuple(c) for c in cols)


def _pcm_from_rows(params, row_supports):
    rows = tuple(tuple(sorted(sup)) for sup in row_supports)
    return ParityCheckMatrix(params, rows, _cols_from_rows(rows, params.n))


def generate_regular_pcm(params, seed):
    """Random (v,w)-regular parity-check matrix.

    Three-step construction: v layers, each a block-diagonal pattern of m rows
    covering w consecutive columns, pushed through an independent uniform
    column permutation; the stacked layers then get a uniform row permutation.
    Each layer has column weight exactly 1, so the result is (v,w)-regular.
    """
    if params.qc is not None:
        raise ParameterError("use generate_qc_pcm for quasi-cyclic parameters")
    n, r, v, w = params.n, params.r, params.v, params.w
    rng = rng_for(seed, "matrix")
    if n % w != 0:
        return _pcm_from_matching(params, rng)
    m = n // w
    layers = rng.permuted(np.tile(np.arange(n), (v, 1)), axis=1)  # v column perms
    # row i of layer l holds the images of columns [i*w, (i+1)*w)
    rows = layers.reshape(v * m, w)
    row_perm = rng.permutation(v * m)
    return _pcm_from_rows(params, [rows[i] for i in row_perm])


def _pcm_from_matching(params, rng, max_tries=10000):
    """Configuration-model fallback for feasible shapes where w does not
    divide n: match v copies of each column to w slots per row, resampling
    until no (row, column) pair repeats."""
    n, r, v, w = params.n, params.r, params.v, params.w
    row_stubs = np.repeat(np.arange(r), w)
    for _ in range(max_tries):
        col_stubs = rng.permutation(np.repeat(np.arange(n), v))
        pairs = set(zip(row_stubs.tolist(), col_stubs.tolist()))
        if len(pairs) == n * v:
            rows = [[] for _ in range(r)]
            for i, j in zip(row_stubs, col_stubs):
                rows[i].append(int(j))
            return _pcm_from_rows(params, rows)
    raise ParameterError("could not realize a simple (v,w)-regular matrix")


def generate_qc_pcm(params, seed):
    """Quasi-cyclic matrix: n0 horizontally stacked p x p circulant blocks,
    each with a uniformly sampled weight-v first row."""
    if params.qc is None:
        raise ParameterError("params carry no qc shape")
    n0, p = params.qc
    v = params.v
    rng = rng_for(seed, "matrix")
    shifts = np.arange(p)[:, None]
    row_supports = np.empty((p, n0 * v), dtype=np.int64)
    for b in range(n0):
        first = rng.choice(p, size=v, replace=False)
        row_supports[:, b * v : (b + 1) * v] = (first[None, :] + shifts) % p + b * p
    return _pcm_from_rows(params, list(row_supports))


@dataclass(frozen=True)
class ErrorVector:
    n: int
    support: tuple

    def __post_init__(self):
        if any(not (0 <= i < self.n) for i in self.support):
            raise ParameterError("error support out of range")

    @property
    def weight(self):
        return len(self.support)

    def to_dense(self):
        e = np.zeros(self.n, dtype=np.uint8)
        e[list(self.support)] = 1
        return e

    def __xor__(self, other):
        if self.n != other.n:
            raise ValueError("length mismatch")
        sym = set(self.support) ^ set(other.support)
        return ErrorVector(self.n, tuple(sorted(sym)))


def sample_error(n, t, seed):
    """Uniform weight-t error vector of length n (deterministic per seed)."""
    if not (0 <= t <= n):
        raise ParameterError("need 0 <= t <= n")
    rng = rng_for(seed, "error")
    support = np.sort(rng.choice(n, size=t, replace=False))
    return ErrorVector(n, tuple(int(i) for i in support))


@dataclass(frozen=True)
class Syndrome:
    r: int
    bits: tuple

    def __post_init__(self):
        if len(self.bits) != self.r:
            raise ValueError("syndrome length mismatch")

    @property
    def weight(self):
        return int(sum(self.bits))

    @property
    def support(self):
        return tuple(i for i, b in enumerate(self.bits) if b)

    def is_zero(self):
        return self.weight == 0


def syndrome(H, e):
    """s = H e^T over GF(2): bit i is the parity of |row_i ∩ support(e)|."""
    if H.params.n != e.n:
        raise ValueError("dimension mismatch between H and e")
    sup = frozenset(e.support)
    bits = tuple(sum(1 for j in row if j in sup) & 1 for row in H.row_supports)
    return Syndrome(H.params.r, bits)


def export_pcm(H, path):
    """Line-oriented text export: header ``n r v w``, then one row support per line."""
    p = H.params
    with open(path, "w") as fh:
        fh.write("%d %d %d %d\n" % (p.n, p.r, p.v, p.w))
        for row in H.row_supports:
            fh.write(" ".join(str(j) for j in row) + "\n")


def import_pcm(path):
    with open(path) as fh:
        n, r, v, w = map(int, fh.readline().split())
        rows = [tuple(map(int, fh.readline().split())) for _ in range(r)]
    params = CodeParams.regular(n, r, v, w) if n * v == r * w and n % w == 0 and r % v == 0 and n // w == r // v else None
    if params is None:
        raise ParameterError("imported matrix is not (v,w)-regular feasible")
    return _pcm_from_rows(params, rows)
