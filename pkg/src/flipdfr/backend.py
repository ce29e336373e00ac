"""Numeric backends and the Pmf container.

Two interchangeable real-arithmetic backends drive every probability
computation in this package:

* ``standard`` -- IEEE double precision via numpy.  Fast, but entries below
  roughly 1e-308 underflow to zero (recorded in ``Backend.underflow_seen``).
* ``extended`` -- gmpy2/MPFR floats with a configurable mantissa (default
  128 bits, minimum 100) and the widest exponent range MPFR offers
  (|exponent| up to 2^62), so quantities near 2^-500 stay representable.

Arrays in the extended backend are numpy object arrays of ``mpfr`` values,
which keeps the vectorized numpy expressions identical across backends.
"""

import math
from fractions import Fraction

import gmpy2
import numpy as np

__all__ = ["Backend", "get_backend", "parse_precision", "Pmf"]

_MIN_EXT_BITS = 100
_DEF_EXT_BITS = 128


def _apply_mpfr_context(bits):
    ctx = gmpy2.get_context()
    ctx.precision = bits
    ctx.emax = gmpy2.get_emax_max()
    ctx.emin = gmpy2.get_emin_min()


class Backend:
    """Arithmetic backend: ``standard`` (float64) or ``extended`` (MPFR).

    Instances are lightweight; ``get_backend`` caches them.  The extended
    backend configures the gmpy2 thread-local context on creation, and
    ``activate()`` reapplies it (needed inside worker processes).
    """

    def __init__(self, name, bits=None):
        if name not in ("standard", "extended"):
            raise ValueError("unknown backend %r" % (name,))
        self.name = name
        if name == "extended":
            bits = _DEF_EXT_BITS if bits is None else int(bits)
            if bits < _MIN_EXT_BITS:
                raise ValueError("extended mantissa must be >= %d bits" % _MIN_EXT_BITS)
        self.bits = bits
        # tolerance used by normalization checks
        self.norm_tol = 1e-9 if name == "standard" else 1e-30
        # default floor below which pmf mass may be truncated in windowed sums
        self.mass_floor = 1e-15 if name == "standard" else 1e-300
        self.underflow_seen = False
        self.activate()

    def activate(self):
        if self.name == "extended":
            _apply_mpfr_context(self.bits)

    # ---- scalar constructors -------------------------------------------------
    def real(self, x):
        if self.name == "standard":
            return float(x)
        if isinstance(x, Fraction):
            return gmpy2.mpfr(x.numerator) / gmpy2.mpfr(x.denominator)
        return gmpy2.mpfr(x)

    @property
    def zero(self):
        return self.real(0)

    @property
    def one(self):
        return self.real(1)

    # ---- arrays --------------------------------------------------------------
    @property
    def dtype(self):
        return np.float64 if self.name == "standard" else object

    def zeros(self, m):
        if self.name == "standard":
            return np.zeros(m)
        a = np.empty(m, dtype=object)
        a[...] = gmpy2.mpfr(0)
        return a

    def array(self, values):
        if self.name == "standard":
            return np.asarray(values, dtype=np.float64)
        a = np.empty(len(values), dtype=object)
        for i, x in enumerate(values):
            a[i] = self.real(x)
        return a

    # ---- elementary functions ------------------------------------------------
    def log(self, x):
        return math.log(x) if self.name == "standard" else gmpy2.log(x)

    def log1p(self, x):
        return math.log1p(x) if self.name == "standard" else gmpy2.log1p(x)

    def exp(self, x):
        return math.exp(x) if self.name == "standard" else gmpy2.exp(x)

    def expm1(self, x):
        return math.expm1(x) if self.name == "standard" else gmpy2.expm1(x)

    def log2(self, x):
        return math.log2(x) if self.name == "standard" else gmpy2.log2(x)

    def to_float(self, x):
        return float(x)

    # ---- binomial machinery --------------------------------------------------
    def binom(self, m, k):
        """C(m, k) as a backend real (exact integer source)."""
        return self.real(math.comb(m, k))

    def binom_pmf(self, m, p, lo=0, hi=None):
        """B(m, p) pmf values for k in [lo, hi] as a backend array.

        Uses an exact start value C(m,lo) p^lo (1-p)^(m-lo) followed by the
        ratio recurrence, so windowed evaluation away from k=0 stays cheap.
        """
        if hi is None:
            hi = m
        lo = max(0, lo)
        hi = min(m, hi)
        if hi < lo:
            return self.zeros(0)
        one = self.one
        p = self.real(p)
        q = one - p
        out = self.zeros(hi - lo + 1)
        if p == 0:
            if lo == 0:
                out[0] = one
            return out
        if q == 0:
            if hi == m:
                out[-1] = one
            return out
        if self.name == "standard":
            # float64 cannot hold C(m, lo) for large m; start from the
            # log-domain pmf value instead (full float64 accuracy)
            log_cur = (
                math.lgamma(m + 1)
                - math.lgamma(lo + 1)
                - math.lgamma(m - lo + 1)
                + lo * math.log(p)
                + (m - lo) * math.log1p(-p)
            )
            cur = math.exp(log_cur)
        else:
            cur = self.binom(m, lo) * p**lo * q ** (m - lo)
        ratio = p / q
        out[0] = cur
        for k in range(lo, hi):
            cur = cur * ratio * self.real(m - k) / self.real(k + 1)
            out[k + 1 - lo] = cur
        if self.name == "standard" and hi > lo and float(out[0]) == 0.0 and p > 0:
            self.underflow_seen = True
        return out

    def binom_window(self, m, p, floor=None):
        """B(m, p) as a window [lo, hi] holding all entries >= floor.

        The window is located with float64 log-pmf bounds (scipy), then the
        values are produced by the exact-start recurrence, so it works even
        where float64 pmf values underflow.  Returns (lo, probs).
        """
        from scipy.special import gammaln

        floor = self.mass_floor if floor is None else floor
        pf = float(p)
        if m == 0 or pf <= 0.0:
            return 0, self.array([1])
        if pf >= 1.0:
            return m, self.array([1])
        ks = np.arange(m + 1, dtype=np.float64)
        logpmf = (
            gammaln(m + 1)
            - gammaln(ks + 1)
            - gammaln(m - ks + 1)
            + ks * math.log(pf)
            + (m - ks) * math.log1p(-pf)
        )
        keep = np.nonzero(logpmf >= math.log(floor))[0]
        if len(keep) == 0:
            keep = np.array([int(np.argmax(logpmf))])
        lo, hi = int(keep[0]), int(keep[-1])
        return lo, self.binom_pmf(m, p, lo, hi)

    def binom_tail(self, m, p, a):
        """Pr[Binomial(m, p) >= a]; total function, 0 when a > m, 1 when a <= 0."""
        if a > m:
            return self.zero
        if a <= 0:
            return self.one
        pmf = self.binom_pmf(m, p)
        return pmf[a:].sum()


_CACHE = {}


def get_backend(name="standard", bits=None):
    key = (name, bits if name == "extended" else None)
    if key not in _CACHE:
        _CACHE[key] = Backend(name, bits)
    be = _CACHE[key]
    be.activate()
    return be


def parse_precision(text):
    """Parse a ``standard`` / ``extended`` / ``extended:BITS`` precision tag."""
    if text == "standard":
        return get_backend("standard")
    if text == "extended":
        return get_backend("extended")
    if text.startswith("extended:"):
        return get_backend("extended", int(text.split(":", 1)[1]))
    raise ValueError("bad precision spec %r" % (text,))


class Pmf:
    """Probability mass function over a bounded integer range.

    ``probs[i]`` is the mass at value ``lo + i``.  Values are backend reals,
    so a Pmf can hold masses far below float64's underflow threshold.
    """

    def __init__(self, lo, probs, backend):
        self.lo = int(lo)
        self.probs = probs
        self.backend = backend

    @property
    def hi(self):
        return self.lo + len(self.probs) - 1

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, value):
        if self.lo <= value <= self.hi:
            return self.probs[value - self.lo]
        return self.backend.zero

    def iter_items(self):
        for i, p in enumerate(self.probs):
            yield self.lo + i, p

    def total(self):
        return self.probs.sum()

    def check_normalized(self, tol=None):
        tol = self.backend.norm_tol if tol is None else tol
        err = abs(float(self.total()) - 1.0)
        if err > tol:
            raise AssertionError("pmf sums to 1%+.3e, tolerance %.1e" % (err, tol))

    def mean(self):
        acc = self.backend.zero
        for v, p in self.iter_items():
            acc = acc + self.backend.real(v) * p
        return acc

    def align_domain(self, lo, hi):
        """Return this pmf re-indexed over [lo, hi] (zero-padded/truncated)."""
        out = self.backend.zeros(hi - lo + 1)
        src_lo = max(self.lo, lo)
        src_hi = min(self.hi, hi)
        if src_hi >= src_lo:
            out[src_lo - lo : src_hi - lo + 1] = self.probs[
                src_lo - self.lo : src_hi - self.lo + 1
            ]
        return Pmf(lo, out, self.backend)

    def tv_distance(self, other):
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        a = self.align_domain(lo, hi).probs
        b = other.align_domain(lo, hi).probs
        return 0.5 * float(np.abs(a - b).sum())

    def overlap(self, other):
        """Sum of pointwise minima; 1 iff the pmfs coincide."""
        if (self.lo, self.hi) != (other.lo, other.hi):
            raise ValueError("overlap requires identical domains")
        acc = self.backend.zero
        for a, b in zip(self.probs, other.probs):
            acc = acc + (a if a < b else b)
        return acc

    def to_csv(self, path, header_comment=None):
        """Write ``value,prob`` rows; extended mode uses full-precision repr."""
        with open(path, "w") as fh:
            if header_comment:
                fh.write("# %s\n" % header_comment)
            fh.write("value,prob\n")
            for v, p in self.iter_items():
                if self.backend.name == "standard":
                    fh.write("%d,%r\n" % (v, float(p)))
                else:
                    # full-precision decimal; round-trips at the backend's mantissa width
                    fh.write("%d,%s\n" % (v, mpfr_repr(p)))


def mpfr_repr(x):
    """Decimal string carrying the full mantissa and exponent of an mpfr value."""
    x = gmpy2.mpfr(x)
    if gmpy2.is_zero(x):
        return "0"
    d, e, _ = x.digits(10)
    sign = "-" if d.startswith("-") else ""
    d = d.lstrip("-")
    return "%s%s.%se%+d" % (sign, d[0], d[1:], e - 1)
