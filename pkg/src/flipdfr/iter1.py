"""First-iteration model: parity-check satisfaction probabilities per bit
value, upc distributions, flip probabilities, the added/removed discrepancy
distributions delta_plus/delta_minus, and the one-iteration DFR.
"""

from dataclasses import dataclass

from .backend import Pmf
from .chain import ChainContext

__all__ = ["Iter1Profile", "punsat_probs", "flip_probs", "build_profile", "discrepancy_pmf_iter1", "dfr1"]


@dataclass
class Iter1Profile:
    y: object                # conditioning syndrome weight, or "averaged"
    th1: int
    p_unsat0: object
    p_unsat1: object
    p_flip0: object
    p_flip1: object
    p_nflip0: object
    p_nflip1: object
    delta_plus: Pmf          # added discrepancies, domain subset of [0, n-t]
    delta_minus: Pmf         # removed discrepancies, domain [0, t]
    flip_prior: Pmf          # Pr(F_t = f | y), or its y-average phi(f, t)


def _punsat_from_prior(prior, w, be):
    """p_unsat|0 and p_unsat|1 from a pmf over the per-equation flip count f.

    A clear bit sits in an equation with probability proportional to its
    (w-f)/w clear slots, an asserted bit proportionally to f/w; the equation
    is unsatisfied iff f is odd.  Both ratios are self-normalizing.
    """
    num0 = den0 = num1 = den1 = be.zero
    for f, pf in prior.iter_items():
        clear = be.real(w - f) / be.real(w) * pf
        err = be.real(f) / be.real(w) * pf
        den0 = den0 + clear
        den1 = den1 + err
        if f % 2 == 1:
            num0 = num0 + clear
            num1 = num1 + err
    p0 = num0 / den0 if float(den0) != 0.0 else be.zero
    p1 = num1 / den1 if float(den1) != 0.0 else be.zero
    return p0, p1


def punsat_probs(y, ctx):
    """(p_unsat|0, p_unsat|1) conditioned on the syndrome weight y."""
    prior = ctx.conditional_flip_pmf(y)
    return _punsat_from_prior(prior, ctx.params.w, ctx.backend)


def flip_probs(y, th1, ctx):
    """(p_flip|0, p_flip|1): binomial(v, p_unsat|.) upper tails from th1."""
    p0, p1 = punsat_probs(y, ctx)
    be = ctx.backend
    v = ctx.params.v
    return be.binom_tail(v, p0, th1), be.binom_tail(v, p1, th1)


def _head(be, m, p, k):
    """Pr[Binomial(m, p) <= k], computed directly (not as 1-tail)."""
    if k < 0:
        return be.zero
    if k >= m:
        return be.one
    return be.binom_pmf(m, p, 0, k).sum()


def build_profile(ctx, th1, y="averaged", threads=1):
    """Iter1Profile for one syndrome weight, or the y-averaged profile.

    Averaging follows the scalar convention: p_unsat|0/1 (and the flip-count
    prior) are averaged over Pr(W_t=y) first, and every downstream pmf stays
    an exact binomial of the averaged scalars.
    """
    be = ctx.backend
    params = ctx.params
    v, w, n, t = params.v, params.w, params.n, ctx.t
    if y == "averaged":
        wp = ctx.syndrome_weight_distribution()
        cond = ctx.flip_conditional_table(threads)
        fmax = len(cond) - 1
        num = be.zeros(fmax + 1)
        den = be.zero
        p0acc = be.zero
        p1acc = be.zero
        for yy, pw in wp.iter_items():
            if float(pw) <= 0.0:
                continue
            terms = be.array([ctx.phi(f, t) * cond[f][yy] for f in range(fmax + 1)])
            tot = terms.sum()
            if float(tot) == 0.0:
                continue
            prior_y = Pmf(0, terms / tot, be)
            q0, q1 = _punsat_from_prior(prior_y, w, be)
            p0acc = p0acc + pw * q0
            p1acc = p1acc + pw * q1
            num += pw * prior_y.probs
            den = den + pw
        p0, p1 = p0acc / den, p1acc / den
        prior = Pmf(0, num / den, be)
    else:
        prior = ctx.conditional_flip_pmf(int(y), threads)
        p0, p1 = _punsat_from_prior(prior, w, be)
    pf0 = be.binom_tail(v, p0, th1)
    pf1 = be.binom_tail(v, p1, th1)
    pn0 = _head(be, v, p0, th1 - 1)
    pn1 = _head(be, v, p1, th1 - 1)
    dlo, dprobs = be.binom_window(n - t, pf0)
    delta_plus = Pmf(dlo, dprobs, be)
    delta_minus = Pmf(0, be.binom_pmf(t, pf1), be)
    return Iter1Profile(y, th1, p0, p1, pf0, pf1, pn0, pn1, delta_plus, delta_minus, prior)


def _hyper_flip_tail(r, p_unsat, v, th):
    """Pr[#unsatisfied among a bit's v checks >= th] when exactly a
    p_unsat-share of the r checks is unsatisfied and the bit's checks are
    drawn without replacement.  The non-integer expected count p_unsat*r is
    handled as a floor/ceil hypergeometric mixture preserving the mean.
    Evaluated in float64."""
    from scipy.stats import hypergeom

    K = p_unsat * r
    k0 = int(K)
    lam = K - k0
    tail0 = float(hypergeom.sf(th - 1, r, k0, v))
    tail1 = float(hypergeom.sf(th - 1, r, min(k0 + 1, r), v))
    return (1.0 - lam) * tail0 + lam * tail1


def discrepancy_marginals(ctx, th1, y_floor=1e-12, threads=1):
    """Model marginals of (d_plus, d_minus): per-y binomials mixed by the
    syndrome-weight pmf.  This is the distribution a fresh-code Monte Carlo
    histogram of first-iteration discrepancies estimates.

    Unlike the DFR pipeline's binomial flip probabilities, the per-bit flip
    probability here uses the without-replacement (hypergeometric) count of
    unsatisfied checks: conditioned on the syndrome weight, only a fixed
    number of checks is unsatisfied, which narrows the upc spread by a
    factor (r-v)/(r-1).  The steep threshold tail amplifies even that small
    correction into a visible shift of the d_plus histogram.

    Syndrome weights carrying less than `y_floor` of the total mass are
    skipped and the mixture renormalized over the rest.
    """
    be = ctx.backend
    n, r, v, t = ctx.params.n, ctx.params.r, ctx.params.v, ctx.t
    wp = ctx.syndrome_weight_distribution()
    accp = be.zeros(n - t + 1)
    accm = be.zeros(t + 1)
    used = be.zero
    for yy, pw in wp.iter_items():
        if float(pw) < y_floor:
            continue
        try:
            prof = build_profile(ctx, th1, y=yy, threads=threads)
        except ValueError:
            continue  # parity-unreachable weight
        pf0 = be.real(_hyper_flip_tail(r, float(prof.p_unsat0), v, th1))
        pf1 = be.real(_hyper_flip_tail(r, float(prof.p_unsat1), v, th1))
        dlo, dprobs = be.binom_window(n - t, pf0)
        dp = Pmf(dlo, dprobs, be)
        dm = Pmf(0, be.binom_pmf(t, pf1), be)
        accp[dp.lo : dp.hi + 1] += pw * dp.probs
        accm[dm.lo : dm.hi + 1] += pw * dm.probs
        used = used + pw
    if float(used) == 0.0:
        raise ValueError("no syndrome weight above y_floor")
    return Pmf(0, accp / used, be), Pmf(0, accm / used, be)


def discrepancy_pmf_iter1(y, th1, ctx, profile=None):
    """Pmf of the post-iteration-1 discrepancy count d = t - d_minus + d_plus."""
    prof = profile if profile is not None else build_profile(ctx, th1, y)
    be = ctx.backend
    t = ctx.t
    dp, dm = prof.delta_plus, prof.delta_minus
    lo = t - dm.hi + dp.lo
    hi = t - dm.lo + dp.hi
    out = be.zeros(hi - lo + 1)
    for dmins, pm in dm.iter_items():
        if float(pm) <= 0.0:
            continue
        base = t - dmins
        out[base + dp.lo - lo : base + dp.hi - lo + 1] += pm * dp.probs
    return Pmf(lo, out, be)


def dfr1(ctx, th1, mode="per-y", threads=1):
    """One-iteration DFR = 1 - sum_y Pr(W_t=y) Pr(E_1=0 | y)."""
    be = ctx.backend
    t = ctx.t
    if t == 0:
        return be.zero
    if mode == "averaged":
        prof = build_profile(ctx, th1, "averaged", threads)
        return be.one - prof.delta_plus[0] * prof.delta_minus[t]
    wp = ctx.syndrome_weight_distribution()
    acc = be.zero
    used = be.zero
    for yy, pw in wp.iter_items():
        if float(pw) <= 0.0:
            continue
        prof = build_profile(ctx, th1, yy, threads)
        acc = acc + pw * prof.delta_plus[0] * prof.delta_minus[t]
        used = used + pw
    return be.one - acc / used
