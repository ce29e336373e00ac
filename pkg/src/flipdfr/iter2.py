"""Second-iteration model: class-conditioned flip probabilities and the
two-iteration DFR.

After iteration one, positions split into four classes J_ab (a = true error
bit, b = residual discrepancy), with cardinalities
(n-t-e01, e01, t-e11, e11).  For each class, the probability that the bit
flips in iteration two is obtained by following the state of each of its v
parity checks through the iteration-one flips:

* chi_add_odd: an odd number of the e01 erroneous flip-ups lands inside the
  check;
* chi_keep_odd: an odd number of the check's still-discrepant error bits
  (among e11) remains;
* gamma: the check is unsatisfied after the flips (XOR of the two);
* become/stay-unsat: gamma averaged over the check's error count tc,
  posterior-weighted per class;
* pflip_class: the bit's iteration-two upc tail, mixing its iteration-one
  upc posterior with binomials of the become/stay probabilities.

The final DFR sums the per-(e01, e11) failure probabilities weighted by
delta_plus(e01) * delta_minus(t-e11), optionally with the partial-sum
cutoff, in descending weight order.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import Pmf
from .chain import ChainContext
from .iter1 import Iter1Profile, build_profile, _head

__all__ = [
    "Iter2Context",
    "ClassFlipProbs",
    "DfrReport",
    "one_eq_conditionals",
    "chi_add_odd",
    "chi_keep_odd",
    "gamma_unsat_post_flips",
    "class_tc_posterior",
    "become_stay_unsat",
    "pflip_class",
    "success_prob_given_eps",
    "two_iteration_dfr",
]

CLASSES = ("00", "01", "10", "11")


def one_eq_conditionals(profile, params, backend):
    """Flip probabilities over the v-1 checks other than one distinguished
    check, conditioned on that check's state: (p_flip0_sat, p_flip0_unsat,
    p_nflip1_sat, p_nflip1_unsat)."""
    be = backend
    v, th = params.v, profile.th1
    pf0_sat = be.binom_tail(v - 1, profile.p_unsat0, th)
    pf0_unsat = be.binom_tail(v - 1, profile.p_unsat0, th - 1)
    pn1_sat = _head(be, v - 1, profile.p_unsat1, th - 1)
    pn1_unsat = _head(be, v - 1, profile.p_unsat1, th - 2)
    return pf0_sat, pf0_unsat, pn1_sat, pn1_unsat


@dataclass
class ClassFlipProbs:
    e01: int
    e11: int
    p_flip00: object
    p_nflip01: object   # computed directly, not as 1 - p_flip01
    p_flip10: object
    p_nflip11: object   # computed directly


@dataclass
class DfrReport:
    params: object
    t: int
    th1: int
    th2: int
    mode: str            # "averaged" | "per-y"
    cutoff: bool
    bound: str           # "exact-product" | "expectation"
    dfr: object
    dfr1: object
    terms_eval: int
    terms_skip: int
    skip_mass: float
    backend_name: str = "standard"

    @property
    def log2_dfr(self):
        import gmpy2

        if isinstance(self.dfr, float):
            return math.log2(self.dfr) if self.dfr > 0 else float("-inf")
        return float(gmpy2.log2(self.dfr)) if not gmpy2.is_zero(self.dfr) else float("-inf")

    def csv_row(self):
        p = self.params
        mode = "%s%s%s" % (
            self.mode,
            "+cutoff" if self.cutoff else "",
            "+bound" if self.bound == "expectation" else "",
        )
        return "%d,%d,%d,%d,%d,%d,%d,%s,%s,%.6f,%s,%d,%d,%.3e" % (
            p.n, p.k, p.v, p.w, self.t, self.th1, self.th2, mode,
            format_prob(self.dfr), self.log2_dfr, format_prob(self.dfr1),
            self.terms_eval, self.terms_skip, self.skip_mass,
        )

    CSV_HEADER = "n,k,v,w,t,th1,th2,mode,dfr,log2_dfr,dfr1,terms_eval,terms_skip,skip_mass"


def format_prob(x):
    if isinstance(x, float):
        return "%.12e" % x
    from .backend import mpfr_repr

    return mpfr_repr(x)


class Iter2Context:
    """Memoized second-iteration machinery bound to one Iter1Profile."""

    def __init__(self, chain_ctx, profile, th2):
        self.ctx = chain_ctx
        self.params = chain_ctx.params
        self.be = chain_ctx.backend
        self.profile = profile
        self.th1 = profile.th1
        self.th2 = th2
        (self.pf0_sat, self.pf0_unsat, self.pn1_sat, self.pn1_unsat) = one_eq_conditionals(
            profile, self.params, self.be
        )
        self.t = chain_ctx.t
        self.tc_max = min(self.t, self.params.w)
        self._chi_add = {}
        self._chi_keep = {}
        self._posterior = {}
        self._upc_posterior = {}
        self._flag_impossible = 0

    # --------------------------------------------------------------- chi
    def _chi(self, m_in, p_in, m_out, p_out, eps, memo):
        """Odd-l share of the split of eps hits between m_in 'inside' trials
        (prob p_in) and m_out 'outside' trials (prob p_out)."""
        key = (m_in, m_out, id(p_in), eps)
        if key in memo:
            return memo[key]
        be = self.be
        lmin = max(0, eps - m_out)
        lmax = min(eps, m_in)
        if eps < 0 or lmax < lmin or m_in < 0:
            memo[key] = be.zero
            return be.zero
        eta = be.binom_pmf(m_in, p_in, lmin, lmax)
        zeta = be.binom_pmf(m_out, p_out, eps - lmax, eps - lmin)[::-1]
        prods = eta * zeta
        xi = prods.sum()
        if float(xi) == 0.0:
            self._flag_impossible += 1
            memo[key] = be.zero
            return be.zero
        odd = be.zero
        for l in range(lmin, lmax + 1):
            if l % 2 == 1:
                odd = odd + prods[l - lmin]
        val = odd / xi
        memo[key] = val
        return val

    def chi_add_odd(self, cls, tc, e01):
        """Probability an odd number of erroneous flip-ups lands in a check
        with tc error positions, seen from a class-cls bit in the check."""
        w, t = self.params.w, self.t
        p_in = self.pf0_sat if tc % 2 == 0 else self.pf0_unsat
        m_in = (w - tc - 1) if cls[0] == "0" else (w - tc)
        eps = e01 - 1 if cls == "01" else e01
        m_out = self.params.n - w - (t - tc)
        return self._chi(m_in, p_in, m_out, self.profile.p_flip0, eps, self._chi_add)

    def chi_keep_odd(self, cls, tc, e11):
        """Probability an odd number of the check's error bits stays
        discrepant, seen from a class-cls bit in the check."""
        t = self.t
        p_in = self.pn1_sat if tc % 2 == 0 else self.pn1_unsat
        m_in = tc if cls[0] == "0" else tc - 1
        eps = e11 - 1 if cls == "11" else e11
        m_out = t - tc
        return self._chi(m_in, p_in, m_out, self.profile.p_nflip1, eps, self._chi_keep)

    def gamma_unsat_post_flips(self, cls, tc, e01, e11):
        a = self.chi_add_odd(cls, tc, e01)
        b = self.chi_keep_odd(cls, tc, e11)
        return a * (self.be.one - b) + (self.be.one - a) * b

    # --------------------------------------------------------- tc posterior
    def _tc_range(self, cls):
        lo = 0 if cls[0] == "0" else 1
        return range(lo, self.tc_max + 1)

    def class_tc_posterior(self, cls):
        """Posterior pmf over the check's error count tc for a class-cls bit."""
        if cls in self._posterior:
            return self._posterior[cls]
        be = self.be
        w = self.params.w
        prior = self.profile.flip_prior
        vals = []
        for tc in self._tc_range(cls):
            pf = prior[tc]
            kern = be.real(w - tc) / be.real(w) if cls[0] == "0" else be.real(tc) / be.real(w)
            if cls == "00":
                wgt = be.one - (self.pf0_sat if tc % 2 == 0 else self.pf0_unsat)
            elif cls == "01":
                wgt = self.pf0_sat if tc % 2 == 0 else self.pf0_unsat
            elif cls == "10":
                wgt = be.one - (self.pn1_sat if tc % 2 == 0 else self.pn1_unsat)
            else:
                wgt = self.pn1_sat if tc % 2 == 0 else self.pn1_unsat
            vals.append(kern * wgt * pf)
        arr = be.array(vals)
        tot = arr.sum()
        if float(tot) == 0.0:
            raise ValueError("class J%s cannot occur for these parameters" % cls)
        pmf = Pmf(self._tc_range(cls).start, arr / tot, be)
        self._posterior[cls] = pmf
        return pmf

    def become_stay_unsat(self, cls, e01, e11):
        """(p_BecomeUnsat, p_StayUnsat): the chance a check of a class-cls bit
        is unsatisfied after the flips, split by its pre-flip parity."""
        be = self.be
        post = self.class_tc_posterior(cls)
        flip_sign = cls in ("01", "11")  # these bits flip, toggling their check
        out = []
        for parity in (0, 1):  # 0: satisfied before (become), 1: unsatisfied (stay)
            num = den = be.zero
            for tc in self._tc_range(cls):
                if tc % 2 != parity:
                    continue
                g = self.gamma_unsat_post_flips(cls, tc, e01, e11)
                if flip_sign:
                    g = be.one - g
                p = post[tc]
                num = num + p * g
                den = den + p
            out.append(num / den if float(den) != 0.0 else be.zero)
        return out[0], out[1]

    # --------------------------------------------------------- upc posterior
    def upc_posterior(self, cls):
        """Pmf of the bit's iteration-one upc, conditioned on its class."""
        if cls in self._upc_posterior:
            return self._upc_posterior[cls]
        be = self.be
        v, th = self.params.v, self.th1
        pr = self.profile
        pu = pr.p_unsat0 if cls[0] == "0" else pr.p_unsat1
        pmf = be.binom_pmf(v, pu)
        if cls in ("00", "11"):  # not flipped: upc < th1
            norm = pr.p_nflip0 if cls == "00" else pr.p_nflip1
            arr = pmf[:th] / norm
            out = Pmf(0, arr, be)
        else:  # flipped: upc >= th1
            norm = pr.p_flip0 if cls == "01" else pr.p_flip1
            arr = pmf[th:] / norm
            out = Pmf(th, arr, be)
        self._upc_posterior[cls] = out
        return out

    def pflip_class(self, cls, e01, e11):
        """Probability a class-cls bit flips in iteration two (upc2 >= th2)."""
        flip, _ = self._pflip_pair(cls, e01, e11)
        return flip

    def _pflip_pair(self, cls, e01, e11):
        """(p_flip, p_nflip) for one class, both by direct summation."""
        be = self.be
        v, th2 = self.params.v, self.th2
        pB, pS = self.become_stay_unsat(cls, e01, e11)
        post = self.upc_posterior(cls)
        if be.name == "standard":
            flip = nflip = 0.0
            for a, pa in post.iter_items():
                pa = float(pa)
                if pa == 0.0:
                    continue
                sat_pmf = be.binom_pmf(v - a, pB)
                uns = be.binom_pmf(a, pS)
                head = np.concatenate(([0.0], np.cumsum(uns)))
                total = head[-1]
                need = th2 - np.arange(v - a + 1)
                idx = np.clip(need, 0, a + 1)
                flip_terms = np.where(
                    need <= 0, 1.0, np.where(need > a, 0.0, total - head[idx])
                )
                nflip_terms = np.where(
                    need <= 0, 0.0, np.where(need > a, 1.0, head[idx])
                )
                flip += pa * float(sat_pmf @ flip_terms)
                nflip += pa * float(sat_pmf @ nflip_terms)
            return flip, nflip
        flip = be.zero
        nflip = be.zero
        for a, pa in post.iter_items():
            if float(pa) == 0.0:
                continue
            sat_pmf = be.binom_pmf(v - a, pB)   # checks that were satisfied
            uns_tail = be.binom_pmf(a, pS)      # checks that were unsatisfied
            # cumulative tails of uns_tail
            acc_flip = be.zero
            acc_nflip = be.zero
            for nsat in range(0, v - a + 1):
                need = th2 - nsat
                if need <= 0:
                    acc_flip = acc_flip + sat_pmf[nsat]
                elif need > a:
                    acc_nflip = acc_nflip + sat_pmf[nsat]
                else:
                    acc_flip = acc_flip + sat_pmf[nsat] * uns_tail[need:].sum()
                    acc_nflip = acc_nflip + sat_pmf[nsat] * uns_tail[:need].sum()
            flip = flip + pa * acc_flip
            nflip = nflip + pa * acc_nflip
        return flip, nflip

    def class_flip_probs(self, e01, e11):
        """Per-class iteration-two probabilities; a structurally impossible
        class (zero posterior mass, e.g. J11 when every error bit certainly
        flips) contributes probability zero - its count is zero whenever the
        class cannot occur, so the value is never used."""

        def safe(cls, idx):
            try:
                return self._pflip_pair(cls, e01, e11)[idx]
            except ValueError:
                self._flag_impossible += 1
                return self.be.zero

        return ClassFlipProbs(
            e01, e11, safe("00", 0), safe("01", 1), safe("10", 0), safe("11", 1)
        )

    # ------------------------------------------------------------- success
    def success_prob_given_eps(self, e01, e11, bound="exact-product", tau=0):
        """Pr(E_2 = 0 | e01, e11) under this context's class model."""
        be = self.be
        n, t = self.params.n, self.t
        if e01 + e11 <= tau:
            return be.one
        cp = self.class_flip_probs(e01, e11)
        if bound == "expectation":
            expected = (
                cp.p_flip00 * be.real(n - t - e01)
                + cp.p_nflip01 * be.real(e01)
                + cp.p_flip10 * be.real(t - e11)
                + cp.p_nflip11 * be.real(e11)
            )
            guess = be.one - expected
            return guess if float(guess) > 0.0 else be.zero
        return be.exp(self._log_success(cp, e01, e11))

    def _log_success(self, cp, e01, e11):
        be = self.be
        n, t = self.params.n, self.t

        def l1p(p):  # log(1-p), tolerating p == 1
            return be.real("-inf") if float(p) >= 1.0 else be.log1p(-p)

        acc = be.zero
        for count, p in (
            (n - t - e01, cp.p_flip00),
            (e01, cp.p_nflip01),
            (t - e11, cp.p_flip10),
            (e11, cp.p_nflip11),
        ):
            if count > 0:  # skip empty classes so 0 * -inf never appears
                acc = acc + be.real(count) * l1p(p)
        return acc

    def failure_prob_given_eps(self, e01, e11, bound="exact-product", tau=0):
        """1 - success, evaluated without cancellation (expm1 of the log)."""
        be = self.be
        if e01 + e11 <= tau:
            return be.zero
        cp = self.class_flip_probs(e01, e11)
        if bound == "expectation":
            n, t = self.params.n, self.t
            expected = (
                cp.p_flip00 * be.real(n - t - e01)
                + cp.p_nflip01 * be.real(e01)
                + cp.p_flip10 * be.real(t - e11)
                + cp.p_nflip11 * be.real(e11)
            )
            return expected if float(expected) < 1.0 else be.one
        return -be.expm1(self._log_success(cp, e01, e11))


# ---------------------------------------------------------------- assembly


def chi_add_odd(tc, e01, ctx2, cls="00"):
    return ctx2.chi_add_odd(cls, tc, e01)


def chi_keep_odd(tc, e11, ctx2, cls="00"):
    return ctx2.chi_keep_odd(cls, tc, e11)


def gamma_unsat_post_flips(tc, e01, e11, ctx2, cls="00"):
    return ctx2.gamma_unsat_post_flips(cls, tc, e01, e11)


def class_tc_posterior(cls, tc, ctx2):
    return ctx2.class_tc_posterior(cls)[tc]


def become_stay_unsat(cls, e01, e11, ctx2):
    return ctx2.become_stay_unsat(cls, e01, e11)


def pflip_class(cls, e01, e11, ctx2):
    return ctx2.pflip_class(cls, e01, e11)


def success_prob_given_eps(e01, e11, ctx2, bound="exact-product", tau=0):
    return ctx2.success_prob_given_eps(e01, e11, bound, tau)


def _grid_descending(prof, t, be):
    """(e01, e11, weight) triples sorted by descending float weight."""
    dp, dm = prof.delta_plus, prof.delta_minus
    items = []
    for e01, wp in dp.iter_items():
        fwp = float(wp)
        if fwp <= 0.0:
            continue
        for dmins, wm in dm.iter_items():
            fwm = float(wm)
            if fwm <= 0.0:
                continue
            e11 = t - dmins
            items.append((fwp * fwm, e01, e11))
    items.sort(key=lambda z: (-z[0], z[1], z[2]))
    return items


def _failure_sum(ctx2, prof, cutoff, bound, tau):
    """Weighted failure sum over the (e01, e11) grid in descending weight
    order; returns (dfr_sum, terms_eval, terms_skip, skip_mass)."""
    be = ctx2.be
    t = ctx2.t
    dp, dm = prof.delta_plus, prof.delta_minus
    order = _grid_descending(prof, t, be)
    total_w = be.zero
    acc = be.zero
    partial = 0.0
    terms = 0
    skipped = 0
    for fw, e01, e11 in order:
        if cutoff and partial > 0.0 and fw < partial * 1e-16:
            skipped = len(order) - terms
            break
        weight = dp[e01] * dm[t - e11]
        fail = ctx2.failure_prob_given_eps(e01, e11, bound, tau)
        acc = acc + weight * fail
        total_w = total_w + weight
        partial += fw
        terms += 1
    skip_mass = max(0.0, 1.0 - float(total_w))
    return acc, terms, skipped, skip_mass


def expected_class_rates(
    params,
    t,
    th1,
    th2,
    backend=None,
    chain_ctx=None,
    mode="averaged",
    y_floor=1e-9,
    grid_floor=0.0,
):
    """Expected per-class iteration-two rates, weighted by (grid mass x class
    size): flip rates for classes 00 and 10, keep rates for 01 and 11.
    Directly comparable to pooled Monte Carlo class tallies.

    mode="averaged" uses the syndrome-weight-averaged profile; mode="per-y"
    additionally mixes over the syndrome weight, which matters for the steep
    tail rates (the keep rates of classes 01/11 are convex in the underlying
    probabilities, so collapsing the y spread biases them low).  A positive
    grid_floor truncates each grid walk once at most that much mass remains;
    leave it at 0 when rare classes matter, since their terms sit in the
    tail of the mass ordering."""
    from .backend import get_backend
    from .chain import ChainContext
    from .iter1 import build_profile

    be = backend if backend is not None else get_backend("standard")
    ctx = chain_ctx if chain_ctx is not None else ChainContext(params, t, be)
    n = params.n
    num = {ab: be.zero for ab in CLASSES}
    den = {ab: be.zero for ab in CLASSES}

    def accumulate(prof, scale):
        ctx2 = Iter2Context(ctx, prof, th2)
        acc = 0.0
        for fw, e01, e11 in _grid_descending(prof, t, be):
            if grid_floor > 0.0 and acc > 1.0 - grid_floor:
                break
            acc += fw
            weight = scale * (prof.delta_plus[e01] * prof.delta_minus[t - e11])
            cp = ctx2.class_flip_probs(e01, e11)
            for ab, count, p in (
                ("00", n - t - e01, cp.p_flip00),
                ("01", e01, cp.p_nflip01),
                ("10", t - e11, cp.p_flip10),
                ("11", e11, cp.p_nflip11),
            ):
                if count > 0:
                    num[ab] = num[ab] + weight * be.real(count) * p
                    den[ab] = den[ab] + weight * be.real(count)

    if mode == "averaged":
        accumulate(build_profile(ctx, th1, y="averaged"), be.one)
    else:
        wp = ctx.syndrome_weight_distribution()
        for y, pw in wp.iter_items():
            if float(pw) <= y_floor:
                continue
            try:
                prof = build_profile(ctx, th1, y)
            except ValueError:
                continue
            accumulate(prof, pw)
    out = {}
    for ab in CLASSES:
        out[ab] = num[ab] / den[ab] if float(den[ab]) > 0.0 else be.zero
    return out


def two_iteration_dfr(
    params,
    t,
    th1,
    th2,
    backend=None,
    mode="averaged",
    cutoff=True,
    bound="exact-product",
    tau=0,
    threads=1,
    chain_ctx=None,
    memo=True,
):
    """Two-iteration DFR report for one parameter point."""
    from .backend import get_backend

    be = backend if backend is not None else get_backend("standard")
    ctx = chain_ctx if chain_ctx is not None else ChainContext(params, t, be, memo=memo)
    if t == 0:
        return DfrReport(params, t, th1, th2, mode, cutoff, bound, be.zero, be.zero, 0, 0, 0.0, be.name)
    if mode == "averaged":
        prof = build_profile(ctx, th1, "averaged", threads)
        ctx2 = Iter2Context(ctx, prof, th2)
        acc, terms, skipped, skip_mass = _failure_sum(ctx2, prof, cutoff, bound, tau)
        d1 = be.one - prof.delta_plus[0] * prof.delta_minus[t]
        return DfrReport(params, t, th1, th2, mode, cutoff, bound, acc, d1, terms, skipped, skip_mass, be.name)
    # per-y exact mode
    wp = ctx.syndrome_weight_distribution()
    acc = be.zero
    d1acc = be.zero
    used = be.zero
    terms = skipped = 0
    skip_mass = 0.0
    for yy, pw in wp.iter_items():
        if float(pw) <= 0.0:
            continue
        prof = build_profile(ctx, th1, yy, threads)
        ctx2 = Iter2Context(ctx, prof, th2)
        a, tm, sk, sm = _failure_sum(ctx2, prof, cutoff, bound, tau)
        acc = acc + pw * a
        d1acc = d1acc + pw * (be.one - prof.delta_plus[0] * prof.delta_minus[t])
        used = used + pw
        terms += tm
        skipped += sk
        skip_mass = max(skip_mass, sm)
    acc = acc / used
    d1acc = d1acc / used
    return DfrReport(params, t, th1, th2, "per-y", cutoff, bound, acc, d1acc, terms, skipped, skip_mass, be.name)
