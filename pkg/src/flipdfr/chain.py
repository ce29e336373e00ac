"""Syndrome-weight distribution via a non-homogeneous Markov chain.

The syndrome of a weight-t error is built by adding the t error columns one
at a time; each addition flips every syndrome bit whose check involves the
new position.  Tracking the syndrome weight x across the t steps gives a
Markov chain over states x in [0, R]:

* the chance that a specific cleared bit flips up at step l is
  ``pi_up(l)``, the chance a set bit flips down is ``pi_down(l)``, both
  obtained by conditioning the per-bit kernel (w-f)/(n-l) on the parity of
  the bit's accumulated flip count f (hypergeometric ``phi``);
* a step with vf column-induced flips moves x -> y = x + 2a - vf, where a
  of the flips land on cleared bits; the step kernel is the normalized
  product of the up/down binomials.

The same machinery, restricted to R-1 bits with the last f steps flipping
only vf-1 bits, yields the distribution of the syndrome weight conditioned
on the flip count F_t = f of one distinguished syndrome bit, and from it the
posterior pmf of F_t given the observed syndrome weight.
"""

import math
from fractions import Fraction

import numpy as np

from .backend import Pmf, get_backend

__all__ = ["ChainContext"]


def _pow_vec(base, exps, be):
    """base**exps for an integer exponent array, valid on both backends."""
    if be.name == "standard":
        return np.power(base, exps.astype(np.float64))
    out = np.empty(len(exps), dtype=object)
    for i, e in enumerate(exps):
        out[i] = base ** int(e)
    return out


def _trim(lo, probs, floor):
    """Drop contiguous window tails with mass below `floor`; returns trimmed
    (lo, probs, lost_mass)."""
    keep = np.nonzero(np.asarray([float(p) for p in probs]) >= floor)[0]
    if len(keep) == 0:
        return lo, probs, 0.0
    a, b = keep[0], keep[-1]
    lost = float(probs[:a].sum() + probs[b + 1 :].sum())
    return lo + int(a), probs[a : b + 1], lost


class ChainContext:
    """Everything needed to evaluate the syndrome-weight chain for one
    (params, t) pair: memoized phi / pi tables and the chain runners."""

    def __init__(self, params, t, backend=None, mass_floor=None, memo=True, phi_floor=1e-60):
        if t < 0 or t > params.n:
            raise ValueError("need 0 <= t <= n")
        self.params = params
        self.t = t
        self.backend = backend if backend is not None else get_backend("standard")
        self.mass_floor = self.backend.mass_floor if mass_floor is None else mass_floor
        # flip counts whose prior phi(f,t) falls below phi_floor relative to
        # the modal prior are carried as exact zeros instead of running their
        # modified chains; their combined mass is below phi_floor, far under
        # every tolerance used downstream
        self.phi_floor = phi_floor
        self.memo = memo
        self.trimmed_mass = 0.0
        self._phi = {}
        self._pi = {}
        self._wp = None
        self._flip_family = None

    # ------------------------------------------------------------------ phi
    def phi(self, f, l):
        """Pr(F_l = f): hypergeometric C(w,f) C(n-w, l-f) / C(n, l)."""
        n, w = self.params.n, self.params.w
        if l < 0 or l > self.t:
            raise ValueError("step l out of range")
        if f < 0 or f > min(w, l):
            raise ValueError("flip count f out of range")
        key = (f, l)
        if self.memo and key in self._phi:
            return self._phi[key]
        be = self.backend
        val = (
            be.real(math.comb(w, f))
            * be.real(math.comb(n - w, l - f))
            / be.real(math.comb(n, l))
        )
        if self.memo:
            self._phi[key] = val
        return val

    # ------------------------------------------------------------------- pi
    def _pi_pair(self, l):
        """(pi_up(l), pi_down(l)); pi_down is None at l=1."""
        key = l
        if self.memo and key in self._pi:
            return self._pi[key]
        n, w = self.params.n, self.params.w
        be = self.backend
        num_e = den_e = num_o = den_o = be.zero
        scale = be.one / be.real(n - l)
        for f in range(0, min(w, l - 1) + 1):
            ph = self.phi(f, l - 1)
            kern = be.real(w - f) * scale * ph
            if f % 2 == 0:
                num_e = num_e + kern
                den_e = den_e + ph
            else:
                num_o = num_o + kern
                den_o = den_o + ph
        up = num_e / den_e
        down = None if l == 1 else (num_o / den_o if float(den_o) != 0.0 else be.zero)
        out = (up, down)
        if self.memo:
            self._pi[key] = out
        return out

    def pi_up(self, l):
        if not (1 <= l <= self.t):
            raise ValueError("need 1 <= l <= t")
        return self._pi_pair(l)[0]

    def pi_down(self, l):
        if not (2 <= l <= self.t):
            raise ValueError("pi_down is undefined at l=1")
        return self._pi_pair(l)[1]

    # ----------------------------------------------------------- chain steps
    def _step(self, lo, probs, l, R, vf):
        """One chain step at global step index l with vf flips over R bits."""
        be = self.backend
        pu, pd = self._pi_pair(l)
        if pd is None:
            pd = be.zero
        qu = be.one - pu
        qd = be.one - pd
        X = len(probs)
        xs = lo + np.arange(X)
        A = vf + 1
        # up[:, a] = B(R - x, pu)[a]
        up = np.empty((X, A), dtype=be.dtype)
        up[:, 0] = _pow_vec(qu, R - xs, be)
        ru = pu / qu
        for a in range(A - 1):
            up[:, a + 1] = up[:, a] * (R - xs - a) * (ru / be.real(a + 1))
        # dn[:, d] = B(x, pd)[d]
        dn = np.empty((X, A), dtype=be.dtype)
        dn[:, 0] = _pow_vec(qd, xs, be)
        if float(pd) == 0.0:
            dn[:, 1:] = be.zero
        else:
            rd = pd / qd
            for d in range(A - 1):
                dn[:, d + 1] = dn[:, d] * np.maximum(xs - d, 0) * (rd / be.real(d + 1))
        rho = up * dn[:, ::-1]  # column a pairs with d = vf - a
        omega = rho.sum(axis=1)
        out_lo = lo - vf
        out = be.zeros(X + 2 * vf)
        safe = np.asarray([float(o) for o in omega]) > 0.0
        inv = np.where(safe, omega, be.one)
        contrib = (probs / inv)[:, None] * rho
        for a in range(A):
            out[2 * a : 2 * a + X] += np.where(safe, contrib[:, a], be.zero)
        # unreachable states (omega == 0) keep their (necessarily zero) mass in place
        if not safe.all():
            out[vf : vf + X] += np.where(~safe, probs, be.zero)
        # clip window to [0, R]
        if out_lo < 0:
            out = out[-out_lo:]
            out_lo = 0
        hi = out_lo + len(out) - 1
        if hi > R:
            out = out[: len(out) - (hi - R)]
        lo2, out, lost = _trim(out_lo, out, self.mass_floor)
        self.trimmed_mass += lost
        return lo2, out

    def transition_prob(self, x, y, l):
        """p_{x,y,l} for the main chain (R = r, vf = v); 0 off support."""
        R, vf = self.params.r, self.params.v
        if not (0 <= x <= R and 0 <= y <= R and 1 <= l <= self.t):
            raise ValueError("state or step out of range")
        be = self.backend
        if (y - x + vf) % 2 != 0:
            return be.zero
        a = (y - x + vf) // 2  # up-flips needed to move x -> y
        if a < 0 or a > vf:
            return be.zero
        if l == 1:
            return be.one if (x == 0 and y == vf) else be.zero
        pu, pd = self._pi_pair(l)
        qu, qd = be.one - pu, be.one - pd
        def up(aa):
            if aa > R - x:
                return be.zero
            return be.binom(R - x, aa) * pu**aa * qu ** (R - x - aa)
        def down(dd):
            if dd > x:
                return be.zero
            return be.binom(x, dd) * pd**dd * qd ** (x - dd)
        rho = up(a) * down(vf - a)
        omega = be.zero
        for aa in range(0, vf + 1):
            omega = omega + up(aa) * down(vf - aa)
        if float(omega) == 0.0:
            return be.one if x == y else be.zero
        return rho / omega

    def _run_chain(self, R, vf_for_step, snapshots=None):
        """Run steps l=1..t from the empty-syndrome state.  vf_for_step maps a
        global step index to its flip count; optional `snapshots` collects the
        state after every step (index = number of steps taken)."""
        be = self.backend
        lo, probs = 0, be.array([1])
        if snapshots is not None:
            snapshots.append((lo, probs.copy()))
        for l in range(1, self.t + 1):
            lo, probs = self._step(lo, probs, l, R, vf_for_step(l))
            if snapshots is not None:
                snapshots.append((lo, probs.copy()))
        return lo, probs

    # ------------------------------------------------------------ public pmfs
    def syndrome_weight_distribution(self):
        """Pmf of the syndrome weight W_t over y in [0, r]."""
        if self._wp is None or not self.memo:
            be = self.backend
            if self.t == 0:
                self._wp = Pmf(0, be.array([1]), be)
            else:
                lo, probs = self._run_chain(self.params.r, lambda l: self.params.v)
                self._wp = Pmf(lo, probs, be)
        return self._wp

    def _flip_chain_family(self, threads=1):
        """Final modified-chain states for every flip count f in [0, fmax]:
        list of (lo, probs) giving Pr(chain state = x | F_t = f) over r-1 bits."""
        if self._flip_family is not None and self.memo:
            return self._flip_family
        R = self.params.r - 1
        v = self.params.v
        t = self.t
        fmax = min(t, self.params.w)
        fcut = self._phi_cutoff(fmax)
        snaps = []
        # phase 1 for every possible length in one pass (prefix sharing)
        self._run_chain(R, lambda l: v, snapshots=snaps)
        if threads > 1 and fcut >= 8:
            family = self._phase2_parallel(snaps, R, v, fcut, threads)
        else:
            family = [
                self._phase2(snaps[t - f], R, v, f) for f in range(0, fcut + 1)
            ]
        empty = (0, self.backend.zeros(1))
        family.extend(empty for _ in range(fcut + 1, fmax + 1))
        if self.memo:
            self._flip_family = family
        return family

    def _phi_cutoff(self, fmax):
        """Largest flip count whose prior is above phi_floor of the modal one."""
        logs = [
            math.lgamma(self.params.w + 1)
            - math.lgamma(f + 1)
            - math.lgamma(self.params.w - f + 1)
            + math.lgamma(self.params.n - self.params.w + 1)
            - math.lgamma(self.t - f + 1)
            - math.lgamma(self.params.n - self.params.w - (self.t - f) + 1)
            for f in range(fmax + 1)
        ]
        cut = math.log(self.phi_floor) + max(logs)
        fcut = fmax
        while fcut > 0 and logs[fcut] < cut:
            fcut -= 1
        return fcut

    def _phase2(self, state, R, v, f):
        lo, probs = state[0], state[1].copy()
        for l in range(self.t - f + 1, self.t + 1):
            lo, probs = self._step(lo, probs, l, R, v - 1)
        return (lo, probs)

    def _phase2_parallel(self, snaps, R, v, fmax, threads):
        from .parallel import map_phase2

        return map_phase2(self, snaps, R, v, fmax, threads)

    def flip_conditional_table(self, threads=1):
        """(fs, cond) where cond[f] is Pr(W_t = y | F_t = f) as a Pmf over y.

        A bit flipped an odd number of times ends set, so the observed
        syndrome weight is the modified-chain state plus one when f is odd.
        """
        family = self._flip_chain_family(threads)
        be = self.backend
        out = []
        for f, (lo, probs) in enumerate(family):
            out.append(Pmf(lo + (f % 2), probs, be))
        return out

    def flip_marginal(self, threads=1):
        """Pmf of W_t implied by the modified chains: sum_f phi(f,t) Pr(y|f).

        This is the exact Bayes denominator for `conditional_flip_pmf`, so the
        law of total probability holds to machine accuracy by construction.
        """
        cond = self.flip_conditional_table(threads)
        be = self.backend
        lo = min(c.lo for c in cond)
        hi = max(c.hi for c in cond)
        acc = be.zeros(hi - lo + 1)
        for f, c in enumerate(cond):
            acc[c.lo - lo : c.hi - lo + 1] += self.phi(f, self.t) * c.probs
        return Pmf(lo, acc, be)

    def conditional_flip_pmf(self, y, threads=1):
        """Posterior pmf of F_t given W_t = y, over f in [0, min(t,w)]."""
        cond = self.flip_conditional_table(threads)
        be = self.backend
        num = be.array([self.phi(f, self.t) * cond[f][y] for f in range(len(cond))])
        den = num.sum()
        if float(den) == 0.0:
            raise ValueError("syndrome weight y=%d has zero probability" % y)
        return Pmf(0, num / den, be)
