import math

import pytest

from conftest import TOY, TOY_T

from flipdfr.backend import Pmf, get_backend
from flipdfr.chain import ChainContext
from flipdfr.codes import CodeParams


def test_phi_is_hypergeometric(toy_ctx):
    # phi(f, l): f of the w slots of one equation among l drawn positions
    n, w = TOY.n, TOY.w
    l = 10
    total = sum(float(toy_ctx.phi(f, l)) for f in range(min(w, l) + 1))
    assert total == pytest.approx(1.0, abs=1e-12)
    ref = math.comb(w, 2) * math.comb(n - w, l - 2) / math.comb(n, l)
    assert float(toy_ctx.phi(2, l)) == pytest.approx(ref, rel=1e-12)


def test_pi_probabilities_in_range(toy_ctx):
    for l in range(2, TOY_T + 1):
        up = float(toy_ctx.pi_up(l))
        down = float(toy_ctx.pi_down(l))
        assert 0.0 < up < 1.0
        assert 0.0 <= down < 1.0
    with pytest.raises(ValueError):
        toy_ctx.pi_down(1)


def test_first_step_point_mass(toy_ctx):
    # one asserted bit sets exactly v equations
    assert float(toy_ctx.transition_prob(0, TOY.v, 1)) == pytest.approx(1.0)
    assert float(toy_ctx.transition_prob(0, TOY.v - 1, 1)) == 0.0


def test_row_stochastic(toy_ctx):
    # criterion: sum_y p_{x,y,l} = 1 +- 1e-9 for reachable x at every step
    for l in (2, 5, TOY_T):
        lo = TOY.v if l == 2 else 0
        for x in range(lo, min(TOY.v * (l - 1), TOY.r) + 1, 37):
            total = sum(
                float(toy_ctx.transition_prob(x, y, l))
                for y in range(max(0, x - TOY.v), min(TOY.r, x + TOY.v) + 1)
            )
            assert total == pytest.approx(1.0, abs=1e-9), (x, l)


def test_parity_support(toy_ctx):
    # state after l steps has the parity of l*v
    wp = toy_ctx.syndrome_weight_distribution()
    for y, p in wp.iter_items():
        if (y - TOY_T * TOY.v) % 2 == 1:
            assert float(p) == 0.0


def test_wp_normalized(toy_ctx):
    wp = toy_ctx.syndrome_weight_distribution()
    assert float(wp.total()) == pytest.approx(1.0, abs=1e-9)
    assert 100 < float(wp.mean()) < 200  # bulk sits near t*v scaled down by overlaps


def test_t_zero_point_mass(std):
    ctx = ChainContext(TOY, 0, std)
    wp = ctx.syndrome_weight_distribution()
    assert wp.lo == 0 and float(wp[0]) == 1.0


def test_marginalization_identity(toy_ctx):
    # sum_y Pr(F=f | W=y) Pr(W=y) recovers the prior phi(f, t)
    wp = toy_ctx.flip_marginal()
    fmax = min(TOY_T, TOY.w)
    acc = [0.0] * (fmax + 1)
    for y, p in wp.iter_items():
        if float(p) <= 0.0:
            continue
        post = toy_ctx.conditional_flip_pmf(y)
        for f in range(fmax + 1):
            acc[f] += float(post[f]) * float(p)
    for f in range(fmax + 1):
        assert acc[f] == pytest.approx(float(toy_ctx.phi(f, TOY_T)), abs=1e-9), f


def test_flip_marginal_close_to_wp(toy_ctx):
    # two routes to the same distribution: direct chain vs mixture over f
    wp = toy_ctx.syndrome_weight_distribution()
    fm = toy_ctx.flip_marginal()
    assert wp.tv_distance(fm) < 1e-4


def test_conditional_unreachable_weight(toy_ctx):
    with pytest.raises(ValueError):
        # off-parity weight is unreachable
        toy_ctx.conditional_flip_pmf(TOY_T * TOY.v - 1)


def test_phi_cutoff_keeps_all_at_toy(toy_ctx):
    fmax = min(TOY_T, TOY.w)
    assert toy_ctx._phi_cutoff(fmax) == fmax


def test_memo_off_matches(std):
    a = ChainContext(TOY, 6, std, memo=True).syndrome_weight_distribution()
    b = ChainContext(TOY, 6, std, memo=False).syndrome_weight_distribution()
    assert a.lo == b.lo
    assert all(float(x) == float(y) for x, y in zip(a.probs, b.probs))


def test_backends_agree_small(std, ext):
    pa = ChainContext(TOY, 8, std).syndrome_weight_distribution()
    pb = ChainContext(TOY, 8, ext).syndrome_weight_distribution()
    for y, p in pa.iter_items():
        if float(p) > 1e-12:
            assert float(p) == pytest.approx(float(pb[y]), rel=1e-8)
