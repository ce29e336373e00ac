import pytest

from conftest import TOY, TOY_T

from flipdfr.backend import get_backend
from flipdfr.chain import ChainContext
from flipdfr.iter1 import build_profile
from flipdfr.iter2 import (
    DfrReport,
    Iter2Context,
    expected_class_rates,
    one_eq_conditionals,
    two_iteration_dfr,
)

TH = 6


@pytest.fixture(scope="module")
def ctx2(toy_ctx):
    prof = build_profile(toy_ctx, TH)
    return Iter2Context(toy_ctx, prof, TH)


def test_one_eq_conditionals_ordering(toy_ctx):
    prof = build_profile(toy_ctx, TH)
    c = one_eq_conditionals(prof, TOY, toy_ctx.backend)
    # relaxing the threshold by one only raises a flip probability
    assert float(c[1]) >= float(c[0])
    for x in c:
        assert 0.0 <= float(x) <= 1.0


def test_class_probs_in_range(ctx2):
    cp = ctx2.class_flip_probs(3, 14)
    for p in (cp.p_flip00, cp.p_nflip01, cp.p_flip10, cp.p_nflip11):
        assert 0.0 <= float(p) <= 1.0


def test_error_class_flips_more(ctx2):
    # a still-erroneous bit must be likelier to flip than a clean bit
    cp = ctx2.class_flip_probs(3, 14)
    p_flip11 = 1.0 - float(cp.p_nflip11)
    assert p_flip11 > float(cp.p_flip00)


def test_success_failure_complement(ctx2):
    be = ctx2.be
    s = ctx2.success_prob_given_eps(2, 10)
    f = ctx2.failure_prob_given_eps(2, 10)
    assert float(s + f) == pytest.approx(1.0, abs=1e-9)


def test_tau_short_circuit(ctx2):
    assert float(ctx2.success_prob_given_eps(1, 1, tau=2)) == 1.0
    assert float(ctx2.failure_prob_given_eps(1, 1, tau=2)) == 0.0


def test_expectation_bound_dominates(ctx2):
    exact = float(ctx2.failure_prob_given_eps(3, 14))
    bound = float(ctx2.failure_prob_given_eps(3, 14, bound="expectation"))
    assert bound >= exact


def test_report_roundtrip(std):
    rep = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std)
    assert 0.0 < float(rep.dfr) < 1.0
    assert rep.log2_dfr < 0
    row = rep.csv_row()
    assert row.count(",") == DfrReport.CSV_HEADER.count(",")
    assert "%d" % TOY.n in row


def test_modes_agree_loosely(std):
    avg = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std, mode="averaged")
    per = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std, mode="per-y")
    assert float(avg.dfr) == pytest.approx(float(per.dfr), rel=0.3)


def test_second_iteration_helps(std):
    from flipdfr.iter1 import dfr1

    ctx = ChainContext(TOY, TOY_T, std)
    rep = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std, chain_ctx=ctx)
    assert float(rep.dfr) < float(dfr1(ctx, TH, mode="averaged"))


def test_expected_class_rates_sane(std):
    rates = expected_class_rates(TOY, TOY_T, TH, TH, backend=std)
    for ab in ("00", "01", "10", "11"):
        assert 0.0 <= float(rates[ab]) <= 1.0
    # these are per-class bad-event rates; the clean untouched class is by
    # far the safest, and still-discrepant classes are the riskiest
    assert float(rates["00"]) < float(rates["01"]) < float(rates["11"])
    assert float(rates["11"]) < 1e-3


def test_cutoff_matches_full(std):
    on = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std, cutoff=True)
    off = two_iteration_dfr(TOY, TOY_T, TH, TH, backend=std, cutoff=False)
    assert float(on.dfr) == pytest.approx(float(off.dfr), rel=1e-9)
    assert on.terms_eval <= off.terms_eval
