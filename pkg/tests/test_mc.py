import numpy as np
import pytest

from flipdfr.backend import get_backend
from flipdfr.chain import ChainContext
from flipdfr.codes import CodeParams, generate_qc_pcm, generate_regular_pcm, sample_error, syndrome
from flipdfr.decoder import ThresholdSchedule, decode
from flipdfr.mc import (
    ExperimentPlan,
    FastCode,
    SweepPoint,
    clopper_pearson,
    decode_fast,
    hist_tv_distance,
    run_experiment,
    syndrome_weight_samples,
)

SMALL = CodeParams.regular(440, 220, 11, 22)


def test_fastcode_matches_reference_regular():
    for seed in (0, 1, 2):
        H = generate_regular_pcm(SMALL, seed)
        fc = FastCode.generate(SMALL, seed)
        assert np.array_equal(H.to_dense(), fc.to_dense())


def test_fastcode_matches_reference_qc():
    params = CodeParams.quasi_cyclic(2, 53, 7)
    for seed in (3, 4):
        H = generate_qc_pcm(params, seed)
        fc = FastCode.generate(params, seed)
        assert np.array_equal(H.to_dense(), fc.to_dense())


def test_decode_fast_matches_reference():
    sched = ThresholdSchedule.majority(SMALL.v, 2)
    for seed in range(20):
        H = generate_regular_pcm(SMALL, seed)
        fc = FastCode.generate(SMALL, seed)
        e = sample_error(SMALL.n, 12, seed + 100)
        tr = decode(H, syndrome(H, e), sched, 2, truth=e)
        ft = decode_fast(fc, e.support, (sched[0], sched[1]), 2, keep_flips=True)
        assert tr.decode_ok == ft.success
        assert [set(rec.flipped) for rec in tr.iterations] == [
            set(np.flatnonzero(m)) for m in ft.flips
        ]


def test_clopper_pearson():
    lo, hi = clopper_pearson(0, 100)
    assert lo == 0.0 and 0.02 < hi < 0.05
    lo, hi = clopper_pearson(50, 100)
    assert 0.39 < lo < 0.5 < hi < 0.61
    lo, hi = clopper_pearson(100, 100)
    assert hi == 1.0


def _plan(**kw):
    args = dict(
        points=(SweepPoint(SMALL, 16, 6, 6),),
        trials=256,
        master_seed=5,
    )
    args.update(kw)
    return ExperimentPlan(**args)


def test_run_experiment_basic():
    report = run_experiment(_plan())
    res = report.results[0]
    assert res.trials == 256
    assert 0 <= res.failures <= 256
    assert res.ci_lo <= res.dfr <= res.ci_hi


def test_run_experiment_deterministic_any_threads():
    a = run_experiment(_plan(), threads=1)
    b = run_experiment(_plan(), threads=8)
    assert a.results[0].failures == b.results[0].failures


def test_early_stop_exact():
    plan = _plan(points=(SweepPoint(SMALL, 40, 6, 6),), trials=512, failures_target=10)
    res = run_experiment(plan).results[0]
    assert res.failures == 10
    # the stopping trial itself is a failure and is the last one counted
    full = run_experiment(_plan(points=(SweepPoint(SMALL, 40, 6, 6),), trials=512)).results[0]
    assert res.trials <= full.trials


def test_telemetry_shapes():
    plan = _plan(trials=64, telemetry=("syndrome-weight", "discrepancies", "class-flips"))
    res = run_experiment(plan).results[0]
    sw = res.telemetry["syndrome-weight"]
    assert sum(sw.values()) == 64
    hp = res.telemetry["discrepancies"]["d_plus"]
    assert sum(hp.values()) == 64
    cf = res.telemetry["class-flips"]
    total = sum(cf[ab]["size"] for ab in ("00", "01", "10", "11"))
    assert total == 64 * SMALL.n


def test_report_csv(tmp_path):
    plan = _plan(trials=32)
    report = run_experiment(plan)
    path = tmp_path / "sweep.csv"
    report.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# plan=")
    assert lines[1] == "n,p,v,w,t,th1,th2,trials,failures,dfr,ci_lo,ci_hi"
    assert len(lines) == 3


def test_syndrome_weight_sampler_matches_chain():
    std = get_backend("standard")
    ctx = ChainContext(SMALL, 12, std)
    model = ctx.syndrome_weight_distribution()
    samples = syndrome_weight_samples(SMALL, 12, 20000, 3)
    hist = {}
    for x in samples.tolist():
        hist[x] = hist.get(x, 0) + 1
    assert hist_tv_distance(hist, model) < 0.03


def test_syndrome_weight_sampler_qc_parity():
    params = CodeParams.quasi_cyclic(2, 101, 9)
    samples = syndrome_weight_samples(params, 10, 500, 1)
    assert ((samples - 10 * 9) % 2 == 0).all()
    assert (samples <= 101).all()


def test_sampler_deterministic():
    a = syndrome_weight_samples(SMALL, 12, 1000, 9)
    b = syndrome_weight_samples(SMALL, 12, 1000, 9)
    assert np.array_equal(a, b)
