import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipdfr.codes import (
    CodeParams,
    ErrorVector,
    ParameterError,
    export_pcm,
    generate_qc_pcm,
    generate_regular_pcm,
    import_pcm,
    rng_for,
    sample_error,
    syndrome,
)


def test_params_regular_ok():
    p = CodeParams.regular(4400, 2200, 11, 22)
    assert (p.n, p.r, p.k, p.v, p.w) == (4400, 2200, 2200, 11, 22)


def test_params_rejections():
    with pytest.raises(ParameterError):
        CodeParams.regular(100, 50, 3, 7)  # v*n != w*r
    with pytest.raises(ParameterError):
        CodeParams.quasi_cyclic(2, 10, 11)  # v >= p
    with pytest.raises(ParameterError):
        CodeParams.regular(0, 0, 1, 1)


def test_params_qc_shape():
    p = CodeParams.quasi_cyclic(4, 13397, 83)
    assert p.n == 4 * 13397
    assert p.k == 3 * 13397
    assert p.r == 13397
    assert p.w == 4 * 83


def test_rng_for_streams_differ():
    a = rng_for(7, "matrix").integers(0, 2**32, 4)
    b = rng_for(7, "error").integers(0, 2**32, 4)
    c = rng_for(7, "matrix").integers(0, 2**32, 4)
    assert np.array_equal(a, c)
    assert not np.array_equal(a, b)
    assert not np.array_equal(
        rng_for(7, "trial", 0, 1).integers(0, 2**32, 4),
        rng_for(7, "trial", 1, 0).integers(0, 2**32, 4),
    )


def _check_regularity(H):
    p = H.params
    assert len(H.row_supports) == p.r
    assert all(len(row) == p.w == len(set(row)) for row in H.row_supports)
    assert all(len(col) == p.v == len(set(col)) for col in H.col_supports)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generate_regular(seed):
    params = CodeParams.regular(440, 220, 11, 22)
    H = generate_regular_pcm(params, seed)
    _check_regularity(H)
    assert np.array_equal(
        H.to_dense(), generate_regular_pcm(params, seed).to_dense()
    )  # deterministic


def test_generate_regular_w_not_dividing_n():
    params = CodeParams.regular(14, 7, 2, 4)
    H = generate_regular_pcm(params, 3)
    _check_regularity(H)


def test_generate_qc_circulant_blocks():
    params = CodeParams.quasi_cyclic(2, 53, 7)
    H = generate_qc_pcm(params, 9)
    _check_regularity(H)
    dense = H.to_dense()
    for b in range(2):
        block = dense[:, b * 53 : (b + 1) * 53]
        for i in range(1, 53):
            assert np.array_equal(block[i], np.roll(block[0], i))


def test_sample_error_and_syndrome(worked_instance):
    params, H, e, s = worked_instance
    assert syndrome(H, e).bits == s.bits
    err = sample_error(100, 7, 5)
    assert err.weight == 7
    assert sample_error(100, 7, 5).support == err.support


def test_error_xor():
    a = ErrorVector(10, (1, 3))
    b = ErrorVector(10, (3, 4))
    assert (a ^ b).support == (1, 4)


def test_pcm_roundtrip(tmp_path):
    params = CodeParams.regular(44, 22, 11, 22)
    H = generate_regular_pcm(params, 0)
    path = tmp_path / "pcm.txt"
    export_pcm(H, path)
    H2 = import_pcm(path)
    assert np.array_equal(H.to_dense(), H2.to_dense())


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_generate_regular_always_regular(seed):
    params = CodeParams.regular(72, 36, 6, 12)
    _check_regularity(generate_regular_pcm(params, seed))


def test_sparse_matches_dense():
    params = CodeParams.regular(440, 220, 11, 22)
    H = generate_regular_pcm(params, 4)
    assert np.array_equal(H.to_sparse().toarray(), H.to_dense())
