import numpy as np
import pytest

from cbcpir.code import (
    erasure_decode,
    information_set,
    parity_check,
    sample_code,
    sample_codeword_matrix,
    sample_information_set,
)
from cbcpir.field import ext_field_build
from cbcpir.linalg import RankDeficient, mat_mul, rank


@pytest.fixture
def code(rng):
    return sample_code(8, 4, ext_field_build(3, 4), rng)


def test_code_is_full_rank(code):
    assert (code.k, code.n) == (4, 8)
    assert rank(code.ext, code.gen) == 4


def test_parity_check_annihilates(code, rng):
    h = parity_check(code)
    assert h.shape[:2] == (4, 8)
    hT = np.transpose(h, (1, 0, 2))
    assert not mat_mul(code.ext, code.gen, hT).any()
    iset = sample_information_set(code, rng)
    assert not mat_mul(code.ext, code.gen, np.transpose(parity_check(code, iset), (1, 0, 2))).any()


def test_erasure_decode_splits_codeword_and_noise(code, rng):
    ext = code.ext
    iset = sample_information_set(code, rng)
    cw = sample_codeword_matrix(code, 6, rng)
    noise = ext.zeros((6, 8))
    comp = list(iset.complement)
    noise[:, comp] = ext.random(rng, (6, len(comp)))
    got_c, got_e = erasure_decode(ext.add(cw, noise), code, iset)
    assert np.array_equal(got_c, cw)
    assert np.array_equal(got_e, noise)


def test_information_set_validation(code):
    ext = code.ext
    with pytest.raises(ValueError):
        information_set(code, [0, 1, 2])
    bad = code.gen.copy()
    bad[:, 1] = bad[:, 0]
    from cbcpir.code import LinearCode

    with pytest.raises(RankDeficient):
        information_set(LinearCode(ext, bad), [0, 1, 2, 3])


def test_sample_code_rejects_bad_dims(rng):
    with pytest.raises(ValueError):
        sample_code(4, 4, ext_field_build(3, 2), rng)
