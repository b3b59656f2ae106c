import numpy as np
import pytest

from cbcpir.field import project_v, project_w
from cbcpir.linalg import rank
from cbcpir.scheme import (
    TABLE_PRESETS,
    TOY,
    Database,
    Params,
    Variant,
    answer,
    build_followup_query,
    build_query,
    naive_answer,
    recover,
    recover_parts,
    reuse_r1,
    sample_beta,
    sample_s_matrices,
    secretively_sample,
)


def test_round_trip_every_index(toy, rng):
    db = Database.random(toy, rng)
    for i in range(toy.m):
        q, qs = build_query(toy, i, rng)
        assert len(q.blocks) == toy.blocks
        assert np.array_equal(recover(answer(db, q), qs, toy), db.file(i))


def test_query_shape(toy, rng):
    q, _ = build_query(toy, 0, rng)
    assert q.matrix.shape == (toy.m * toy.delta, toy.blocks * toy.n, toy.s)


def test_secret_structure(rng):
    p = Params(**TOY)
    st = secretively_sample(p, rng)
    comp = list(st.iset.complement)
    idx = list(st.iset.indices)
    assert not st.e[:, idx].any() and not st.delta_mat[:, idx].any()
    assert not project_w(st.e, st.basis).any()
    assert not project_v(st.delta_mat, st.basis).any()
    assert rank(p.base(), st.delta_w) == p.delta
    assert st.delta_w.shape == (p.delta, (p.n - p.k) * p.w)
    assert len(comp) == p.n - p.k


def test_beta_avoids_zero_and_minus_one(rng):
    p = Params(**TOY, variant=Variant.CB_BETA)
    for _ in range(50):
        b = sample_beta(p, rng)
        assert np.all(b != 0) and np.all(b != p.q - 1)


def test_s_matrices_nonzero(rng):
    p = Params(**TOY)
    S = sample_s_matrices(p, rng)
    assert S.shape == (p.m, p.delta, p.delta)
    assert all(S[j].any() for j in range(p.m))


def test_first_block_independent_of_index(rng):
    p = Params(**TOY, variant=Variant.CB_BETA)
    mask = sample_beta(p, rng)
    secrets = (secretively_sample(p, rng), secretively_sample(p, rng))
    q0, _ = build_query(p, 0, rng, mask=mask, secrets=secrets)
    q3, _ = build_query(p, 3, rng, mask=mask, secrets=secrets)
    assert np.array_equal(q0.blocks[0], q3.blocks[0])
    assert not np.array_equal(q0.blocks[1], q3.blocks[1])


@pytest.mark.parametrize("variant", [Variant.CB_BETA, Variant.CB_MATRIX_S])
def test_followup_reuses_first_block(variant, rng):
    p = Params(**TOY, variant=variant)
    db = Database.random(p, rng)
    q, qs = build_query(p, 1, rng)
    r1, _ = recover_parts(answer(db, q), qs, p)
    for i in range(p.m):
        q2, qs2 = build_followup_query(p, qs, i, rng)
        assert np.array_equal(reuse_r1(r1, answer(db, q2), qs2, p), db.file(i))


def test_followup_needs_two_blocks(rng):
    p = Params(**TOY, variant=Variant.HHW)
    _, qs = build_query(p, 0, rng)
    with pytest.raises(ValueError):
        build_followup_query(p, qs, 0, rng)


def test_naive_answer_counts_multiplications(toy, rng):
    db = Database.random(toy, rng)
    q, _ = build_query(toy, 2, rng)
    a, muls = naive_answer(db, q)
    assert np.array_equal(a, answer(db, q))
    assert muls == toy.blocks * toy.L * toy.m * toy.delta * toy.n * toy.s


def test_answer_dimension_mismatch(rng):
    p = Params(**TOY)
    q, _ = build_query(p, 0, rng)
    db = Database.random(p.with_(m=3), rng)
    with pytest.raises(ValueError):
        answer(db, q)


def test_bad_index(rng):
    with pytest.raises(IndexError):
        build_query(Params(**TOY), 4, rng)


@pytest.mark.parametrize(
    "kw",
    [dict(delta=9), dict(v=4), dict(k=8), dict(m=0), dict(q=1)],
)
def test_params_validation(kw):
    d = dict(TOY)
    d.update(kw)
    with pytest.raises(ValueError):
        Params(**d)


def test_beta_variant_needs_q_at_least_three():
    with pytest.raises(ValueError):
        Params(q=2, s=4, v=2, n=8, k=4, delta=8, variant="beta")


def test_params_dict_round_trip():
    p = Params(**TOY, variant="beta")
    assert Params.from_dict(p.to_dict()) == p


def test_presets_are_valid():
    for q, s, v, n, k, d in TABLE_PRESETS.values():
        assert d == (n - k) * (s - v)
        Params(q, s, v, n, k, d)


def test_recover_rejects_wrong_width(rng):
    p = Params(**TOY)
    db = Database.random(p, rng)
    q, qs = build_query(p, 0, rng)
    a = answer(db, q)
    with pytest.raises(ValueError):
        recover(a[:, : p.n], qs, p)


def test_database_from_files(rng):
    p = Params(**TOY)
    files = [p.base().random(rng, (p.L, p.delta)) for _ in range(3)]
    db = Database.from_files(files)
    assert db.m == 3 and db.L == p.L
    assert np.array_equal(db.file(2), files[2])
