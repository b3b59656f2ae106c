import math

import numpy as np
import pytest

from cbcpir.attacks import (
    _chunks,
    beta_success_bound,
    block_deletion_ranks,
    full_modified_attack,
    gaussian_binomial,
    hhw_success_bound_log_q,
    isd_workfactor_log2,
    monte_carlo,
    rank_collapse_bound_log2,
    subquery_attack,
    subspace_guess_log2,
    support_attack_beta,
)
from cbcpir.scheme import TOY, Params, Variant, build_query


def test_gaussian_binomial_small_values():
    assert gaussian_binomial(2, 1, 2) == 3
    assert gaussian_binomial(4, 2, 2) == 35
    assert gaussian_binomial(5, 0, 3) == 1
    assert gaussian_binomial(3, 1, 3) == 13


def test_isd_workfactor():
    assert isd_workfactor_log2(100, 50) == pytest.approx(3 * math.log2(50) + math.log2(math.comb(100, 50)))


def test_subspace_guess_formula():
    # binom(s,s-1)_q / binom(w,w-1)_q = (q^s-1)/(q^w-1)
    assert subspace_guess_log2(3, 4, 2) == pytest.approx(math.log2((3**4 - 1) / (3**2 - 1)))


def test_chunks_cover_and_share_anchor():
    for m, h in [(4, 2), (7, 6), (7, 7), (10, 3), (5, 9)]:
        ch = _chunks(m, h)
        assert all(c[0] == 0 for c in ch)
        assert all(len(c) == min(h, m) for c in ch)
        assert set().union(*map(set, ch)) == set(range(m))


@pytest.mark.parametrize("m", [5, 6])
def test_hhw_subquery_attack_wins_above_threshold(m):
    p = Params(**TOY, variant=Variant.HHW).with_(m=m)
    rep = monte_carlo(p, 40, seed=m)
    assert rep.successes == 40


def test_hhw_target_deletion_is_rank_minimum(rng):
    p = Params(**TOY, variant=Variant.HHW).with_(m=6)
    q, _ = build_query(p, 2, rng)
    ranks = block_deletion_ranks(q.blocks[0], p)
    assert ranks[2] < min(r for j, r in enumerate(ranks) if j != 2)
    assert subquery_attack(q.blocks[0], p, 2).succeeded


@pytest.mark.parametrize("variant", [Variant.CB_BETA, Variant.CB_MATRIX_S])
def test_subquery_attack_no_better_than_chance(variant):
    p = Params(**TOY, variant=variant).with_(m=6)
    rep = monte_carlo(p, 60, seed=7)
    assert rep.successes == 0
    assert rep.pvalue_above_chance() > 0.05


def test_support_attack_recovers_beta_up_to_scalar(rng):
    p = Params(**TOY, variant=Variant.CB_BETA).with_(m=7)
    q, qs = build_query(p, 4, rng)
    F = p.base()
    beta = support_attack_beta(q.blocks[0], p, h=7)
    assert beta is not None
    want = F.mul(qs.mask, F.inv(qs.mask[0]))
    assert np.array_equal(beta, want)


def test_modified_attack_breaks_beta_with_enough_files():
    p = Params(**TOY, variant=Variant.CB_BETA).with_(m=7)
    rep = monte_carlo(p, 20, seed=3, attack="modified", h=7)
    assert rep.successes == 20


def test_modified_attack_fails_on_matrix_s():
    p = Params(**TOY, variant=Variant.CB_MATRIX_S).with_(m=7)
    rep = monte_carlo(p, 20, seed=3, attack="modified", h=7)
    assert rep.successes == 0


def test_support_attack_gate():
    p = Params(q=5, s=4, v=2, n=8, k=4, delta=8, m=12, variant="beta")
    with pytest.raises(ValueError):
        support_attack_beta(np.zeros((96, 8, 4), dtype=np.int64), p, h=12)


def test_modified_attack_requires_two_blocks(rng):
    p = Params(**TOY, variant=Variant.HHW)
    q, _ = build_query(p, 0, rng)
    with pytest.raises(ValueError):
        full_modified_attack(q, p, 2)


def test_monte_carlo_rejects_zero_trials():
    with pytest.raises(ValueError):
        monte_carlo(Params(**TOY), 0, seed=1)


def test_bounds_formulas():
    p = Params(**TOY, variant=Variant.HHW)
    assert hhw_success_bound_log_q(p) == 9 * 16 - 64 * 3
    e, wmin = rank_collapse_bound_log2(p, 1)
    assert e == hhw_success_bound_log_q(p)
    assert wmin == 4 + 1 - 4
    assert 0 <= beta_success_bound(p.with_(variant="beta"), 2) <= 1


@pytest.mark.parametrize("variant", [Variant.CB_BETA, Variant.CB_MATRIX_S])
def test_block_rank_property_at_toy_size(variant):
    p = Params(**TOY, variant=variant)
    rng = np.random.default_rng(31)
    equal = 0
    for _ in range(100):
        q, _ = build_query(p, int(rng.integers(p.m)), rng)
        equal += all(len(set(block_deletion_ranks(b, p))) == 1 for b in q.blocks)
    assert equal >= 99
