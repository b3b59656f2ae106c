import csv
import io
import math
from fractions import Fraction

import pytest

from cbcpir.costs import (
    CSV_HEADER,
    SIMPLEPIR_TABLE,
    SWEEPS,
    XPIR_TABLE,
    Sweep,
    amortized_limit_rate,
    cbcpir_cost,
    cbcpir_rate_formula,
    emit_curves,
    flat_rate,
    limit_rate,
    simplepir_cost,
    sweep_rows,
    xpir_cost,
)
from cbcpir.hypercube import CubeShape, iterative_rate
from cbcpir.scheme import TABLE_PRESETS, TOY, Params, Variant


def test_table_rates():
    want = [Fraction(1, 128), Fraction(1, 64), Fraction(1, 24), Fraction(1, 12), Fraction(1, 10), Fraction(1, 6)]
    got = [limit_rate(Params(*TABLE_PRESETS[f"table1-row{i}"])) for i in range(1, 7)]
    assert got == want


def test_flat_cost_matches_formulas():
    p = Params(**TOY)
    c = cbcpir_cost(p)
    ns = p.n * p.s
    assert c.upload_symbols == 2 * p.m * p.delta * ns
    assert c.download_symbols == 2 * p.L * ns
    assert c.server_muls == 2 * p.L * p.m * p.delta * ns
    assert c.rate == flat_rate(p)
    assert c.qgen_muls == 2 * p.delta * p.k * p.s * (p.m * p.n + p.m * p.v + p.w + min(p.m, p.q))
    assert c.adec_muls == 2 * p.L * p.k * (ns + p.s**2 + p.w + p.delta * p.s)


def test_hhw_uses_one_block():
    p = Params(**TOY, variant=Variant.HHW)
    assert cbcpir_cost(p).upload_symbols == p.m * p.delta * p.n * p.s
    assert limit_rate(p) == Fraction(p.delta, p.n * p.s)


def test_amortized_rate_approaches_limit():
    p = Params(**TOY).with_(L=10**9)
    c = cbcpir_cost(p, f=9)
    assert abs(float(c.rate) - float(amortized_limit_rate(p, 9))) < 1e-6


def test_iterative_cost_matches_rate():
    p = Params(**TOY).with_(m=9)
    sh = CubeShape(2, 3, 1)
    c = cbcpir_cost(p, sh)
    assert c.rate == iterative_rate(p, sh)
    assert c.server_muls == 2 * p.L * p.m * p.delta * p.n * p.s


def test_rate_formula_float_and_exact_agree():
    exact = cbcpir_rate_formula(100, 64, 3, 2, 100, 3, 100)
    approx = cbcpir_rate_formula(100.0, 64.0, 3, 2, 100, 3, 100)
    assert isinstance(exact, Fraction)
    assert float(exact) == pytest.approx(approx, rel=1e-12)


def test_xpir_cost():
    xp = XPIR_TABLE[0]
    c = xpir_cost(xp, 10, 40_000)
    assert c.upload_bits == 10 * 128_000
    assert c.download_bits == 40_000 * Fraction(128_000, 20_000)
    assert XPIR_TABLE[2].expansion == Fraction(16, 3)


def test_simplepir_cost():
    sp = SIMPLEPIR_TABLE[0]
    c = simplepir_cost(sp, 10_000, 5)
    total = 1024 * 5 * 100 + 6 * 100
    assert c.rate == pytest.approx(5 * math.log2(991) / (total * 32))
    assert c.server_muls == 2 * 5 * 10_000 * 1024 + 2 * 5 * 10_000
    assert simplepir_cost(sp, 10, 1).upload_symbols == 4


def test_emit_curves_format():
    text = emit_curves(Sweep("xpir-files", 6400, 1e8, 3))
    assert "\r" not in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 3 * 3
    for r in rows[1:]:
        float(r[3])


def test_sweep_values_are_formula_evaluations():
    sw = Sweep("xpir-files", 6400, 1e6, 4)
    for name, _, x, rate, *_ in sweep_rows(sw):
        if name == "cbcpir_t1_w1":
            assert rate == cbcpir_rate_formula(x, 10_000.0, 1, 1, 100, 3, 100)


@pytest.mark.parametrize("kw", [dict(samples=0), dict(lo=0), dict(kind="nope"), dict(lo=10, hi=1)])
def test_bad_sweep(kw):
    d = dict(kind="xpir-db", lo=1, hi=10, samples=3)
    d.update(kw)
    with pytest.raises(ValueError):
        Sweep(**d)


def test_presets_cover_figures():
    assert set(SWEEPS) == {"xpir-files", "xpir-db", "simplepir-files", "simplepir-db"}
