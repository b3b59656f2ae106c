"""Communication, rate and multiplication counts for CB-cPIR and two baselines.

Rates are exact :class:`~fractions.Fraction` values whenever the inputs are
integers; SimplePIR rates involve ``log p / log q`` and are floats.  The
sweep helpers evaluate the same formulas on floats and write CSV.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hypercube import CubeShape
from .scheme import Params

__all__ = [
    "CostReport",
    "XpirParams",
    "SimplePirParams",
    "XPIR_TABLE",
    "SIMPLEPIR_TABLE",
    "bits_per_symbol",
    "limit_rate",
    "flat_rate",
    "amortized_limit_rate",
    "cbcpir_rate_formula",
    "cbcpir_cost",
    "xpir_cost",
    "simplepir_cost",
    "Sweep",
    "SWEEPS",
    "sweep_rows",
    "emit_curves",
    "CSV_HEADER",
]


@dataclass(frozen=True)
class CostReport:
    upload_bits: float
    download_bits: float
    rate: Fraction | float
    server_muls: int | Fraction | float
    qgen_muls: int | Fraction | float
    adec_muls: int | Fraction | float
    file_bits: float = 0
    upload_symbols: int | None = None  # F_q symbols, when meaningful
    download_symbols: int | None = None


@dataclass(frozen=True)
class XpirParams:
    n: int
    logq: int
    sp: int  # plaintext bits
    sc: int  # ciphertext bits

    def __post_init__(self):
        if self.sc < self.sp:
            raise ValueError("ciphertext must be at least as large as the plaintext")

    @property
    def expansion(self) -> Fraction:
        return Fraction(self.sc, self.sp)


@dataclass(frozen=True)
class SimplePirParams:
    n: int
    q: int
    p: int
    t: int = 1  # queries the hint is amortized over

    def __post_init__(self):
        if not self.p < self.q:
            raise ValueError("need p < q")
        if self.t < 1:
            raise ValueError("t must be positive")


XPIR_TABLE = (
    XpirParams(1024, 60, 20_000, 128_000),
    XpirParams(2048, 120, 100_000, 512_000),
    XpirParams(4096, 120, 192_000, 1_024_000),
)

SIMPLEPIR_TABLE = (
    SimplePirParams(1024, 2**32, 991),
    SimplePirParams(1024, 2**32, 495),
    SimplePirParams(1024, 2**32, 247),
)


def bits_per_symbol(q: int):
    """``log2 q``; an int for powers of two."""
    return q.bit_length() - 1 if q & (q - 1) == 0 else math.log2(q)


def limit_rate(p: Params) -> Fraction:
    """Rate as ``L`` grows: ``delta / (b n s)`` with ``b`` query blocks."""
    return Fraction(p.delta, p.blocks * p.n * p.s)


def flat_rate(p: Params) -> Fraction:
    """``L delta / (b (m delta + L) n s)``."""
    return Fraction(p.L * p.delta, p.blocks * (p.m * p.delta + p.L) * p.n * p.s)


def amortized_limit_rate(p: Params, f: int) -> Fraction:
    """``f delta / ((f+1) n s)`` for ``f`` retrievals sharing the first block."""
    return Fraction(f * p.delta, (f + 1) * p.n * p.s)


def cbcpir_rate_formula(L, m, t, omega, n, s, delta, blocks=2):
    """``L delta / (b x omega delta ns + L (b ns/delta)^omega x^(t-omega) delta)``.

    ``x = m^(1/t)``.  Works on ints/Fractions (with ``m`` a perfect power)
    and on floats.
    """
    if isinstance(m, float) or isinstance(L, float):
        x = m ** (1 / t)
        ratio = blocks * n * s / delta
    else:
        x = CubeShape.for_files(m, t, omega).x
        ratio = Fraction(blocks * n * s, delta)
    up = blocks * x * omega * delta * n * s
    down = L * ratio**omega * x ** (t - omega) * delta
    return L * delta / (up + down)


def _geom(ratio, terms):
    return sum(ratio**r for r in range(terms))


def cbcpir_cost(p: Params, shape: CubeShape | None = None, f: int = 1) -> CostReport:
    """Costs of retrieving file(s) with the flat, amortized or iterative protocol.

    ``f > 1`` means ``f`` retrievals that share one cached first block
    (flat layout only).
    """
    shape = shape or CubeShape(1, p.m, 1)
    if shape.m != p.m:
        raise ValueError("cube shape does not match the number of files")
    if f < 1:
        raise ValueError("f must be positive")
    b, ns, s, k = p.blocks, p.n * p.s, p.s, p.k
    bps = bits_per_symbol(p.q)
    per_row = ns + s * s + p.w + p.delta * s
    if shape.t == 1:
        nb = b * f if (b == 1 or f == 1) else f + 1
        up = nb * p.m * p.delta * ns
        down = nb * p.L * ns
        server = nb * p.L * p.m * p.delta * ns
        qgen = nb * p.delta * k * s * (p.m * p.n + p.m * p.v + p.w + min(p.m, p.q))
        adec = nb * p.L * k * per_row
        file_sym = f * p.L * p.delta
    else:
        if f != 1:
            raise ValueError("amortization is only modelled for the flat layout")
        x, t, om = shape.x, shape.t, shape.omega
        up = b * x * om * p.delta * ns
        down = p.L * Fraction(b * ns, p.delta) ** om * x ** (t - om) * p.delta
        server = b * p.L * p.m * p.delta * ns * _geom(Fraction(b * ns, p.delta * x), om)
        qgen = b * om * p.delta * k * s * (x * p.n + x * p.v + p.w + min(x, p.q))
        adec = b * om * p.L * x ** (t - 1) * k * _geom(Fraction(ns, p.delta * x), om) * per_row
        file_sym = p.L * p.delta
    up, down, server, adec = (_intify(v) for v in (up, down, server, adec))
    return CostReport(
        upload_bits=up * bps,
        download_bits=down * bps,
        rate=Fraction(file_sym) / (up + down),
        server_muls=server,
        qgen_muls=qgen,
        adec_muls=adec,
        file_bits=file_sym * bps,
        upload_symbols=up,
        download_symbols=down,
    )


def _intify(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def xpir_cost(xp: XpirParams, m, L) -> CostReport:
    """``C = m s_c + L s_c / s_p`` bits for an ``L``-bit file among ``m``."""
    up = m * xp.sc
    down = L * Fraction(xp.sc, xp.sp) if not isinstance(L, float) else L * xp.sc / xp.sp
    return CostReport(
        upload_bits=up,
        download_bits=down,
        rate=L / (up + down),
        server_muls=m * L * xp.n**2,
        qgen_muls=m * xp.n**2,
        adec_muls=L * xp.n**2,
        file_bits=L,
    )


def _ceil_sqrt(m) -> int:
    m = math.ceil(m)
    r = math.isqrt(m)
    return r if r * r == m else r + 1


def simplepir_cost(sp: SimplePirParams, m, L, exact_sqrt: bool = True) -> CostReport:
    """Costs amortized over ``sp.t`` queries of ``L`` symbols of ``Z_p`` each.

    ``sqrt(m)`` is rounded up to an integer unless ``exact_sqrt`` is false,
    in which case the real square root is used (as in the plotted curves).
    """
    rm = _ceil_sqrt(m) if exact_sqrt else math.sqrt(m)
    logq, logp = math.log2(sp.q), math.log2(sp.p)
    t, n = sp.t, sp.n
    hint = n * L * rm
    up = t * rm
    down = hint + L * t * rm
    total = hint + (L + 1) * t * rm
    return CostReport(
        upload_bits=up * logq,
        download_bits=down * logq,
        rate=L * t * logp / (total * logq),
        server_muls=2 * L * m * n + 2 * L * m * t,
        qgen_muls=L * rm * n,
        adec_muls=L * rm * n,
        file_bits=L * logp,
        upload_symbols=up,
        download_symbols=down,
    )


# -- curve sweeps -------------------------------------------------------------

CSV_HEADER = ["scheme", "x_axis", "x", "rate", "upload_bits", "download_bits", "server_muls"]

DB_BITS = 8_000_000_000  # 1 GB


@dataclass(frozen=True)
class Sweep:
    """A log-spaced sweep of one axis with the other parameters fixed.

    ``kind`` is one of ``xpir-files``, ``xpir-db``, ``simplepir-files`` or
    ``simplepir-db``.
    """

    kind: str
    lo: float
    hi: float
    samples: int = 10
    m: float = 10_000  # number of files where fixed
    L: float = 26_667  # file rows where fixed
    t_amortize: int = 100

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; expected one of {sorted(_KINDS)}")
        if self.samples < 1:
            raise ValueError("a sweep needs at least one sample")
        if not (0 < self.lo <= self.hi) or not math.isfinite(self.hi):
            raise ValueError("sweep range must satisfy 0 < lo <= hi")

    def points(self) -> np.ndarray:
        if self.samples == 1:
            return np.array([float(self.lo)])
        return np.geomspace(self.lo, self.hi, self.samples)


# CB-cPIR settings of the two comparisons: (q, n, s, delta) and the cube shapes
_CB_XPIR = dict(q=2**61 - 1, n=100, s=3, delta=100)
_CB_SIMPLE = dict(q=2**32 - 5, n=120, s=6, delta=120)
_KINDS = {
    "xpir-files": ("file_rows", ((1, 1), (2, 1))),
    "xpir-db": ("file_rows", ((1, 1), (2, 1))),
    "simplepir-files": ("files", ((1, 1), (2, 1), (3, 2))),
    "simplepir-db": ("file_rows", ((1, 1), (2, 1), (2, 2))),
}

SWEEPS = {
    "xpir-files": Sweep("xpir-files", 6400, 1e10, 10, m=10_000),
    "xpir-db": Sweep("xpir-db", 6400, 1.25e6, 10),
    "simplepir-files": Sweep("simplepir-files", 1, 1e12, 20, L=26_667),
    "simplepir-db": Sweep("simplepir-db", 3200, 2.5e7, 10),
}


def _cb_point(cfg, L, m, t, om):
    rate = cbcpir_rate_formula(float(L), float(m), t, om, cfg["n"], cfg["s"], cfg["delta"])
    x = float(m) ** (1 / t)
    ns, d = cfg["n"] * cfg["s"], cfg["delta"]
    bps = math.log2(cfg["q"])
    up = 2 * x * om * d * ns
    down = L * (2 * ns / d) ** om * x ** (t - om) * d
    server = 2 * L * m * d * ns * sum((2 * ns / (d * x)) ** r for r in range(om))
    return rate, up * bps, down * bps, server


def sweep_rows(sw: Sweep) -> list:
    """Rows ``(scheme, x_axis, x, rate, upload_bits, download_bits, server_muls)``."""
    axis, shapes = _KINDS[sw.kind]
    rows = []
    for x in sw.points():
        x = float(x)
        if sw.kind.startswith("xpir"):
            cfg = _CB_XPIR
            m = sw.m if sw.kind == "xpir-files" else DB_BITS / x
            L = x
            pts = [(f"cbcpir_t{t}_w{om}",) + _cb_point(cfg, L, m, t, om) for t, om in shapes]
            xc = xpir_cost(XPIR_TABLE[0], m, L)
            pts.append(("xpir", xc.rate, xc.upload_bits, xc.download_bits, xc.server_muls))
        else:
            cfg = _CB_SIMPLE
            if sw.kind == "simplepir-files":
                m_cb = m_sp = x
                L_cb = L_sp = sw.L
                sp_row = SIMPLEPIR_TABLE[2]
            else:
                L_cb = L_sp = x
                m_cb = DB_BITS / (x * 32)
                sp_row = SIMPLEPIR_TABLE[1]
                m_sp = DB_BITS / (x * math.log2(sp_row.p))
            pts = [(f"cbcpir_t{t}_w{om}",) + _cb_point(cfg, L_cb, m_cb, t, om) for t, om in shapes]
            for name, tq in (("simplepir_amortized", sw.t_amortize), ("simplepir_single", 1)):
                spp = SimplePirParams(sp_row.n, sp_row.q, sp_row.p, tq)
                c = simplepir_cost(spp, m_sp, L_sp, exact_sqrt=False)
                pts.append((name, c.rate, c.upload_bits, c.download_bits, c.server_muls))
        for name, rate, up, down, muls in pts:
            rows.append((name, axis, x, float(rate), float(up), float(down), float(muls)))
    return rows


def _fmt(v) -> str:
    return v if isinstance(v, str) else f"{v:.17g}"


def emit_curves(sw: Sweep, out=None) -> str:
    """Write the sweep as CSV (LF line endings) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in sweep_rows(sw):
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
