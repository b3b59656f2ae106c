"""The two-block code-based PIR protocol.

Three query variants are supported:

``HHW``
    single block ``D + E + e_i (x) Delta`` (rank attack applies);
``CB_BETA``
    two blocks, the first masked by ``beta (x) Delta_1`` and the second by
    ``(beta + e_i) (x) Delta_2``;
``CB_MATRIX_S``
    two blocks masked by ``S_j Delta`` per file with random nonzero
    ``delta x delta`` matrices ``S_j`` (the default).

File indices are zero-based throughout.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .code import (
    InformationSet,
    LinearCode,
    erasure_decode,
    sample_code,
    sample_codeword_matrix,
    sample_information_set,
)
from .field import Basis, ext_field_build, project_w, sample_basis, sample_subspace_matrix
from .linalg import kronecker, rank, solve_right

__all__ = [
    "Variant",
    "Params",
    "SecretState",
    "QuerySecret",
    "Query",
    "Database",
    "secretively_sample",
    "build_query",
    "build_followup_query",
    "answer",
    "naive_answer",
    "recover",
    "recover_parts",
    "reuse_r1",
    "sample_beta",
    "sample_s_matrices",
    "TABLE_PRESETS",
    "TOY",
]


class Variant(str, enum.Enum):
    HHW = "hhw"
    CB_BETA = "beta"
    CB_MATRIX_S = "matrix-s"

    @property
    def blocks(self) -> int:
        return 1 if self is Variant.HHW else 2


@dataclass(frozen=True)
class Params:
    q: int
    s: int
    v: int
    n: int
    k: int
    delta: int
    m: int = 1
    L: int = 1
    variant: Variant = Variant.CB_MATRIX_S

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if not 1 <= self.v < self.s:
            raise ValueError("need 1 <= v < s")
        if not 1 <= self.k < self.n:
            raise ValueError("need 1 <= k < n")
        if not 1 <= self.delta <= (self.n - self.k) * (self.s - self.v):
            raise ValueError(f"delta must lie in [1, (n-k)(s-v)] = [1, {(self.n - self.k) * self.w}]")
        if self.m < 1 or self.L < 1:
            raise ValueError("m and L must be positive")
        if self.variant is Variant.CB_BETA and self.q < 3:
            raise ValueError("the beta variant needs q >= 3")

    @property
    def w(self) -> int:
        return self.s - self.v

    @property
    def blocks(self) -> int:
        return self.variant.blocks

    def ext(self):
        return ext_field_build(self.q, self.s)

    def base(self):
        return self.ext().base

    def with_(self, **kw) -> "Params":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return Params(**d)

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["variant"] = self.variant.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


#: Rows of the published parameter table as ``(q, s, v, n, k, delta)``.
TABLE_PRESETS = {
    "table1-row1": (32, 32, 31, 100, 50, 50),
    "table1-row2": (32, 32, 30, 100, 50, 100),
    "table1-row3": (2**16, 12, 10, 100, 50, 100),
    "table1-row4": (2**32 - 5, 6, 4, 120, 60, 120),
    "table1-row5": (2**32, 5, 3, 100, 50, 100),
    "table1-row6": (2**61 - 1, 6, 2, 100, 50, 200),
}

#: Desk-scale parameters used by the tests.
TOY = dict(q=3, s=4, v=2, n=8, k=4, delta=8, m=4, L=5)


@dataclass(frozen=True)
class SecretState:
    code: LinearCode
    iset: InformationSet
    basis: Basis
    d: np.ndarray  # (m delta, n, s) codewords
    e: np.ndarray  # (m delta, n, s) V-noise on the complement of I
    delta_mat: np.ndarray  # (delta, n, s) W-matrix on the complement of I

    @cached_property
    def delta_w(self) -> np.ndarray:
        """``psi_W`` of ``Delta`` restricted to the complement, as ``delta x (n-k)w``."""
        comp = list(self.iset.complement)
        dw = project_w(self.delta_mat[:, comp], self.basis)
        return dw.reshape(dw.shape[0], -1)


@dataclass(frozen=True)
class QuerySecret:
    secrets: tuple  # one SecretState per block
    mask: np.ndarray | None  # beta (m,) or S (m, delta, delta); None for HHW
    target: int
    variant: Variant


@dataclass(frozen=True)
class Query:
    blocks: tuple  # each (m delta, n, s)
    ext: object = field(compare=False)

    @property
    def matrix(self) -> np.ndarray:
        return np.concatenate(self.blocks, axis=1)


@dataclass
class Database:
    """``L x m delta`` matrix over ``F_q``; file ``j`` is column block ``j``."""

    x: np.ndarray
    delta: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[1] % self.delta:
            raise ValueError("database width must be a multiple of delta")

    @property
    def m(self) -> int:
        return self.x.shape[1] // self.delta

    @property
    def L(self) -> int:
        return self.x.shape[0]

    def file(self, j: int) -> np.ndarray:
        return self.x[:, j * self.delta : (j + 1) * self.delta]

    @classmethod
    def random(cls, p: Params, rng) -> "Database":
        return cls(p.base().random(rng, (p.L, p.m * p.delta)), p.delta)

    @classmethod
    def from_files(cls, files) -> "Database":
        files = [np.asarray(f) for f in files]
        return cls(np.concatenate(files, axis=1), files[0].shape[1])


def _zero_extend(ext, part, comp, n):
    out = ext.zeros((part.shape[0], n))
    out[:, list(comp)] = part
    return out


def secretively_sample(p: Params, rng, max_tries: int = 100) -> SecretState:
    """Fresh code, information set, basis, codewords and noise matrices."""
    ext = p.ext()
    while True:
        # an information set exists iff the generator has full rank
        code = sample_code(p.n, p.k, ext, rng, check_rank=False)
        try:
            iset = sample_information_set(code, rng)
            break
        except RuntimeError:
            continue
    basis = sample_basis(ext, p.v, rng)
    comp = iset.complement
    d = sample_codeword_matrix(code, p.m * p.delta, rng)
    e = _zero_extend(ext, sample_subspace_matrix(p.m * p.delta, p.n - p.k, "V", basis, rng), comp, p.n)
    for _ in range(max_tries):
        dm = sample_subspace_matrix(p.delta, p.n - p.k, "W", basis, rng)
        dw = project_w(dm, basis).reshape(p.delta, -1)
        if rank(ext.base, dw) == p.delta:
            return SecretState(code, iset, basis, d, e, _zero_extend(ext, dm, comp, p.n))
    raise RuntimeError("could not draw a full-rank Delta")


def sample_beta(p: Params, rng) -> np.ndarray:
    """``beta`` with every entry outside ``{0, -1}``.

    Excluding ``-1`` everywhere keeps ``beta + e_i`` of full weight for any
    ``i`` without ever looking at ``i``.
    """
    F = p.base()
    minus_one = F.ssub(0, 1)
    out = F.random_nonzero(rng, p.m)
    bad = out == minus_one
    while bad.any():
        out[bad] = F.random_nonzero(rng, int(bad.sum()))
        bad = out == minus_one
    return out


def sample_s_matrices(p: Params, rng) -> np.ndarray:
    """``m`` independent uniform nonzero ``delta x delta`` matrices."""
    F = p.base()
    out = F.random(rng, (p.m, p.delta, p.delta))
    for j in range(p.m):
        while not F.nonzero(out[j]).any():
            out[j] = F.random(rng, (p.delta, p.delta))
    return out


def _masked_block(p: Params, st: SecretState, term) -> np.ndarray:
    ext = p.ext()
    return ext.add(ext.add(st.d, st.e), term)


def _beta_term(p, vec, st):
    return kronecker(p.ext(), vec, st.delta_mat)


def _s_term(p, S, st, extra: int | None = None):
    ext, F = p.ext(), p.base()
    S = np.array(S, copy=True)
    if extra is not None:
        idx = np.arange(p.delta)
        S[extra, idx, idx] = F.add(S[extra, idx, idx], 1)
    blocks = [ext.mixed_matmul(S[j], st.delta_mat) for j in range(p.m)]
    return np.concatenate(blocks, axis=0)


def _first_block(p: Params, mask, st: SecretState) -> np.ndarray:
    # the target index is deliberately not an argument here
    if p.variant is Variant.CB_BETA:
        return _masked_block(p, st, _beta_term(p, mask, st))
    return _masked_block(p, st, _s_term(p, mask, st))


def _second_block(p: Params, mask, st: SecretState, i: int) -> np.ndarray:
    F = p.base()
    if p.variant is Variant.CB_BETA:
        vec = np.array(mask, copy=True)
        vec[i] = F.add(vec[i], 1)
        return _masked_block(p, st, _beta_term(p, vec, st))
    return _masked_block(p, st, _s_term(p, mask, st, extra=i))


def _unit(p, i):
    vec = p.base().zeros(p.m)
    vec[i] = 1
    return vec


def build_query(p: Params, i: int, rng, *, mask=None, secrets=None):
    """Query for file ``i``.  Returns ``(Query, QuerySecret)``.

    ``mask`` (beta or the S stack) and ``secrets`` may be supplied to pin
    the randomness, e.g. in tests.
    """
    if not 0 <= i < p.m:
        raise IndexError(f"file index {i} outside [0, {p.m})")
    if p.variant is Variant.HHW:
        st = secrets[0] if secrets else secretively_sample(p, rng)
        blk = _masked_block(p, st, _beta_term(p, _unit(p, i), st))
        return Query((blk,), p.ext()), QuerySecret((st,), None, i, p.variant)
    if mask is None:
        mask = sample_beta(p, rng) if p.variant is Variant.CB_BETA else sample_s_matrices(p, rng)
    if secrets is None:
        secrets = (secretively_sample(p, rng), secretively_sample(p, rng))
    s1, s2 = secrets
    q1 = _first_block(p, mask, s1)
    q2 = _second_block(p, mask, s2, i)
    return Query((q1, q2), p.ext()), QuerySecret((s1, s2), mask, i, p.variant)


def build_followup_query(p: Params, prev: QuerySecret, i: int, rng):
    """Second-block-only query reusing the mask of an earlier retrieval."""
    if p.variant is Variant.HHW:
        raise ValueError("follow-up queries need a two-block variant")
    if not 0 <= i < p.m:
        raise IndexError(f"file index {i} outside [0, {p.m})")
    st = secretively_sample(p, rng)
    q2 = _second_block(p, prev.mask, st, i)
    return Query((q2,), p.ext()), QuerySecret((st,), prev.mask, i, p.variant)


def answer(db, query: Query) -> np.ndarray:
    """``X Q`` for every query block, concatenated along the columns."""
    x = db.x if isinstance(db, Database) else np.asarray(db)
    q = query.matrix
    if x.ndim != 2 or x.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: database {x.shape} vs query {q.shape[:2]}")
    return query.ext.mixed_matmul(x, q)


def naive_answer(db, query: Query):
    """Schoolbook ``X Q`` that counts every F_q multiplication.

    Returns ``(answer, muls)``.  Each ``x_lj * Q_jc`` multiplies one base
    scalar into ``s`` coordinates, so ``muls`` is ``L * rows(Q) * cols(Q) * s``.
    """
    x = db.x if isinstance(db, Database) else np.asarray(db)
    q = query.matrix
    if x.ndim != 2 or x.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: database {x.shape} vs query {q.shape[:2]}")
    ext = query.ext
    F = ext.base
    out = ext.zeros((x.shape[0], q.shape[1]))
    muls = 0
    for l in range(x.shape[0]):
        acc = out[l]
        for j in range(x.shape[1]):
            prod = F.mul(np.asarray(x[l, j], dtype=F.dtype), q[j])
            muls += prod.size
            acc = F.add(acc, prod)
        out[l] = acc
    return out, muls


def _block_part(p: Params, a: np.ndarray, b: int) -> np.ndarray:
    return a[:, b * p.n : (b + 1) * p.n]


def _recover_block(p: Params, a_b: np.ndarray, st: SecretState) -> np.ndarray:
    _, err = erasure_decode(a_b, st.code, st.iset)
    comp = list(st.iset.complement)
    ew = project_w(err[:, comp], st.basis).reshape(err.shape[0], -1)
    return solve_right(p.base(), st.delta_w, ew)


def recover_parts(a, qs: QuerySecret, p: Params) -> list:
    """Per-block ``R_b`` with ``R_b Delta_b = X (mask term)``."""
    a = np.asarray(a)
    if a.shape[1] != len(qs.secrets) * p.n:
        raise ValueError("answer width does not match the query secret")
    return [_recover_block(p, _block_part(p, a, b), st) for b, st in enumerate(qs.secrets)]


def recover(a, qs: QuerySecret, p: Params) -> np.ndarray:
    """Return the ``L x delta`` target file."""
    parts = recover_parts(a, qs, p)
    if len(parts) == 1:
        return parts[0]
    return p.base().sub(parts[1], parts[0])


def reuse_r1(r1cached, a2, qs2: QuerySecret, p: Params) -> np.ndarray:
    """File from a follow-up answer and a cached first-block result."""
    (r2,) = recover_parts(a2, qs2, p)
    return p.base().sub(r2, r1cached)
