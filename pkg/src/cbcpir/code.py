"""Random linear codes over an extension field and erasure decoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ExtField
from .linalg import RankDeficient, inverse, mat_mul, rank

__all__ = [
    "LinearCode",
    "InformationSet",
    "sample_code",
    "sample_information_set",
    "information_set",
    "sample_codeword_matrix",
    "erasure_decode",
    "parity_check",
]


@dataclass(frozen=True)
class LinearCode:
    ext: ExtField
    gen: np.ndarray  # (k, n, s)

    @property
    def k(self) -> int:
        return self.gen.shape[0]

    @property
    def n(self) -> int:
        return self.gen.shape[1]


@dataclass(frozen=True)
class InformationSet:
    indices: tuple  # sorted positions, |I| = k
    inv: np.ndarray  # inverse of gen[:, I]
    n: int

    @property
    def complement(self) -> tuple:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.indices)] = False
        return tuple(np.nonzero(mask)[0].tolist())


def sample_code(n: int, k: int, ext: ExtField, rng, check_rank: bool = True) -> LinearCode:
    """Uniform full-rank ``k x n`` generator matrix (rejection sampling).

    With ``check_rank=False`` the draw is returned as is; callers that go on
    to find an information set get the rank check from that.
    """
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    while True:
        g = ext.random(rng, (k, n))
        if not check_rank or rank(ext, g) == k:
            return LinearCode(ext, g)


def information_set(c: LinearCode, indices) -> InformationSet:
    """Information set for given positions; raises RankDeficient if invalid."""
    idx = tuple(sorted(int(i) for i in indices))
    if len(idx) != c.k or len(set(idx)) != c.k:
        raise ValueError("an information set has exactly k distinct positions")
    inv = inverse(c.ext, c.gen[:, list(idx)])
    return InformationSet(idx, inv, c.n)


def sample_information_set(c: LinearCode, rng, max_tries: int | None = None) -> InformationSet:
    """Uniform k-subset, retried until ``gen[:, I]`` is invertible."""
    tries = 64 * c.n if max_tries is None else max_tries
    for _ in range(tries):
        idx = rng.choice(c.n, size=c.k, replace=False)
        try:
            return information_set(c, idx)
        except RankDeficient:
            continue
    raise RuntimeError("no information set found")


def sample_codeword_matrix(c: LinearCode, rows: int, rng) -> np.ndarray:
    msg = c.ext.random(rng, (rows, c.k))
    return mat_mul(c.ext, msg, c.gen)


def erasure_decode(a, c: LinearCode, iset: InformationSet):
    """Split each row of ``a`` into a codeword and a part supported off ``I``.

    Returns ``(code_part, err_part)`` with ``code_part = a[:, I] inv gen``.
    """
    E = c.ext
    a = E.asarray(a)
    code_part = mat_mul(E, mat_mul(E, a[:, list(iset.indices)], iset.inv), c.gen)
    return code_part, E.sub(a, code_part)


def parity_check(c: LinearCode, iset: InformationSet | None = None) -> np.ndarray:
    """An ``(n-k) x n`` matrix ``H`` with ``gen H^T = 0``."""
    E = c.ext
    if iset is None:
        _, cols = _pivots(c)
        iset = information_set(c, cols)
    idx, comp = list(iset.indices), list(iset.complement)
    # systematic on I: gen' = inv gen has identity on I and P on the complement
    p = mat_mul(E, iset.inv, c.gen)[:, comp]  # (k, n-k)
    h = E.zeros((c.n - c.k, c.n))
    h[:, idx] = E.neg(np.transpose(p, (1, 0, 2)))
    h[np.arange(len(comp)), comp, 0] = 1
    return h


def _pivots(c: LinearCode):
    from .linalg import rref

    return rref(c.ext, c.gen)
