"""Dense exact linear algebra over a base field or an extension field.

Every routine takes the field first and works with either element layout:
``(rows, cols)`` for base-field matrices and ``(rows, cols, s)`` for
extension-field matrices.
"""
from __future__ import annotations

import numpy as np

from .field import ExtField

__all__ = [
    "RankDeficient",
    "Inconsistent",
    "mat_mul",
    "rref",
    "rank",
    "rank_fq",
    "inverse",
    "solve_right",
    "flatten_to_fq",
    "unflatten_from_fq",
    "kronecker",
    "identity",
]


class RankDeficient(ArithmeticError):
    """A matrix that must have full row rank does not."""


class Inconsistent(ArithmeticError):
    """The right-hand side is not in the row span of the system."""


def identity(F, n: int) -> np.ndarray:
    if isinstance(F, ExtField):
        out = F.zeros((n, n))
        out[np.arange(n), np.arange(n), 0] = 1
        return out
    out = F.zeros((n, n))
    out[np.arange(n), np.arange(n)] = 1
    return out


def mat_mul(F, a, b) -> np.ndarray:
    """Exact product ``a @ b``.

    With an extension field, ``a`` may be a base-field matrix (2-D), in which
    case its entries are embedded as constants.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if isinstance(F, ExtField):
        if a.ndim == 2 and b.ndim == 3:
            return F.mixed_matmul(a, b)
        if a.ndim == 3 and b.ndim == 2:
            return F.matmul(a, F.embed(b))
        return F.matmul(a, b)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch {a.shape} x {b.shape}")
    return F.matmul(a, b)


def rref(F, m) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns.

    Pivots are taken as the first nonzero entry in column order.
    """
    if getattr(F, "dtype", None) is np.int64 and getattr(F, "kind", "") == "prime":
        return _rref_small_prime(F, m)
    a = np.array(m, dtype=F.base.dtype if isinstance(F, ExtField) else F.dtype, copy=True)
    nrows, ncols = a.shape[:2]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(F.nonzero(a[r:, c]))[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        piv_inv = F.inv(a[r, c])
        a[r] = F.mul(a[r], piv_inv)
        factors = np.array(a[:, c], copy=True)
        factors[r] = 0
        rows = np.nonzero(F.nonzero(factors))[0]
        if rows.size:
            a[rows] = F.sub(a[rows], F.mul(factors[rows][:, None], a[r][None, :]))
        pivots.append(c)
        r += 1
    return a, pivots


def _rref_small_prime(F, m):
    # int64 fast path: p < 2**31 so one product fits before reduction
    p = F.p
    a = np.array(m, dtype=np.int64, copy=True)
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        col = a[r:, c]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] * int(F.inv(a[r, c])) % p
        factors = a[:, c].copy()
        factors[r] = 0
        rows = np.flatnonzero(factors)
        if rows.size:
            a[rows] = (a[rows] - factors[rows, None] * a[r]) % p
        pivots.append(c)
        r += 1
    return a, pivots


def _fast_ext(F) -> bool:
    return isinstance(F, ExtField) and F.base.kind == "prime" and F.base.dtype is np.int64


def _mul_blocks(F: ExtField, m) -> np.ndarray:
    """Replace each entry by its ``s x s`` multiplication matrix over F_q.

    Column ``j`` of the block of ``a`` holds the coordinates of ``a x^j``.
    """
    m = np.asarray(m)
    r, c, s = m.shape
    cols = [m]
    cur = m
    xvec = np.eye(s, dtype=np.int64)[min(1, s - 1)]  # the element x
    for _ in range(1, s):
        cur = F.mul(cur, xvec)
        cols.append(cur)
    blk = np.stack(cols, axis=-1)  # (r, c, s_coord, s_power)
    return blk.transpose(0, 2, 1, 3).reshape(r * s, c * s)


def rank(F, m) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    if _fast_ext(F) and m.ndim == 3:
        return len(rref(F.base, _mul_blocks(F, m))[1]) // F.s
    return len(rref(F, m)[1])


def rank_fq(F, m) -> int:
    """Rank over the base field; extension matrices are flattened first."""
    if isinstance(F, ExtField):
        return rank(F.base, flatten_to_fq(F, m))
    return rank(F, m)


def inverse(F, m) -> np.ndarray:
    m = np.asarray(m)
    n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError("inverse of a non-square matrix")
    if _fast_ext(F):
        s = F.s
        big = inverse(F.base, _mul_blocks(F, m))
        # the block of 1 is the identity, so column 0 of each block is the entry
        return big.reshape(n, s, n, s)[:, :, :, 0].transpose(0, 2, 1)
    aug = np.concatenate([m, identity(F, n)], axis=1)
    red, piv = rref(F, aug)
    if piv[:n] != list(range(n)):
        raise RankDeficient("matrix is singular")
    return red[:, n:]


def solve_right(F, a, y) -> np.ndarray:
    """Solve ``R @ a = y`` for ``R`` when ``a`` has full row rank."""
    a = np.asarray(a)
    y = np.asarray(y)
    r = a.shape[0]
    if y.shape[1] != a.shape[1]:
        raise ValueError("y and a must have the same number of columns")
    # R a = y  <=>  a^T R^T = y^T; one elimination of [a^T | y^T]
    t = (1, 0, 2) if isinstance(F, ExtField) else (1, 0)
    aug = np.concatenate([np.transpose(a, t), np.transpose(y, t)], axis=1)
    red, piv = rref(F, aug)
    if piv[:r] != list(range(r)):
        raise RankDeficient(f"system matrix has rank {sum(c < r for c in piv)} < {r}")
    if len(piv) > r:
        raise Inconsistent("right-hand side is outside the row span")
    return np.transpose(red[:r, r:], t)


def flatten_to_fq(F: ExtField, m) -> np.ndarray:
    """Expand each extension entry into ``s`` consecutive base coordinates."""
    m = np.asarray(m)
    return m.reshape(m.shape[0], m.shape[1] * F.s)


def unflatten_from_fq(F: ExtField, m) -> np.ndarray:
    m = np.asarray(m)
    if m.shape[1] % F.s:
        raise ValueError("column count is not a multiple of s")
    return m.reshape(m.shape[0], m.shape[1] // F.s, F.s)


def kronecker(F, vec, m2) -> np.ndarray:
    """``vec (x) m2`` for a base-field vector and an extension matrix."""
    vec = np.asarray(vec, dtype=F.base.dtype)
    m2 = np.asarray(m2, dtype=F.base.dtype)
    blocks = F.base.mul(vec[:, None, None, None], m2[None])
    return blocks.reshape((vec.shape[0] * m2.shape[0],) + m2.shape[1:])
