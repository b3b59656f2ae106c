"""Finite fields used by the scheme.

Two base-field backends are provided, :class:`PrimeField` (``p < 2**64``) and
:class:`BinaryField` (``GF(2**b)``, ``b <= 32``).  :class:`ExtField` builds
``F_{q^s}`` on top of either one.  Elements are numpy arrays: a base-field
element is a scalar entry, an extension element is a trailing axis of ``s``
power-basis coordinates.  All arithmetic is vectorised and broadcasts like
numpy.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PrimeField",
    "BinaryField",
    "ExtField",
    "Basis",
    "base_field",
    "ext_field_build",
    "sample_basis",
    "identity_basis",
    "project",
    "project_v",
    "project_w",
    "lift",
    "sample_subspace_matrix",
]

_SMALL_PRIME = 1 << 31


def _is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


class PrimeField:
    """The prime field ``F_p``."""

    kind = "prime"

    def __init__(self, p: int):
        p = int(p)
        if p < 2 or p >= 1 << 64 or not _is_prime(p):
            raise ValueError(f"{p} is not a prime below 2**64")
        self.p = p
        self.order = p
        self.characteristic = p
        self.dtype = np.int64 if p < _SMALL_PRIME else object
        # max number of products that can be summed in int64 without overflow
        self._chunk = max(1, (2**63 - 1) // max(1, (p - 1) ** 2)) if p < _SMALL_PRIME else None
        self._inv_table = None
        if p <= 1 << 16:
            tab = np.zeros(p, dtype=np.int64)
            tab[1:] = [pow(x, -1, p) for x in range(1, p)]
            self._inv_table = tab

    def __repr__(self) -> str:
        return f"PrimeField({self.p})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("prime", self.p))

    @property
    def coord_bytes(self) -> int:
        return 8

    @property
    def symbol_bits(self) -> int:
        """Whole bits that always fit in one element (``floor(log2 q)``)."""
        return self.p.bit_length() - 1

    # -- array construction -------------------------------------------------
    def zeros(self, shape) -> np.ndarray:
        z = np.zeros(shape, dtype=np.int64)
        return z if self.dtype is np.int64 else z.astype(object)

    def asarray(self, x) -> np.ndarray:
        if self.dtype is np.int64:
            return np.asarray(x, dtype=np.int64) % self.p
        a = np.array(x, dtype=object)
        return a % self.p

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.dtype is np.int64:
            return rng.integers(0, self.p, size=shape, dtype=np.int64)
        return rng.integers(0, self.p, size=shape, dtype=np.uint64).astype(object)

    def random_nonzero(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.dtype is np.int64:
            return rng.integers(1, self.p, size=shape, dtype=np.int64)
        return rng.integers(1, self.p, size=shape, dtype=np.uint64).astype(object)

    # -- arithmetic -----------------------------------------------------------
    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        a = np.asarray(a, dtype=self.dtype)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        if self._inv_table is not None:
            return self._inv_table[a]
        if self.dtype is object:
            return np.vectorize(lambda x: pow(int(x), -1, self.p), otypes=[object])(a)
        return _vec_pow(a, self.p - 2, self.mul, lambda: np.ones_like(a))

    def nonzero(self, a):
        return a != 0

    def matmul(self, a, b):
        a = np.asarray(a, dtype=self.dtype)
        b = np.asarray(b, dtype=self.dtype)
        k = a.shape[-1]
        if self.dtype is object or k <= self._chunk:
            return (a @ b) % self.p
        out = self.zeros(a.shape[:-1] + b.shape[-1:])
        for lo in range(0, k, self._chunk):
            hi = min(k, lo + self._chunk)
            out = (out + (a[..., lo:hi] @ b[lo:hi]) % self.p) % self.p
        return out

    # scalar (python int) arithmetic, used by polynomial routines
    def sadd(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def ssub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def smul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def sinv(self, a: int) -> int:
        return pow(a, -1, self.p)


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _gf2_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def _gf2_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


def _gf2_mulmod(a: int, b: int, m: int) -> int:
    return _gf2_mod(_clmul(a, b), m)


@lru_cache(maxsize=None)
def binary_modulus(b: int) -> int:
    """Lexicographically smallest irreducible binary polynomial of degree b."""
    if not 1 <= b <= 32:
        raise ValueError("binary backend supports 1 <= b <= 32")
    for low in range(1 << b):
        f = (1 << b) | low
        if b > 1 and not (f & 1):
            continue
        # Ben-Or: gcd(f, x^(2^i) - x) == 1 for i <= b/2
        u, ok = 2, True
        for _ in range(b // 2):
            u = _gf2_mulmod(u, u, f)
            if _gf2_gcd(f, u ^ 2) != 1:
                ok = False
                break
        if ok:
            return f
    raise AssertionError("unreachable")


class BinaryField:
    """``GF(2**b)`` with a fixed (lexicographically smallest) modulus."""

    kind = "binary"

    def __init__(self, b: int):
        b = int(b)
        self.b = b
        self.poly = binary_modulus(b)
        self.order = 1 << b
        self.characteristic = 2
        self.dtype = np.int64
        self._exp = self._log = None
        if b <= 16:
            self._build_tables()

    def __repr__(self) -> str:
        return f"BinaryField(2**{self.b})"

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryField) and other.b == self.b

    def __hash__(self) -> int:
        return hash(("binary", self.b))

    @property
    def coord_bytes(self) -> int:
        return (self.b + 7) // 8

    @property
    def symbol_bits(self) -> int:
        return self.b

    def _build_tables(self):
        from sympy import factorint

        n = self.order - 1
        primes = list(factorint(n)) if n > 1 else []
        g = 2 if self.b > 1 else 1
        while any(self._spow(g, n // r) == 1 for r in primes):
            g += 1
        exp = np.zeros(2 * n + 1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(n):
            exp[i] = x
            log[x] = i
            x = self.smul(x, g)
        exp[n : 2 * n] = exp[:n]
        self._exp, self._log = exp, log
        self._exp_l, self._log_l = exp.tolist(), log.tolist()

    def _spow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self.smul(r, a)
            a = self.smul(a, a)
            e >>= 1
        return r

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.int64)

    def asarray(self, x) -> np.ndarray:
        a = np.asarray(x, dtype=np.int64)
        if np.any((a < 0) | (a >= self.order)):
            raise ValueError("element out of range for GF(2**b)")
        return a

    def random(self, rng, shape) -> np.ndarray:
        return rng.integers(0, self.order, size=shape, dtype=np.int64)

    def random_nonzero(self, rng, shape) -> np.ndarray:
        return rng.integers(1, self.order, size=shape, dtype=np.int64)

    def add(self, a, b):
        return np.bitwise_xor(a, b)

    sub = add

    def neg(self, a):
        return np.asarray(a)

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self._exp is not None:
            r = self._exp[self._log[a] + self._log[b]]
            return np.where((a == 0) | (b == 0), 0, r)
        a, b = np.broadcast_arrays(a, b)
        r = np.zeros(a.shape, dtype=np.int64)
        for i in range(self.b):
            r ^= np.where((b >> i) & 1, a << i, 0)
        for i in range(2 * self.b - 2, self.b - 1, -1):
            r ^= np.where((r >> i) & 1, self.poly << (i - self.b), 0)
        return r

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        if self._exp is not None:
            return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]
        return _vec_pow(a, self.order - 2, self.mul, lambda: np.ones_like(a))

    def nonzero(self, a):
        return a != 0

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(a.shape[:-1] + b.shape[-1:], dtype=np.int64)
        for l in range(a.shape[-1]):
            out ^= self.mul(a[..., l, None], b[l])
        return out

    def sadd(self, a: int, b: int) -> int:
        return a ^ b

    ssub = sadd

    def smul(self, a: int, b: int) -> int:
        if self._exp is not None:
            if a and b:
                return self._exp_l[self._log_l[a] + self._log_l[b]]
            return 0
        return _gf2_mulmod(a, b, self.poly)

    def sinv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._spow(a, self.order - 2)


def _vec_pow(a, e: int, mul, one):
    r = one()
    while e:
        if e & 1:
            r = mul(r, a)
        a = mul(a, a)
        e >>= 1
    return r


@lru_cache(maxsize=None)
def base_field(q: int):
    """Return the base field of order q (prime, or a power of two)."""
    q = int(q)
    if q >= 2 and q & (q - 1) == 0:
        b = q.bit_length() - 1
        if b == 1:
            return PrimeField(2)
        return BinaryField(b)
    return PrimeField(q)


# -- univariate polynomials over a base field (python ints, low -> high) ------


def _ptrim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(F, a: list, f: list) -> list:
    a = list(a)
    df = len(f) - 1
    lead_inv = 1 if f[-1] == 1 else F.sinv(f[-1])
    while len(_ptrim(a)) - 1 >= df:
        c = F.smul(a[-1], lead_inv)
        sh = len(a) - 1 - df
        for i, fi in enumerate(f):
            if fi:
                a[sh + i] = F.ssub(a[sh + i], F.smul(c, fi))
    return a


def _pmulmod(F, a: list, b: list, f: list) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    out[i + j] = F.sadd(out[i + j], F.smul(ai, bj))
    return _pmod(F, out, f)


def _pgcd(F, a: list, b: list) -> list:
    a, b = _ptrim(list(a)), _ptrim(list(b))
    while b:
        a, b = b, _ptrim(_pmod(F, a, b))
    return a


def _x_to_q(F, f: list) -> list:
    """x^q mod f."""
    h, base, e = [1], [0, 1], F.order
    while e:
        if e & 1:
            h = _pmulmod(F, h, base, f)
        base = _pmulmod(F, base, base, f)
        e >>= 1
    return h


def _frobenius_columns(F, f: list, h: list | None = None) -> list:
    """Columns (x^j)^q mod f, j < s, as coordinate lists."""
    s = len(f) - 1
    if h is None:
        h = _x_to_q(F, f)
    cols, cur = [], [1]
    for _ in range(s):
        c = _ptrim(list(cur))
        cols.append(c + [0] * (s - len(c)))
        cur = _pmulmod(F, cur, h, f)
    return cols


def _apply_cols(F, cols: list, v: list) -> list:
    s = len(cols)
    out = [0] * s
    for j, vj in enumerate(v):
        if vj:
            col = cols[j]
            for i in range(s):
                if col[i]:
                    out[i] = F.sadd(out[i], F.smul(vj, col[i]))
    return out


def _is_irreducible(F, f: list) -> bool:
    """Ben-Or test: gcd(f, x^(q^i) - x) = 1 for all i <= s/2."""
    s = len(f) - 1
    if s == 1:
        return True
    if f[0] == 0:
        return False
    h = _x_to_q(F, f)
    cols = None
    u = _ptrim(list(h))
    u = u + [0] * (s - len(u))
    for i in range(1, s // 2 + 1):
        if i > 1:
            if cols is None:
                cols = _frobenius_columns(F, f, h)
            u = _apply_cols(F, cols, u)
        d = list(u)
        d[1] = F.ssub(d[1], 1)
        if len(_ptrim(_pgcd(F, f, d))) != 1:
            return False
    return True


def _spow(F, a: int, e: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = F.smul(r, a)
        a = F.smul(a, a)
        e >>= 1
    return r


def _mult_order(F, a: int) -> int:
    from sympy import factorint

    n = F.order - 1
    order = n
    for r, e in factorint(n).items():
        for _ in range(e):
            if _spow(F, a, order // r) == 1:
                order //= r
            else:
                break
    return order


def _binomial_irreducible(F, s: int, a: int) -> bool:
    """Exact criterion for x^s - a, a != 0.

    Irreducible iff every prime r | s divides ord(a) but not (q-1)/ord(a),
    and 4 | q - 1 whenever 4 | s.
    """
    from sympy import primefactors

    if s % 4 == 0 and (F.order - 1) % 4:
        return False
    e = _mult_order(F, a)
    co = (F.order - 1) // e
    return all(e % r == 0 and co % r for r in primefactors(s))


class ExtField:
    """``F_{q^s}`` as ``F_q[x]/(modulus)``; elements are coordinate vectors."""

    kind = "ext"

    def __init__(self, base, s: int, modulus):
        self.base = base
        self.s = int(s)
        self.modulus = tuple(int(c) for c in modulus)
        if len(self.modulus) != self.s + 1 or self.modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree s")
        if not _is_irreducible(base, list(self.modulus)):
            raise ValueError("modulus is reducible")
        self.q = base.order
        self.order = base.order**self.s
        s_ = self.s
        # rows: x^(s+t) mod f for t = 0..s-2, shape (s-1, s)
        red = []
        cur = [base.ssub(0, c) for c in self.modulus[:-1]]
        for _ in range(max(0, s_ - 1)):
            red.append(list(cur))
            # multiply cur by x and reduce
            top = cur[-1]
            shifted = [0] + cur[:-1]
            cur = [base.sadd(shifted[i], base.smul(top, red[0][i])) for i in range(s_)]
        self._red = base.asarray(np.array(red, dtype=object).reshape(max(0, s_ - 1), s_)) if red else None
        cols = _frobenius_columns(base, list(self.modulus))
        # frob[i, j] = coordinate i of (x^j)^q ; a^q = a @ frob.T
        self._frob_t = base.asarray(np.array(cols, dtype=object))
        self._inv_table = None
        if self.order <= 1 << 16 and base.dtype is np.int64:
            self._weights = self.q ** np.arange(self.s, dtype=np.int64)
            elems = (np.arange(1, self.order)[:, None] // self._weights) % self.q
            tab = np.zeros((self.order, self.s), dtype=np.int64)
            tab[1:] = self._inv_itoh_tsujii(elems)
            self._inv_table = tab

    def __repr__(self) -> str:
        return f"ExtField(q={self.q}, s={self.s})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, ExtField) and other.base == self.base
                and other.modulus == self.modulus)

    def __hash__(self) -> int:
        return hash((self.base, self.modulus))

    # -- construction helpers -------------------------------------------------
    def zeros(self, shape) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        return self.base.zeros(shape + (self.s,))

    def asarray(self, x) -> np.ndarray:
        a = self.base.asarray(x)
        if a.shape[-1:] != (self.s,):
            raise ValueError("trailing axis must hold s coordinates")
        return a

    def random(self, rng, shape) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        return self.base.random(rng, shape + (self.s,))

    def embed(self, a) -> np.ndarray:
        """Embed base-field entries as constant extension elements."""
        a = np.asarray(a, dtype=self.base.dtype)
        out = self.base.zeros(a.shape + (self.s,))
        out[..., 0] = a
        return out

    def one(self) -> np.ndarray:
        return self.embed(np.ones((), dtype=np.int64) if self.base.dtype is np.int64 else 1)

    def element(self, coords) -> np.ndarray:
        return self.asarray(np.asarray(coords))

    # -- arithmetic -----------------------------------------------------------
    def add(self, a, b):
        return self.base.add(a, b)

    def sub(self, a, b):
        return self.base.sub(a, b)

    def neg(self, a):
        return self.base.neg(a)

    def nonzero(self, a):
        return np.any(self.base.nonzero(a), axis=-1)

    def _reduce(self, conv):
        F, s = self.base, self.s
        low = conv[..., :s]
        if s == 1:
            return low
        high = conv[..., s:]
        shp = high.shape[:-1]
        h2 = high.reshape(-1, s - 1)
        return F.add(low, F.matmul(h2, self._red).reshape(shp + (s,)))

    def mul(self, a, b):
        F, s = self.base, self.s
        a, b = np.broadcast_arrays(np.asarray(a, dtype=F.dtype), np.asarray(b, dtype=F.dtype))
        conv = F.zeros(a.shape[:-1] + (2 * s - 1,))
        for i in range(s):
            conv[..., i : i + s] = F.add(conv[..., i : i + s], F.mul(a[..., i : i + 1], b))
        return self._reduce(conv)

    def scale(self, c, a):
        """Multiply extension elements ``a`` by base-field scalars ``c``."""
        return self.base.mul(np.asarray(c, dtype=self.base.dtype)[..., None], a)

    def frobenius(self, a):
        a = np.asarray(a, dtype=self.base.dtype)
        shp = a.shape
        return self.base.matmul(a.reshape(-1, self.s), self._frob_t).reshape(shp)

    def inv(self, a):
        a = np.asarray(a, dtype=self.base.dtype)
        if np.any(~self.nonzero(a)):
            raise ZeroDivisionError("inverse of zero")
        if self._inv_table is not None:
            return self._inv_table[a @ self._weights]
        return self._inv_itoh_tsujii(a)

    def _inv_itoh_tsujii(self, a):
        # a^-1 = a^(r-1) / N(a) with r = (q^s - 1)/(q - 1)
        y = self.frobenius(a)
        acc = y
        for _ in range(self.s - 2):
            y = self.frobenius(y)
            acc = self.mul(acc, y)
        norm = self.mul(a, acc)[..., 0]
        return self.scale(self.base.inv(norm), acc)

    def matmul(self, a, b):
        """Product of ``(r, k, s)`` and ``(k, c, s)`` extension matrices."""
        F, s = self.base, self.s
        a = np.asarray(a, dtype=F.dtype)
        b = np.asarray(b, dtype=F.dtype)
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"dimension mismatch {a.shape[:2]} x {b.shape[:2]}")
        r, c = a.shape[0], b.shape[1]
        conv = F.zeros((r, c, 2 * s - 1))
        for i in range(s):
            for j in range(s):
                conv[:, :, i + j] = F.add(conv[:, :, i + j], F.matmul(a[:, :, i], b[:, :, j]))
        return self._reduce(conv)

    def mixed_matmul(self, x, b):
        """Product of an ``(r, k)`` base-field matrix with a ``(k, c, s)`` one."""
        x = np.asarray(x, dtype=self.base.dtype)
        b = np.asarray(b, dtype=self.base.dtype)
        if x.shape[1] != b.shape[0]:
            raise ValueError(f"dimension mismatch {x.shape} x {b.shape[:2]}")
        k, c = b.shape[0], b.shape[1]
        return self.base.matmul(x, b.reshape(k, c * self.s)).reshape(x.shape[0], c, self.s)


def _candidates(q: int, s: int):
    """Monic degree-s polynomials ordered by height, then lexicographically.

    The height is the largest coefficient (as an integer label).  Within a
    height the coefficient vector is compared from ``x^(s-1)`` down to the
    constant term.
    """
    for h in range(1, q):
        for t in itertools.product(range(h + 1), repeat=s):
            if h in t:
                yield list(reversed(t)) + [1]


@lru_cache(maxsize=None)
def ext_field_build(q, s: int) -> ExtField:
    """Build ``F_{q^s}`` with the first irreducible modulus in height order.

    See :func:`_candidates` for the order.
    """
    base = q if isinstance(q, (PrimeField, BinaryField)) else base_field(q)
    s = int(s)
    if s < 2:
        raise ValueError("extension degree must be at least 2")
    for f in _candidates(base.order, s):
        if f[0] == 0:
            continue
        if not any(f[1:-1]):
            ok = _binomial_irreducible(base, s, base.ssub(0, f[0]))
        else:
            ok = _is_irreducible(base, f)
        if ok:
            return ExtField(base, s, f)
    raise AssertionError("unreachable: irreducible polynomials always exist")


# -- random bases and the V/W split -------------------------------------------


@dataclass(frozen=True)
class Basis:
    """A basis of ``F_{q^s}`` over ``F_q`` split into ``V`` (first v) and ``W``."""

    ext: ExtField
    gamma: np.ndarray  # column j = power-basis coordinates of gamma_j
    gamma_inv: np.ndarray
    v: int

    @property
    def w(self) -> int:
        return self.ext.s - self.v


def _make_basis(ext: ExtField, gamma, v: int) -> Basis:
    from .linalg import inverse

    if not 1 <= v < ext.s:
        raise ValueError("need 1 <= v < s")
    gamma = ext.base.asarray(gamma)
    return Basis(ext, gamma, inverse(ext.base, gamma), v)


def identity_basis(ext: ExtField, v: int) -> Basis:
    return _make_basis(ext, np.eye(ext.s, dtype=np.int64), v)


def sample_basis(ext: ExtField, v: int, rng) -> Basis:
    """Uniform random basis (rejection on singular draws)."""
    from .linalg import rank

    if not 1 <= v < ext.s:
        raise ValueError("need 1 <= v < s")
    while True:
        g = ext.base.random(rng, (ext.s, ext.s))
        if rank(ext.base, g) == ext.s:
            return _make_basis(ext, g, v)


def project(x, basis: Basis) -> np.ndarray:
    """Coordinates of ``x`` in the basis gamma (trailing axis of length s)."""
    F = basis.ext.base
    x = np.asarray(x, dtype=F.dtype)
    shp = x.shape
    return F.matmul(x.reshape(-1, basis.ext.s), basis.gamma_inv.T).reshape(shp)


def project_v(x, basis: Basis) -> np.ndarray:
    return project(x, basis)[..., : basis.v]


def project_w(x, basis: Basis) -> np.ndarray:
    return project(x, basis)[..., basis.v :]


def lift(coords, basis: Basis, space: str | None = None) -> np.ndarray:
    """Map gamma-coordinates (of V, W or the whole space) back to elements."""
    F = basis.ext.base
    cols = {None: slice(None), "V": slice(0, basis.v), "W": slice(basis.v, None)}[space]
    g = basis.gamma[:, cols]
    coords = np.asarray(coords, dtype=F.dtype)
    shp = coords.shape
    out = F.matmul(coords.reshape(-1, shp[-1]), g.T)
    return out.reshape(shp[:-1] + (basis.ext.s,))


def sample_subspace_matrix(rows: int, cols: int, space: str, basis: Basis, rng) -> np.ndarray:
    """Uniform ``rows x cols`` matrix with entries in ``V`` or ``W``."""
    dim = basis.v if space == "V" else basis.w
    if space not in ("V", "W"):
        raise ValueError("space must be 'V' or 'W'")
    coeffs = basis.ext.base.random(rng, (rows, cols, dim))
    return lift(coeffs, basis, space)
