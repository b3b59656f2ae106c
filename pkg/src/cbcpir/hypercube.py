"""Hypercube databases and the multi-round iterative protocol.

The ``m = x^t`` files are indexed by base-``x`` digits, least significant
first.  Each round queries one digit with an ordinary ``x``-file query.  The
server replaces every group of ``x`` files by the answer to that query,
re-chunked into ``delta``-wide rows, and keeps the result for the next
round.  After ``omega`` rounds the remaining database is downloaded and
the client peels the rounds off in reverse.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import flatten_to_fq, unflatten_from_fq
from .scheme import Params, Query, QuerySecret, answer, build_query, recover

__all__ = [
    "CubeShape",
    "reindex",
    "reshape_delta",
    "unreshape_delta",
    "round_params",
    "round_matrix",
    "IterativeServer",
    "IterativeClient",
    "iterative_retrieve",
    "iterative_rate",
    "SessionError",
    "UnknownSession",
    "OutOfOrderRound",
]


class SessionError(RuntimeError):
    """Base class for session discipline violations."""


class UnknownSession(SessionError):
    pass


class OutOfOrderRound(SessionError):
    pass


@dataclass(frozen=True)
class CubeShape:
    t: int
    x: int
    omega: int

    def __post_init__(self):
        if self.t < 1 or self.x < 1:
            raise ValueError("need t >= 1 and x >= 1")
        if not 1 <= self.omega <= self.t:
            raise ValueError("need 1 <= omega <= t")

    @property
    def m(self) -> int:
        return self.x**self.t

    @classmethod
    def for_files(cls, m: int, t: int, omega: int) -> "CubeShape":
        x = round(m ** (1 / t))
        for cand in (x - 1, x, x + 1):
            if cand >= 1 and cand**t == m:
                return cls(t, cand, omega)
        raise ValueError(f"{m} is not a perfect {t}-th power")


def reindex(i: int, r: int, shape: CubeShape) -> tuple:
    """Digits ``floor(i / x^(r-1+j)) mod x`` for ``j = 0..t-r``."""
    if not 0 <= i < shape.m:
        raise IndexError("file index out of range")
    if not 1 <= r <= shape.t:
        raise ValueError("round must lie in [1, t]")
    x = shape.x
    return tuple((i // x ** (r - 1 + j)) % x for j in range(shape.t - r + 1))


def reshape_delta(a, delta: int) -> np.ndarray:
    """Row-major re-chunking of an ``M x c`` matrix into rows of width delta."""
    a = np.asarray(a)
    if a.shape[1] % delta:
        raise ValueError(f"row width {a.shape[1]} is not a multiple of delta={delta}")
    return a.reshape(-1, delta)


def unreshape_delta(a, width: int) -> np.ndarray:
    a = np.asarray(a)
    if a.size % width:
        raise ValueError("entry count is not a multiple of the target width")
    return a.reshape(-1, width)


def _check(p: Params, shape: CubeShape):
    if p.m != shape.m:
        raise ValueError(f"params have m={p.m} files but the cube holds {shape.m}")
    if (p.blocks * p.n * p.s) % p.delta:
        raise ValueError("delta must divide blocks*n*s for the iterative protocol")


def _chunk_factor(p: Params) -> int:
    return p.blocks * p.n * p.s // p.delta


def round_params(p: Params, shape: CubeShape, r: int) -> Params:
    """Parameters of the round-``r`` query: ``x`` files of ``L_(r-1) x^(t-r)`` rows."""
    rows = p.L * _chunk_factor(p) ** (r - 1) * shape.x ** (shape.t - r)
    return p.with_(m=shape.x, L=rows)


def round_matrix(files: np.ndarray, x: int) -> np.ndarray:
    """Stack files ``(G*x, L, delta)`` into the ``(G*L, x*delta)`` round database.

    Group ``g`` holds files ``g*x .. g*x + x-1``; within a group the rows are
    in ascending file order along the columns.
    """
    nf, L, delta = files.shape
    g = nf // x
    return files.reshape(g, x, L, delta).transpose(0, 2, 1, 3).reshape(g * L, x * delta)


def _next_files(p: Params, ans: np.ndarray, groups: int) -> np.ndarray:
    flat = flatten_to_fq(p.ext(), ans)  # (G*L, blocks*n*s)
    rows_per_group = flat.shape[0] // groups
    out = flat.reshape(groups, rows_per_group * flat.shape[1])
    return out.reshape(groups, -1, p.delta)


@dataclass
class _Session:
    files: np.ndarray
    round: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class IterativeServer:
    """Holds per-session intermediate databases between rounds."""

    def __init__(self, db, p: Params, shape: CubeShape):
        _check(p, shape)
        x = db.x if hasattr(db, "x") else np.asarray(db)
        self.p, self.shape = p, shape
        self._files = x.reshape(p.L, p.m, p.delta).transpose(1, 0, 2)
        self._sessions: dict = {}
        self._lock = threading.Lock()
        self.mul_count = 0

    def round(self, session: bytes, r: int, query: Query) -> None:
        """Apply a round-``r`` query; round 1 (re)starts the session."""
        with self._lock:
            if r == 1:
                self._sessions[session] = _Session(self._files)
            sess = self._sessions.get(session)
        if sess is None:
            raise UnknownSession("unknown session")
        with sess.lock:
            if r != sess.round + 1 or r > self.shape.omega:
                raise OutOfOrderRound(f"expected round {sess.round + 1}, got {r}")
            rp = round_params(self.p, self.shape, r)
            xr = round_matrix(sess.files, self.shape.x)
            qm = query.matrix
            if qm.shape[0] != xr.shape[1] or qm.shape[1] != self.p.blocks * self.p.n:
                raise ValueError("round query has the wrong shape")
            ans = answer(xr, query)
            self.mul_count += xr.shape[0] * xr.shape[1] * qm.shape[1] * self.p.s
            sess.files = _next_files(rp, ans, sess.files.shape[0] // self.shape.x)
            sess.round = r

    def final(self, session: bytes) -> np.ndarray:
        """Remaining database ``(x^(t-omega), L_omega, delta)``; ends the session."""
        with self._lock:
            sess = self._sessions.get(session)
        if sess is None:
            raise UnknownSession("unknown session")
        with sess.lock:
            if sess.round != self.shape.omega:
                raise OutOfOrderRound(f"final requested after round {sess.round} of {self.shape.omega}")
            with self._lock:
                self._sessions.pop(session, None)
            return sess.files


class IterativeClient:
    def __init__(self, p: Params, shape: CubeShape, d: int, rng):
        _check(p, shape)
        if not 0 <= d < shape.m:
            raise IndexError("file index out of range")
        self.p, self.shape, self.d, self.rng = p, shape, d, rng
        self.digits = reindex(d, 1, shape)
        self.secrets: list[QuerySecret] = []

    def query(self, r: int) -> Query:
        rp = round_params(self.p, self.shape, r)
        q, qs = build_query(rp, self.digits[r - 1], self.rng)
        self.secrets.append(qs)
        return q

    def decode(self, final_files: np.ndarray) -> np.ndarray:
        p, shape = self.p, self.shape
        group = self.d // shape.x**shape.omega
        cur = np.asarray(final_files)[group]  # (L_omega, delta)
        width = p.blocks * p.n * p.s
        for r in range(shape.omega, 0, -1):
            rp = round_params(p, shape, r)
            rows = unreshape_delta(cur, width)  # answer rows of this group
            ans = unflatten_from_fq(p.ext(), rows)
            cur = recover(ans, self.secrets[r - 1], rp)
        return cur


def iterative_retrieve(db, p: Params, shape: CubeShape, d: int, rng, server: IterativeServer | None = None) -> np.ndarray:
    """Run every round in process and return file ``d``."""
    server = server or IterativeServer(db, p, shape)
    client = IterativeClient(p, shape, d, rng)
    sid = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
    for r in range(1, shape.omega + 1):
        server.round(sid, r, client.query(r))
    return client.decode(server.final(sid))


def iterative_rate(p: Params, shape: CubeShape) -> Fraction:
    """``L delta / (b x omega delta ns + L (b ns/delta)^omega x^(t-omega) delta)``.

    ``b`` is the number of query blocks (2 for the two-block variants).
    """
    b, ns = p.blocks, p.n * p.s
    up = b * shape.x * shape.omega * p.delta * ns
    down = p.L * Fraction(b * ns, p.delta) ** shape.omega * shape.x ** (shape.t - shape.omega) * p.delta
    return Fraction(p.L * p.delta) / (up + down)
