"""Adversaries against the query and analytic security estimators.

The rank attacks look only at the query, exactly as a curious server
would.  Ranks are always taken over the base field after flattening each
extension entry into its ``s`` coordinates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import flatten_to_fq, rank
from .scheme import Params, Query, Variant, build_query

__all__ = [
    "AttackReport",
    "MonteCarloReport",
    "block_deletion_ranks",
    "subquery_attack",
    "support_attack_beta",
    "full_modified_attack",
    "monte_carlo",
    "isd_workfactor_log2",
    "gaussian_binomial",
    "subspace_guess_log2",
    "rank_collapse_bound_log2",
    "hhw_success_bound_log_q",
    "beta_success_bound",
    "MAX_BETA_GUESSES",
]

MAX_BETA_GUESSES = 2**20


@dataclass
class AttackReport:
    guessed_index: int | None
    ranks: list = field(default_factory=list)
    succeeded: bool = False
    candidates: tuple = ()  # indices tied for the guess; used for a forced guess
    beta: np.ndarray | None = None

    def forced_guess(self, rng) -> int:
        """The guess, or a uniform pick among the tied candidates."""
        if self.guessed_index is not None:
            return self.guessed_index
        return int(rng.choice(self.candidates))


@dataclass
class MonteCarloReport:
    trials: int
    successes: int  # decisive correct guesses
    abstentions: int
    forced_successes: int  # correct guesses when ties are broken at random
    m: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def forced_rate(self) -> float:
        return self.forced_successes / self.trials

    def pvalue_above_chance(self, forced: bool = True) -> float:
        """One-sided binomial test of success probability > 1/m."""
        from scipy.stats import binomtest

        k = self.forced_successes if forced else self.successes
        return float(binomtest(k, self.trials, 1 / self.m, alternative="greater").pvalue)


def _ext_of(p: Params):
    return p.ext()


def _block_rows(p: Params, j: int) -> slice:
    return slice(j * p.delta, (j + 1) * p.delta)


def block_deletion_ranks(block, p: Params) -> list:
    """F_q-rank of the block with the rows of file ``j`` deleted, for every ``j``."""
    ext = _ext_of(p)
    block = np.asarray(block)
    nblk = block.shape[0] // p.delta
    out = []
    for j in range(nblk):
        rows = np.r_[0 : j * p.delta, (j + 1) * p.delta : block.shape[0]]
        out.append(rank(ext.base, flatten_to_fq(ext, block[rows])))
    return out


def _argmin_report(ranks, labels, target=None) -> AttackReport:
    lo = min(ranks)
    tied = tuple(labels[j] for j, r in enumerate(ranks) if r == lo)
    guess = tied[0] if len(tied) == 1 else None
    return AttackReport(guess, list(ranks), guess is not None and guess == target, tied)


def subquery_attack(block, p: Params, target: int | None = None) -> AttackReport:
    """Guess the index whose deletion drops the rank the most.

    Abstains (``guessed_index=None``) unless the minimum is unique.
    """
    block = np.asarray(block)
    if block.shape[0] != p.m * p.delta:
        raise ValueError("query block must have m*delta rows")
    if p.m == 1:
        return AttackReport(None, [], False, (0,))
    ranks = block_deletion_ranks(block, p)
    return _argmin_report(ranks, list(range(p.m)), target)


def _chunks(m: int, h: int, anchor: int = 0):
    """Cover ``[m]`` by chunks of size h that all contain the anchor."""
    rest = [j for j in range(m) if j != anchor]
    step = max(min(h, m) - 1, 1)
    out = []
    for i in range(0, len(rest), step):
        part = rest[i : i + step] if i + step <= len(rest) else rest[-step:]
        out.append([anchor] + part)
    return out or [[anchor]]


def support_attack_beta(q1, p: Params, h: int, anchor: int = 0):
    """Recover ``beta`` up to a scalar from the first query block.

    Works on chunks of ``h`` files sharing the anchor file.  For each chunk
    every ratio vector ``b`` is tried and accepted when the stacked blocks
    ``Q_j - b_j Q_anchor`` have rank at most ``ns - delta``.  Returns the
    normalised ``beta`` (anchor entry 1), or ``None`` when some chunk has no
    or several passing ratio vectors.
    """
    q1 = np.asarray(q1)
    F = p.base()
    ext = _ext_of(p)
    if h < 2:
        raise ValueError("chunk size must be at least 2")
    h = min(h, p.m)
    if (p.q - 1) ** (h - 1) > MAX_BETA_GUESSES:
        raise ValueError(f"(q-1)^(h-1) = {(p.q - 1) ** (h - 1)} guesses is infeasible")
    if p.m == 1:
        return F.asarray(np.ones(1, dtype=np.int64))
    bound = p.n * p.s - p.delta
    flat = flatten_to_fq(ext, q1)  # (m delta, ns)
    qa = flat[_block_rows(p, anchor)]
    units = range(1, p.q)  # every nonzero label; the gate bounds q
    beta = F.zeros(p.m)
    beta[anchor] = 1
    for chunk in _chunks(p.m, h, anchor):
        others = chunk[1:]
        blocks = [flat[_block_rows(p, j)] for j in others]
        passing = []
        for b in itertools.product(units, repeat=len(others)):
            stacked = np.concatenate(
                [F.sub(blk, F.mul(np.asarray(bj, dtype=F.dtype), qa)) for blk, bj in zip(blocks, b)]
            )
            if rank(F, stacked) <= bound:
                passing.append(b)
                if len(passing) > 1:
                    break
        if len(passing) != 1:
            return None
        beta[others] = passing[0]
    return beta


def full_modified_attack(query: Query, p: Params, h: int, target: int | None = None, anchor: int = 0) -> AttackReport:
    """Strip ``beta`` from the second block and rank-attack the residue."""
    if len(query.blocks) != 2:
        raise ValueError("the modified attack needs a two-block query")
    ext = _ext_of(p)
    F = p.base()
    q1, q2 = query.blocks
    beta = support_attack_beta(q1, p, h, anchor)
    if beta is None:
        return AttackReport(None, [], False, tuple(range(p.m)))
    other = [j for j in range(p.m) if j != anchor]
    qa = q2[_block_rows(p, anchor)]
    residue = np.concatenate([ext.sub(q2[_block_rows(p, j)], ext.scale(beta[j], qa)) for j in other])
    ranks = block_deletion_ranks(residue, p)
    if len(set(ranks)) == 1:
        # every residue block still carries Delta: the target is the anchor
        rep = AttackReport(anchor, ranks, anchor == target, (anchor,))
    else:
        rep = _argmin_report(ranks, other, target)
    rep.beta = beta
    return rep


def monte_carlo(p: Params, trials: int, seed: int, attack: str = "subquery", h: int = 2, block: int = -1) -> MonteCarloReport:
    """Run an attack on freshly generated queries with uniform targets.

    ``attack`` is ``"subquery"`` (against query block ``block``) or
    ``"modified"``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    guess_rng = np.random.default_rng([seed, 1])
    succ = abst = forced = 0
    for _ in range(trials):
        i = int(rng.integers(p.m))
        query, _ = build_query(p, i, rng)
        if attack == "subquery":
            rep = subquery_attack(query.blocks[block], p, target=i)
        elif attack == "modified":
            rep = full_modified_attack(query, p, h, target=i)
        else:
            raise ValueError(f"unknown attack {attack!r}")
        succ += rep.succeeded
        abst += rep.guessed_index is None
        forced += rep.forced_guess(guess_rng) == i
    return MonteCarloReport(trials, succ, abst, forced, p.m)


# -- analytic estimators -------------------------------------------------------


def isd_workfactor_log2(n: int, k: int) -> float:
    """``log2(k^3 binom(n, k))``, the Prange-style count."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    return 3 * math.log2(k) + math.log2(math.comb(n, k))


def gaussian_binomial(a: int, b: int, q: int) -> int:
    """Number of ``b``-dimensional subspaces of ``F_q^a``."""
    if not 0 <= b <= a:
        raise ValueError("need 0 <= b <= a")
    num = den = 1
    for i in range(b):
        num *= q ** (a - i) - 1
        den *= q ** (b - i) - 1
    return num // den


def subspace_guess_log2(q: int, s: int, v: int) -> float:
    """Bits of guessing for the hyperplane containing ``V``."""
    if not 0 <= v < s:
        raise ValueError("need 0 <= v < s")
    w = s - v
    num = gaussian_binomial(s, s - 1, q)
    den = gaussian_binomial(w, w - 1, q)
    return math.log2(num) - math.log2(den)


def rank_collapse_bound_log2(p: Params, wt: int):
    """``(exponent, min_weight)`` for the rank-collapse union bound.

    ``exponent`` is the log base q of the failure bound,
    ``(delta+1)(ns-2delta) - delta^2 (m - wt)``; ``min_weight`` is
    ``m + 1 - 1/(2R)`` with ``R = delta/(2ns)``.
    """
    ns = p.n * p.s
    exponent = (p.delta + 1) * (ns - 2 * p.delta) - p.delta**2 * (p.m - wt)
    rate = Fraction(p.delta, 2 * ns)
    return exponent, p.m + 1 - 1 / (2 * rate)


def hhw_success_bound_log_q(p: Params) -> int:
    """Exponent ``e`` in the success bound ``1 - q^e`` of the subquery attack."""
    ns = p.n * p.s
    return (p.delta + 1) * (ns - 2 * p.delta) - p.delta**2 * (p.m - 1)


def beta_success_bound(p: Params, h: int) -> float:
    """``(1 - q^((delta+1)(ns-2delta) - delta^2 h))^ceil(m/h)``, floored at 0."""
    ns = p.n * p.s
    e = (p.delta + 1) * (ns - 2 * p.delta) - p.delta**2 * h
    per = 1 - float(p.q) ** e if e < 0 else 0.0
    return max(per, 0.0) ** math.ceil(p.m / h)
