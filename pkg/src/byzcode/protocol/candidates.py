"""Target-set sizes and uniform sampling by conditional type classes.

A candidate ``x`` of length ``k`` is judged against a fixed context through its
conditional type: for each context symbol ``a`` (occurring ``n_a`` times) the
counts ``n_ab`` of each candidate symbol ``b``.  The total conditional type
entropy ``k * H(x | ctx) = sum_a (n_a log n_a - sum_b n_ab log n_ab)`` is
additive over context symbols, and so is the log of the class size
(a product of multinomials).  Counting all sequences below an entropy
threshold is therefore a convolution over context symbols, done here on a
fine entropy grid (``resolution`` bits of total entropy per bin).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import gammaln

from ..errors import InvalidArgument

MAX_LOG2_SPACE = 1000.0
MAX_COMPOSITIONS = 250_000
EXHAUSTIVE_LIMIT = 1 << 16


def compositions(n: int, parts: int) -> np.ndarray:
    """All ways to write ``n`` as an ordered sum of ``parts`` nonnegative ints."""
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    total = math.comb(n + parts - 1, parts - 1)
    if total > MAX_COMPOSITIONS:
        raise InvalidArgument(f"{total} compositions of {n} into {parts} parts exceeds the enumeration limit")
    out = np.empty((total, parts), dtype=np.int64)
    for row, bars in enumerate(itertools.combinations(range(n + parts - 1), parts - 1)):
        prev = -1
        for j, b in enumerate(bars):
            out[row, j] = b - prev - 1
            prev = b
        out[row, -1] = n + parts - 2 - prev
    return out


def _xlogx(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.where(c > 0, c * np.log2(np.where(c > 0, c, 1.0)), 0.0)


def context_ids(context, k: int) -> np.ndarray:
    if context is None or np.size(context) == 0:
        return np.zeros(k, dtype=np.int64)
    ctx = np.atleast_2d(np.asarray(context, dtype=np.int64))
    if ctx.shape[1] != k:
        raise InvalidArgument(f"context length {ctx.shape[1]} != {k}")
    return np.unique(ctx.T, axis=0, return_inverse=True)[1].reshape(-1)


class TargetSetCounter:
    """Sizes of, and uniform draws from, conditional-entropy shells given a context."""

    def __init__(self, context, alphabet_size: int, k: int, resolution: float = 0.01):
        if alphabet_size < 1 or k < 1:
            raise InvalidArgument("alphabet size and k must be >= 1")
        if k * math.log2(max(alphabet_size, 1)) > MAX_LOG2_SPACE:
            raise InvalidArgument("sequence space too large for float counting")
        self.k = k
        self.alphabet_size = alphabet_size
        self.resolution = resolution
        ids = context_ids(context, k)
        self.groups = []
        for a in np.unique(ids):
            pos = np.flatnonzero(ids == a)
            n = pos.size
            comps = compositions(n, alphabet_size)
            ent = float(_xlogx(n)) - _xlogx(comps).sum(axis=1)
            log_size = gammaln(n + 1) - gammaln(comps + 1).sum(axis=1)
            counts = np.exp(log_size)
            bins = np.rint(np.maximum(ent, 0.0) / resolution).astype(np.int64)
            self.groups.append((pos, comps, bins, counts))
        span = sum(int(g[2].max()) for g in self.groups)
        self.size = span + 1
        forward = [np.zeros(self.size)]
        forward[0][0] = 1.0
        for _, _, bins, counts in self.groups:
            prev = forward[-1]
            cur = np.zeros(self.size)
            ub, inv = np.unique(bins, return_inverse=True)
            weights = np.zeros(ub.size)
            np.add.at(weights, inv, counts)
            for b, w in zip(ub, weights):
                cur[b:] += w * prev[: self.size - b]
            forward.append(cur)
        self.forward = forward
        self.cumulative = np.cumsum(forward[-1])

    def index(self, threshold: float) -> int:
        """Last grid bin whose per-symbol entropy is <= ``threshold``."""
        if threshold == -math.inf or threshold < 0:
            return -1
        return min(int(math.floor(threshold * self.k / self.resolution + 1e-9)), self.size - 1)

    def count_at_most(self, threshold: float) -> float:
        j = self.index(threshold)
        return 0.0 if j < 0 else float(self.cumulative[j])

    def count_between(self, lo: float, hi: float) -> float:
        """Number of sequences with conditional type entropy in ``(lo, hi]``."""
        return max(self.count_at_most(hi) - self.count_at_most(lo), 0.0)

    def bins_of(self, seqs) -> np.ndarray:
        """Grid bin of each row of ``seqs``, rounded per context group like the counts."""
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
        out = np.zeros(seqs.shape[0], dtype=np.int64)
        for pos, *_ in self.groups:
            cols = seqs[:, pos]
            ent = np.full(seqs.shape[0], float(_xlogx(pos.size)))
            for b in range(self.alphabet_size):
                ent -= _xlogx((cols == b).sum(axis=1))
            out += np.rint(np.maximum(ent, 0.0) / self.resolution).astype(np.int64)
        return out

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def sample(self, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the sequences with conditional type entropy in ``(lo, hi]``."""
        a, b = self.index(lo) + 1, self.index(hi)
        if b < a:
            raise InvalidArgument("empty entropy shell")
        weights = self.forward[-1][a : b + 1]
        if weights.sum() <= 0:
            raise InvalidArgument("empty entropy shell")
        g = a + int(rng.choice(weights.size, p=weights / weights.sum()))
        x = np.empty(self.k, dtype=np.int64)
        for level in range(len(self.groups), 0, -1):
            pos, comps, bins, counts = self.groups[level - 1]
            prev = self.forward[level - 1]
            ok = bins <= g
            w = np.where(ok, counts * prev[np.where(ok, g - bins, 0)], 0.0)
            j = int(rng.choice(w.size, p=w / w.sum()))
            g -= int(bins[j])
            symbols = np.repeat(np.arange(self.alphabet_size), comps[j])
            x[pos] = rng.permutation(symbols)
        return x


def all_sequences(k: int, alphabet_size: int) -> np.ndarray:
    """Every sequence of ``X^k`` as rows, in lexicographic order."""
    total = alphabet_size**k
    if total > EXHAUSTIVE_LIMIT:
        raise InvalidArgument(f"{total} sequences exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}")
    if alphabet_size == 1:
        return np.zeros((1, k), dtype=np.int64)
    return np.array(np.unravel_index(np.arange(total), (alphabet_size,) * k)).T.astype(np.int64)


def conditional_entropies(seqs, context) -> np.ndarray:
    """Conditional type entropy of each row of ``seqs`` given ``context``."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    k = seqs.shape[1]
    ids = context_ids(context, k)
    alphabet = int(seqs.max()) + 1
    total = np.zeros(seqs.shape[0])
    for a in np.unique(ids):
        cols = seqs[:, ids == a]
        n = cols.shape[1]
        acc = np.full(seqs.shape[0], float(_xlogx(n)))
        for b in range(alphabet):
            acc -= _xlogx((cols == b).sum(axis=1))
        total += acc
    return np.maximum(total / k, 0.0)


def anonymous_matches(n: float, bits: int, u: float) -> int:
    """Outcome of ``n`` independent sequences each matching ``bits`` random bits.

    Returns 0, 1, or 2 (meaning two or more), using the uniform draw ``u``.
    """
    if n <= 0:
        return 0
    p = 2.0 ** (-bits)
    if p >= 1.0:
        return 1 if n < 1.5 else 2
    log_miss = math.log1p(-p)
    p0 = math.exp(n * log_miss)
    p1 = n * p * math.exp((n - 1) * log_miss) if n >= 1 else 0.0
    if u < p0:
        return 0
    if u < p0 + p1:
        return 1
    return 2
