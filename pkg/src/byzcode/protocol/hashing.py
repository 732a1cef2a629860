"""Seeded binning functions.

Each transaction of the protocol is hashed with its own simple-tabulation hash:
a table of random 64-bit words indexed by (position, symbol), XOR-reduced over
the sequence and truncated to the transaction's bit width.  Tables are keyed
by ``(session seed, round, sensor, transaction, c)`` and are public: the
sensors, the decoder and the traitors can all compute them.  Only the choice
of ``c`` is private to the sensor that makes it.

Tabulation hashing is linear over GF(2), which is what makes collisions easy
to construct for an adversary that knows ``c`` in advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

WORD = 64


def words_for(bits: int) -> int:
    return max(1, math.ceil(bits / WORD))


def _masks(bits: int) -> np.ndarray:
    out = []
    for w in range(words_for(bits)):
        width = min(WORD, bits - WORD * w)
        out.append((1 << width) - 1 if width > 0 else 0)
    return np.array(out, dtype=np.uint64)


def words_to_int(words) -> int:
    return sum(int(v) << (WORD * j) for j, v in enumerate(np.asarray(words).reshape(-1)))


@lru_cache(maxsize=8192)
def _table(seed: int, round_: int, sensor: int, transaction: int, c: int, k: int, alphabet: int, nwords: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed, 0xB1, round_, sensor, transaction, c])
    raw = np.random.default_rng(ss).bit_generator.random_raw(k * alphabet * nwords)
    table = np.asarray(raw, dtype=np.uint64).reshape(k, alphabet, nwords)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class Codebook:
    """All binning functions of one session."""

    seed: int
    k: int
    alphabet_sizes: tuple[int, ...]

    def table(self, round_: int, sensor: int, transaction: int, c: int, bits: int) -> np.ndarray:
        return _table(int(self.seed), round_, sensor, transaction, c, self.k, self.alphabet_sizes[sensor], words_for(bits))

    def hash_words(self, seqs, round_: int, sensor: int, transaction: int, c: int, bits: int) -> np.ndarray:
        """Hash a batch ``(N, k)`` of sequences; returns ``(N, words)`` masked words."""
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
        table = self.table(round_, sensor, transaction, c, bits)
        picked = table[np.arange(self.k)[None, :], seqs]
        return np.bitwise_xor.reduce(picked, axis=1) & _masks(bits)[None, :]

    def hash(self, seq, round_: int, sensor: int, transaction: int, c: int, bits: int) -> int:
        return words_to_int(self.hash_words(seq, round_, sensor, transaction, c, bits)[0])

    def matches(self, seqs, value: int, round_: int, sensor: int, transaction: int, c: int, bits: int) -> np.ndarray:
        got = self.hash_words(seqs, round_, sensor, transaction, c, bits)
        want = np.array([(value >> (WORD * j)) & ((1 << WORD) - 1) for j in range(got.shape[1])], dtype=np.uint64)
        return np.all(got == want[None, :], axis=1)


@dataclass(frozen=True)
class BinningEncoder:
    """Sensor ``sensor`` encoding with function index ``c`` in one round."""

    codebook: Codebook
    sensor: int
    round: int
    c: int

    def __call__(self, seq, transaction: int, bits: int) -> int:
        return self.codebook.hash(seq, self.round, self.sensor, transaction, self.c, bits)


def find_collision(codebook: Codebook, seq, round_: int, sensor: int, transaction: int, c: int, bits: int, rng) -> np.ndarray | None:
    """A sequence other than ``seq`` with the same hash, via GF(2) elimination.

    Each candidate change (one position moved to another symbol) contributes a
    difference vector; any nonempty subset of changes whose differences XOR to
    zero yields a collision.  Returns None if the changes available are
    linearly independent.
    """
    seq = np.asarray(seq, dtype=np.int64)
    alphabet = codebook.alphabet_sizes[sensor]
    if alphabet < 2:
        return None
    table = codebook.table(round_, sensor, transaction, c, bits)
    mask = words_to_int(_masks(bits))
    positions = rng.permutation(codebook.k)[: bits + 1]
    alts = (seq[positions] + 1 + rng.integers(0, alphabet - 1, size=positions.size)) % alphabet
    basis: dict[int, tuple[int, int]] = {}
    for idx, (pos, alt) in enumerate(zip(positions, alts)):
        row = words_to_int(table[pos, alt] ^ table[pos, seq[pos]]) & mask
        combo = 1 << idx
        while row:
            pivot = row.bit_length() - 1
            if pivot not in basis:
                basis[pivot] = (row, combo)
                break
            brow, bcombo = basis[pivot]
            row ^= brow
            combo ^= bcombo
        if row == 0:
            chosen = [j for j in range(idx + 1) if combo >> j & 1]
            out = seq.copy()
            out[positions[chosen]] = alts[chosen]
            return out
    return None
