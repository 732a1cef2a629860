"""Joint pmfs over finite alphabets and the information measures built on them.

Sensors are indexed from 0.  A ``SensorSet`` is a frozenset of sensor indices;
any iterable of ints is accepted wherever one is expected.  All logarithms are
base 2, so every quantity is in bits.

The flat probability vector of a :class:`JointPmf` is row-major over
``(x_0, ..., x_{m-1})``: the cell ``(x_0, ..., x_{m-1})`` sits at offset
``sum_i x_i * prod_{j > i} |X_j|`` (the last sensor varies fastest).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidArgument, ZeroProbabilityContext

SensorSet = frozenset

# Cells below this are treated as exact zeros inside 0 log 0.
ZERO_PROB = 1e-15
SUM_TOL = 1e-12
SCHEMA_VERSION = 1


def sensor_set(s: Iterable[int] | int) -> frozenset[int]:
    """Normalize ``s`` into a frozenset of sensor indices.

    A bare int is read as a single sensor, not a bitmask.
    """
    if isinstance(s, (int, np.integer)):
        return frozenset((int(s),))
    return frozenset(int(i) for i in s)


def _plogp_sum(values: np.ndarray) -> float:
    v = values[values > ZERO_PROB]
    return float(-(v * np.log2(v)).sum())


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense joint pmf of ``m`` discrete sources.

    ``probs`` may be given flat (row-major) or already shaped; it is stored
    shaped as ``alphabet_sizes`` and made read-only.
    """

    alphabet_sizes: tuple[int, ...]
    probs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(a) for a in self.alphabet_sizes)
        if len(sizes) < 1:
            raise InvalidArgument("a JointPmf needs at least one sensor")
        if any(a < 1 for a in sizes):
            raise InvalidArgument(f"alphabet sizes must be >= 1, got {sizes}")
        arr = np.array(self.probs, dtype=float)
        if arr.size != math.prod(sizes):
            raise InvalidArgument(
                f"probs has {arr.size} entries, alphabet sizes {sizes} need {math.prod(sizes)}"
            )
        arr = arr.reshape(sizes)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidArgument("probabilities must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidArgument(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "alphabet_sizes", sizes)
        object.__setattr__(self, "probs", arr)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_array(cls, arr, normalize: bool = False) -> "JointPmf":
        """Build from a shaped array; ``normalize`` rescales to unit mass."""
        arr = np.asarray(arr, dtype=float)
        if normalize:
            arr = np.where(arr < 0, 0.0, arr)
            arr = arr / arr.sum()
        return cls(arr.shape, arr)

    @classmethod
    def uniform(cls, alphabet_sizes: Iterable[int]) -> "JointPmf":
        sizes = tuple(alphabet_sizes)
        return cls(sizes, np.full(sizes, 1.0 / math.prod(sizes)))

    @classmethod
    def point_mass(cls, alphabet_sizes: Iterable[int], cell: Iterable[int]) -> "JointPmf":
        sizes = tuple(alphabet_sizes)
        arr = np.zeros(sizes)
        arr[tuple(cell)] = 1.0
        return cls(sizes, arr)

    @classmethod
    def product(cls, *factors: "JointPmf") -> "JointPmf":
        """Independent joint pmf; sensors are numbered in argument order."""
        arr = np.ones(())
        for f in factors:
            arr = np.multiply.outer(arr, f.probs)
        return cls.from_array(arr, normalize=True)

    # -- properties ---------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.alphabet_sizes)

    @property
    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    @property
    def sensors(self) -> frozenset[int]:
        return frozenset(range(self.m))

    def check_set(self, s: Iterable[int] | int, allow_empty: bool = False) -> frozenset[int]:
        s = sensor_set(s)
        if not s and not allow_empty:
            raise InvalidArgument("sensor set must be nonempty")
        bad = [i for i in s if not 0 <= i < self.m]
        if bad:
            raise InvalidArgument(f"sensor indices {sorted(bad)} out of range for m={self.m}")
        return s

    def marginal_array(self, s: Iterable[int] | int) -> np.ndarray:
        """Marginal on ``s`` as an array with axes in increasing sensor order."""
        s = self.check_set(s, allow_empty=True)
        if s not in self._cache:
            drop = tuple(i for i in range(self.m) if i not in s)
            out = self.probs.sum(axis=drop) if drop else np.array(self.probs)
            out.setflags(write=False)
            self._cache[s] = out
        return self._cache[s]

    def allclose(self, other: "JointPmf", atol: float = 1e-12) -> bool:
        return self.alphabet_sizes == other.alphabet_sizes and bool(
            np.allclose(self.probs, other.probs, rtol=0, atol=atol)
        )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "alphabet_sizes": list(self.alphabet_sizes),
            "probs": [float(v) for v in self.flat],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "JointPmf":
        if not isinstance(data, Mapping):
            raise FormatError("pmf JSON must be an object")
        if data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise FormatError(f"field 'schema': unsupported version {data.get('schema')!r}")
        for key in ("alphabet_sizes", "probs"):
            if key not in data:
                raise FormatError(f"missing field {key!r}")
            if not isinstance(data[key], list):
                raise FormatError(f"field {key!r} must be a list")
        try:
            return cls(tuple(data["alphabet_sizes"]), np.asarray(data["probs"], dtype=float))
        except (InvalidArgument, TypeError, ValueError) as exc:
            raise FormatError(f"field 'probs'/'alphabet_sizes': {exc}") from exc


@dataclass(frozen=True, eq=False)
class SequenceBlock:
    """``m x k`` matrix of source symbols for one round."""

    symbols: np.ndarray
    alphabet_sizes: tuple[int, ...]

    def __post_init__(self):
        sym = np.array(self.symbols, dtype=np.int64)
        if sym.ndim == 1:
            sym = sym[None, :]
        sizes = tuple(int(a) for a in self.alphabet_sizes)
        if sym.ndim != 2 or sym.shape[0] != len(sizes):
            raise InvalidArgument(f"block shape {sym.shape} does not match {len(sizes)} sensors")
        if sym.shape[1] < 1:
            raise InvalidArgument("block length must be >= 1")
        if np.any(sym < 0) or np.any(sym >= np.array(sizes)[:, None]):
            raise InvalidArgument("block contains symbols outside the alphabets")
        sym.setflags(write=False)
        object.__setattr__(self, "symbols", sym)
        object.__setattr__(self, "alphabet_sizes", sizes)

    @property
    def m(self) -> int:
        return self.symbols.shape[0]

    @property
    def k(self) -> int:
        return self.symbols.shape[1]

    def rows(self, s: Iterable[int]) -> np.ndarray:
        return self.symbols[sorted(sensor_set(s))]

    def __eq__(self, other):
        if not isinstance(other, SequenceBlock):
            return NotImplemented
        return self.alphabet_sizes == other.alphabet_sizes and np.array_equal(
            self.symbols, other.symbols
        )

    __hash__ = None


# -- information measures ---------------------------------------------------


def entropy(q: JointPmf, s: Iterable[int] | int) -> float:
    """Entropy in bits of the marginal of ``q`` on ``s``."""
    s = q.check_set(s)
    key = ("H", s)
    if key not in q._cache:
        q._cache[key] = _plogp_sum(q.marginal_array(s).reshape(-1))
    return q._cache[key]


def _entropy_or_zero(q: JointPmf, s: frozenset[int]) -> float:
    return entropy(q, s) if s else 0.0


def conditional_entropy(q: JointPmf, s, given=()) -> float:
    """H(X_s | X_given) = H(X_s X_given) - H(X_given)."""
    s = q.check_set(s)
    given = q.check_set(given, allow_empty=True)
    if s & given:
        raise InvalidArgument(f"sets overlap: {sorted(s & given)}")
    return entropy(q, s | given) - _entropy_or_zero(q, given)


def conditional_mutual_information(q: JointPmf, a, b, given=()) -> float:
    """I(X_a; X_b | X_given) in bits."""
    a = q.check_set(a)
    b = q.check_set(b)
    given = q.check_set(given, allow_empty=True)
    if a & b or a & given or b & given:
        raise InvalidArgument("sets a, b and given must be pairwise disjoint")
    return (
        _entropy_or_zero(q, a | given)
        + _entropy_or_zero(q, b | given)
        - entropy(q, a | b | given)
        - _entropy_or_zero(q, given)
    )


def mutual_information(q: JointPmf, a, b) -> float:
    return conditional_mutual_information(q, a, b, ())


def marginalize(q: JointPmf, s) -> JointPmf:
    """Marginal pmf on ``s``; its sensors are renumbered in increasing order."""
    s = q.check_set(s)
    order = sorted(s)
    arr = q.marginal_array(s)
    return JointPmf(tuple(q.alphabet_sizes[i] for i in order), arr)


def condition(q: JointPmf, s, context: Mapping[int, int]) -> JointPmf:
    """q(x_s | context), where ``context`` maps sensors outside ``s`` to symbols.

    Sensors in neither ``s`` nor ``context`` are marginalized out.
    """
    s = q.check_set(s)
    ctx = {int(i): int(v) for i, v in dict(context).items()}
    q.check_set(ctx.keys(), allow_empty=True)
    if s & ctx.keys():
        raise InvalidArgument("context sensors must lie outside s")
    for i, v in ctx.items():
        if not 0 <= v < q.alphabet_sizes[i]:
            raise InvalidArgument(f"symbol {v} out of range for sensor {i}")
    keep = s | frozenset(ctx)
    arr = q.marginal_array(keep)
    order = sorted(keep)
    index = tuple(ctx[i] if i in ctx else slice(None) for i in order)
    sub = np.array(arr[index], dtype=float)
    mass = float(sub.sum())
    if mass <= ZERO_PROB:
        raise ZeroProbabilityContext(f"context {ctx} has probability {mass!r}")
    return JointPmf.from_array(sub / mass, normalize=True)


def sample_block(q: JointPmf, k: int, seed=None) -> SequenceBlock:
    """``k`` i.i.d. draws from ``q``; ``seed`` may be an int or a numpy Generator."""
    if k < 1:
        raise InvalidArgument("block length k must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(q.flat)
    cells = np.searchsorted(cdf, rng.random(k) * cdf[-1], side="right")
    cells = np.minimum(cells, q.flat.size - 1)
    return SequenceBlock(np.array(np.unravel_index(cells, q.alphabet_sizes)), q.alphabet_sizes)
