"""Empirical types, strong typicality and the decoder's target sets.

Strong typicality is measured per cell in L-infinity with an explicit support
condition: a block is eps-typical for ``q`` on ``s`` when every symbol tuple
``a`` over ``s`` has ``|type(a) - q(a)| <= eps`` and never occurs when
``q(a) = 0``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .info_core import ZERO_PROB, JointPmf, SequenceBlock, marginalize, sensor_set


@dataclass(frozen=True)
class TypicalityParams:
    """Tolerance ``epsilon`` plus the slacks derived from it.

    ``epsilon_prime`` widens the target sets, ``epsilon_dot`` is the extra
    per-symbol rate a sensor spends beyond the target-set rate.  The bits a
    sensor has sent must outnumber the target-set exponent, so
    ``epsilon_dot > epsilon_prime`` is required for decoding to succeed.
    """

    epsilon: float
    prime_factor: float = 2.0
    dot_factor: float = 3.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        if self.prime_factor < 1:
            raise InvalidArgument("epsilon_prime must be >= epsilon")
        if self.dot_factor <= self.prime_factor:
            raise InvalidArgument("epsilon_dot must exceed epsilon_prime")

    @property
    def epsilon_prime(self) -> float:
        return self.prime_factor * self.epsilon

    @property
    def epsilon_dot(self) -> float:
        return self.dot_factor * self.epsilon


def _as_block(block, alphabet_sizes=None) -> SequenceBlock:
    if isinstance(block, SequenceBlock):
        return block
    arr = np.atleast_2d(np.asarray(block, dtype=np.int64))
    if alphabet_sizes is None:
        alphabet_sizes = tuple(int(r.max()) + 1 for r in arr)
    return SequenceBlock(arr, alphabet_sizes)


def empirical_type(block, s: Iterable[int] | int | None = None, alphabet_sizes=None) -> JointPmf:
    """Joint type of the rows ``s`` of ``block`` (all rows when ``s`` is None).

    Raw arrays are accepted; their alphabet sizes default to ``max + 1`` per row.
    """
    block = _as_block(block, alphabet_sizes)
    s = sorted(range(block.m)) if s is None else sorted(sensor_set(s))
    if not s:
        raise InvalidArgument("sensor set must be nonempty")
    sizes = tuple(block.alphabet_sizes[i] for i in s)
    cells = np.ravel_multi_index(tuple(block.symbols[s]), sizes)
    counts = np.bincount(cells, minlength=int(np.prod(sizes)))
    return JointPmf(sizes, counts / block.k)


def _reference_on(q: JointPmf, s: list[int], m: int) -> JointPmf:
    # q is either a pmf over exactly s or over all m sensors
    if q.m == len(s):
        return q
    if q.m == m:
        return marginalize(q, s)
    raise InvalidArgument(f"reference pmf has {q.m} sensors; expected {len(s)} or {m}")


def max_deviation(block, s, q: JointPmf) -> float:
    """L-infinity distance between the type of ``block`` on ``s`` and ``q``."""
    block = _as_block(block)
    s = sorted(sensor_set(s))
    ref = _reference_on(q, s, block.m)
    rows = block.symbols[s]
    if np.any(rows >= np.array(ref.alphabet_sizes)[:, None]):
        raise InvalidArgument("block alphabets do not match the reference pmf")
    typ = empirical_type(SequenceBlock(rows, ref.alphabet_sizes))
    return float(np.abs(typ.probs - ref.probs).max())


def is_typical(block, s, q: JointPmf, eps: float) -> bool:
    """Strong eps-typicality of the rows ``s`` of ``block`` with respect to ``q``."""
    block = _as_block(block)
    s = sorted(sensor_set(s))
    ref = _reference_on(q, s, block.m)
    sizes = ref.alphabet_sizes
    rows = block.symbols[s]
    if np.any(rows >= np.array(sizes)[:, None]):
        return False
    typ = empirical_type(SequenceBlock(rows, sizes))
    if np.any((typ.probs > 0) & (ref.probs <= ZERO_PROB)):
        return False
    return bool(np.abs(typ.probs - ref.probs).max() <= eps)


def in_S_set(block, p: JointPmf, cover: Iterable[Iterable[int]], eps: float) -> bool:
    """True iff the block is eps-typical for p's marginal on every member of ``cover``."""
    return all(is_typical(block, s, p, eps) for s in cover)


def conditional_type_entropy(candidate, context=None) -> float:
    """Empirical H(X | X_context) of the joint type of ``candidate`` and ``context``.

    ``context`` is a ``(r, k)`` array of sequences (``r`` may be 0) or None.
    """
    x = np.asarray(candidate, dtype=np.int64).reshape(-1)
    k = x.size
    if k == 0:
        raise InvalidArgument("empty candidate sequence")
    if context is None or np.size(context) == 0:
        ctx_ids = np.zeros(k, dtype=np.int64)
    else:
        ctx = np.atleast_2d(np.asarray(context, dtype=np.int64))
        if ctx.shape[1] != k:
            raise InvalidArgument(f"context length {ctx.shape[1]} != candidate length {k}")
        _, ctx_ids = np.unique(ctx.T, axis=0, return_inverse=True)
        ctx_ids = ctx_ids.reshape(-1)
    joint = ctx_ids * (int(x.max()) + 1) + x
    n_a = np.unique(ctx_ids, return_counts=True)[1].astype(float)
    n_ab = np.unique(joint, return_counts=True)[1].astype(float)
    h = (float((n_a * np.log2(n_a)).sum()) - float((n_ab * np.log2(n_ab)).sum())) / k
    return max(h, 0.0)


def in_target_set(candidate, context, R: float, params: TypicalityParams | float) -> bool:
    """Membership of ``candidate`` in the target set at rate ``R`` given ``context``.

    The union of conditional typical sets over all q with H_q(X_i|X_s) <= R is
    tested through the candidate's own conditional type entropy, which must not
    exceed ``R + epsilon_prime``.  A bare float is taken as ``epsilon_prime``.
    """
    slack = params.epsilon_prime if isinstance(params, TypicalityParams) else float(params)
    return conditional_type_entropy(candidate, context) <= R + slack + 1e-12


def lemma_marginal_closeness(block, p: JointPmf, cover, eps: float, eps_prime: float | None = None) -> bool:
    """Check that an S-set block's type has p's marginals on every cover member to within eps'.

    Requires ``in_S_set(block, p, cover, eps)``; ``eps_prime`` defaults to ``2 * eps``.
    """
    if not in_S_set(block, p, cover, eps):
        raise InvalidArgument("block is not in the S-set for this cover")
    eps_prime = 2 * eps if eps_prime is None else eps_prime
    return all(max_deviation(block, s, p) <= eps_prime for s in cover)
