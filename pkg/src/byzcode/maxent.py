"""Covers of candidate honest sets and the maximum-entropy sum rate.

For a traitor bound ``t`` the candidate honest sets are all ``(m - t)``-subsets
of the sensors.  A cover ``V`` is a family of such sets whose union is every
sensor, and ``Q(V)`` is the set of joint pmfs agreeing with ``p`` on each
member's marginal.  The minimum variable-rate sum rate is the largest entropy
attainable over the union of ``Q(V)`` across covers.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, InvalidArgument
from .info_core import JointPmf, conditional_mutual_information, entropy, sensor_set

DEFAULT_TOL = 1e-9
MAX_CYCLES = 100_000


@dataclass(frozen=True)
class Cover:
    """Family of ``(m - t)``-sized sensor sets."""

    m: int
    t: int
    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if not 0 <= self.t <= self.m - 1:
            raise InvalidArgument(f"t={self.t} out of range for m={self.m}")
        sets = tuple(sorted((sensor_set(s) for s in self.sets), key=lambda s: sorted(s)))
        for s in sets:
            if len(s) != self.m - self.t:
                raise InvalidArgument(f"cover member {sorted(s)} does not have {self.m - self.t} sensors")
            if any(not 0 <= i < self.m for i in s):
                raise InvalidArgument(f"cover member {sorted(s)} has out-of-range sensors")
        if len(set(sets)) != len(sets):
            raise InvalidArgument("cover members must be distinct")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def full(cls, m: int, t: int) -> "Cover":
        """Every candidate honest set; the decoder's starting family."""
        return cls(m, t, tuple(frozenset(c) for c in itertools.combinations(range(m), m - t)))

    def __iter__(self) -> Iterator[frozenset[int]]:
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, s) -> bool:
        return sensor_set(s) in self.sets

    @property
    def union(self) -> frozenset[int]:
        return frozenset().union(*self.sets) if self.sets else frozenset()

    def covers_all(self) -> bool:
        return self.union == frozenset(range(self.m))

    def restrict(self, keep: Iterable[Iterable[int]]) -> "Cover":
        keep = {sensor_set(s) for s in keep}
        return Cover(self.m, self.t, tuple(s for s in self.sets if s in keep))

    def label(self) -> str:
        """Compact 1-based text form, e.g. ``1-2|1-3``; empty cover is ``-``."""
        if not self.sets:
            return "-"
        return "|".join("-".join(str(i + 1) for i in sorted(s)) for s in self.sets)

    def as_lists(self, one_based: bool = True) -> list[list[int]]:
        off = 1 if one_based else 0
        return [[i + off for i in sorted(s)] for s in self.sets]


def enumerate_minimal_covers(m: int, t: int) -> list[Cover]:
    """All inclusion-minimal covers of the sensors by ``(m - t)``-sets.

    Supersets of a cover only shrink ``Q(V)``, so they never raise the maximum.
    A minimal cover has at most ``m`` members (each needs a private sensor).
    """
    if m < 1 or not 0 <= t <= m - 1:
        raise InvalidArgument(f"need 0 <= t <= m-1, got m={m}, t={t}")
    full = frozenset(range(m))
    candidates = [frozenset(c) for c in itertools.combinations(range(m), m - t)]
    out = []
    for size in range(1, min(m, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            if frozenset().union(*combo) != full:
                continue
            minimal = all(
                frozenset().union(*(c for j, c in enumerate(combo) if j != drop)) != full
                for drop in range(size)
            ) if size > 1 else True
            if minimal:
                out.append(Cover(m, t, combo))
    return out


@dataclass(frozen=True)
class QFamilySpec:
    """The family of pmfs matching ``base`` on every member of ``cover``."""

    base: JointPmf
    cover: tuple[frozenset[int], ...]

    def __init__(self, base: JointPmf, cover: Iterable[Iterable[int]]):
        sets = tuple(base.check_set(s) for s in cover)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "cover", sets)

    def marginal_error(self, q: JointPmf | np.ndarray) -> float:
        arr = q.probs if isinstance(q, JointPmf) else np.asarray(q)
        err = 0.0
        for s in self.cover:
            drop = tuple(i for i in range(arr.ndim) if i not in s)
            got = arr.sum(axis=drop) if drop else arr
            err = max(err, float(np.abs(got - self.base.marginal_array(s)).max()))
        return err

    def contains(self, q: JointPmf, tol: float = DEFAULT_TOL) -> bool:
        return q.alphabet_sizes == self.base.alphabet_sizes and self.marginal_error(q) <= tol


@dataclass(frozen=True)
class MaxEntResult:
    q_star: JointPmf
    H: float
    iterations: int
    marginal_error: float


def _scale_cycle(q: np.ndarray, targets: list[tuple[tuple[int, ...], np.ndarray]]) -> np.ndarray:
    for drop, target in targets:
        cur = q.sum(axis=drop, keepdims=True) if drop else q
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cur > 0, target / cur, 0.0)
        q = q * ratio
    return q


def _targets(spec: QFamilySpec, ndim: int, batch: bool = False):
    out = []
    for s in spec.cover:
        drop = tuple(i for i in range(ndim) if i not in s)
        target = np.expand_dims(spec.base.marginal_array(s), drop) if drop else spec.base.probs
        if batch:
            target = target[None, ...]
            drop = tuple(d + 1 for d in drop)
        out.append((drop, target))
    return out


def max_entropy_over_family(spec: QFamilySpec, tol: float = DEFAULT_TOL, max_cycles: int = MAX_CYCLES) -> MaxEntResult:
    """Maximum-entropy member of ``Q(V)`` by iterative proportional scaling from uniform.

    Raises :class:`ConvergenceFailure` if the marginal L-infinity error is
    still ``>= tol`` after ``max_cycles`` sweeps over the cover.
    """
    p = spec.base
    q = np.full(p.alphabet_sizes, 1.0 / p.probs.size)
    targets = _targets(spec, p.m)
    err = spec.marginal_error(q)
    cycles = 0
    while err >= tol and targets:
        if cycles >= max_cycles:
            raise ConvergenceFailure(
                f"iterative scaling stopped at marginal error {err:.3e} after {cycles} cycles",
                achieved_error=err,
                iterations=cycles,
            )
        q = _scale_cycle(q, targets)
        cycles += 1
        err = spec.marginal_error(q)
    q_star = JointPmf.from_array(q, normalize=True)
    err = spec.marginal_error(q_star)
    return MaxEntResult(q_star, entropy(q_star, q_star.sensors), cycles, err)


@dataclass(frozen=True)
class SumRateSolution:
    R_star: float
    per_cover: tuple[tuple[Cover, MaxEntResult], ...]

    @property
    def argmax(self) -> tuple[Cover, MaxEntResult]:
        return max(self.per_cover, key=lambda item: item[1].H)


def solve_sum_rate_star(p: JointPmf, t: int, tol: float = DEFAULT_TOL) -> SumRateSolution:
    """Maximum entropy over every minimal cover, with per-cover details."""
    covers = enumerate_minimal_covers(p.m, t)
    per_cover = tuple((c, max_entropy_over_family(QFamilySpec(p, c), tol)) for c in covers)
    return SumRateSolution(max(r.H for _, r in per_cover), per_cover)


def sum_rate_star(p: JointPmf, t: int, tol: float = DEFAULT_TOL) -> float:
    """Minimum achievable variable-rate sum rate with at most ``t`` traitors."""
    return solve_sum_rate_star(p, t, tol).R_star


def fabrication_target(p: JointPmf, t: int, traitors: Iterable[int], tol: float = DEFAULT_TOL) -> tuple[Cover, MaxEntResult]:
    """Highest-entropy ``q`` the given traitors can simulate.

    The maximum runs over covers having the honest set as a member, so ``q``
    agrees with ``p`` on the honest sensors and lies in ``Q``.
    """
    honest = p.sensors - sensor_set(traitors)
    if len(honest) != p.m - t:
        raise InvalidArgument(f"need exactly t={t} traitors to fix the honest set, got {p.m - len(honest)}")
    best = None
    for cover in enumerate_minimal_covers(p.m, t) + [Cover.full(p.m, t)]:
        if honest not in cover:
            continue
        res = max_entropy_over_family(QFamilySpec(p, cover), tol)
        if best is None or res.H > best[1].H:
            best = (cover, res)
    return best


def closed_form_t1(p: JointPmf) -> float:
    """H(X_1..X_m) + max over pairs i != i' of I(X_i; X_i' | X_rest)."""
    if p.m < 2:
        raise InvalidArgument("the single-traitor formula needs m >= 2")
    best = max(
        conditional_mutual_information(p, {i}, {j}, p.sensors - {i, j})
        for i, j in itertools.combinations(range(p.m), 2)
    )
    return entropy(p, p.sensors) + best


def closed_form_tm1(p: JointPmf) -> float:
    """Sum of the single-sensor entropies."""
    return sum(entropy(p, {i}) for i in range(p.m))


def in_Q(q: JointPmf, p: JointPmf, t: int, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``q`` matches ``p`` on some family of ``(m - t)``-sets covering all sensors."""
    if q.alphabet_sizes != p.alphabet_sizes:
        return False
    matched = [
        frozenset(s)
        for s in itertools.combinations(range(p.m), p.m - t)
        if np.abs(q.marginal_array(s) - p.marginal_array(s)).max() <= tol
    ]
    return frozenset().union(*matched) == p.sensors if matched else False


@dataclass(frozen=True)
class OracleResult:
    H: float
    constraint_error: float
    q: JointPmf


def _batch_entropy(q: np.ndarray) -> np.ndarray:
    flat = q.reshape(q.shape[0], -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(flat > 1e-15, -flat * np.log2(flat), 0.0)
    return terms.sum(axis=1)


def _batch_project(q: np.ndarray, spec: QFamilySpec, cycles: int) -> np.ndarray:
    targets = _targets(spec, spec.base.m, batch=True)
    for _ in range(cycles):
        q = _scale_cycle(q, targets)
    return q


def _batch_error(q: np.ndarray, spec: QFamilySpec) -> np.ndarray:
    err = np.zeros(q.shape[0])
    for drop, target in _targets(spec, spec.base.m, batch=True):
        got = q.sum(axis=drop, keepdims=True) if drop else q
        err = np.maximum(err, np.abs(got - target).reshape(q.shape[0], -1).max(axis=1))
    return err


def brute_force_maxent(
    spec: QFamilySpec,
    samples: int = 20_000,
    refine_steps: int = 200,
    seed: int = 0,
    project_cycles: int = 200,
) -> OracleResult:
    """Lower bound on the family's maximum entropy by random search.

    Random Dirichlet pmfs are scaled onto the marginal constraints and the best
    one is then improved by multiplicative perturbation and re-projection.
    Meant as a test oracle for small alphabets (at most 64 joint cells).
    """
    p = spec.base
    if p.probs.size > 64:
        raise InvalidArgument("brute-force oracle is limited to 64 joint cells")
    rng = np.random.default_rng(seed)
    shape = p.alphabet_sizes
    q = rng.dirichlet(np.ones(p.probs.size), size=samples).reshape((samples, *shape))
    q = _batch_project(q, spec, project_cycles)
    ok = _batch_error(q, spec) <= 1e-6
    if not ok.any():
        ok[:] = True
    H = np.where(ok, _batch_entropy(q), -np.inf)
    best = q[int(np.argmax(H))]
    best_H = float(H.max())

    sigma = 0.5
    width = 256
    for _ in range(refine_steps):
        trial = best[None, ...] * np.exp(sigma * rng.standard_normal((width, *shape)))
        trial /= trial.reshape(width, -1).sum(axis=1).reshape((width,) + (1,) * len(shape))
        trial = _batch_project(trial, spec, project_cycles)
        err = _batch_error(trial, spec)
        h = np.where(err <= 1e-6, _batch_entropy(trial), -np.inf)
        j = int(np.argmax(h))
        if h[j] > best_H:
            best, best_H = trial[j], float(h[j])
        else:
            sigma = max(sigma * 0.7, 1e-4)
    q_best = JointPmf.from_array(best, normalize=True)
    return OracleResult(float(entropy(q_best, q_best.sensors)), spec.marginal_error(q_best), q_best)


def max_marginal_error(q: JointPmf, p: JointPmf, sets: Iterable[Iterable[int]]) -> float:
    return QFamilySpec(p, sets).marginal_error(q)


def log2_alphabet_bound(p: JointPmf) -> float:
    return sum(math.log2(a) for a in p.alphabet_sizes)
