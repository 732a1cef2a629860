"""Slepian-Wolf polytopes and the fixed-rate regions built from them.

``R_k`` is the set of rate vectors whose restriction to every ``k``-subset of
sensors lies in the Slepian-Wolf region of that subset.  Deterministic
fixed-rate coding with ``t`` traitors achieves ``R_max(1, m - 2t)``; randomized
fixed-rate coding achieves ``R_(m - t)``.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidArgument, NumericFailure
from .info_core import JointPmf, conditional_entropy, conditional_mutual_information, entropy
from .maxent import closed_form_t1

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class RatePoint:
    """Per-sensor rates in bits/symbol."""

    rates: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(x) for x in self.rates)
        if not all(np.isfinite(r)) or any(x < 0 for x in r):
            raise InvalidArgument(f"rates must be finite and nonnegative, got {r}")
        object.__setattr__(self, "rates", r)

    def __len__(self):
        return len(self.rates)

    def __getitem__(self, i):
        return self.rates[i]

    @property
    def total(self) -> float:
        return sum(self.rates)


@dataclass(frozen=True)
class Constraint:
    """``sum_{i in u} R_i >= H(X_u | X_{s - u})``."""

    s: frozenset[int]
    u: frozenset[int]
    bound: float

    def slack(self, rates: Sequence[float]) -> float:
        return sum(rates[i] for i in self.u) - self.bound

    def describe(self) -> dict:
        return {
            "subset": [i + 1 for i in sorted(self.s)],
            "u": [i + 1 for i in sorted(self.u)],
            "bound": self.bound,
        }


def _rates(rates, m: int) -> tuple[float, ...]:
    r = rates.rates if isinstance(rates, RatePoint) else tuple(float(x) for x in rates)
    if len(r) != m:
        raise InvalidArgument(f"expected {m} rates, got {len(r)}")
    return r


def sw_constraints(p: JointPmf, s: Iterable[int]) -> list[Constraint]:
    s = p.check_set(s)
    out = []
    for size in range(1, len(s) + 1):
        for u in itertools.combinations(sorted(s), size):
            u = frozenset(u)
            out.append(Constraint(s, u, conditional_entropy(p, u, s - u)))
    return out


def sw_region_check(rates, p: JointPmf, s: Iterable[int], tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether the rates of the sensors in ``s`` lie in the Slepian-Wolf region of ``X_s``.

    ``rates`` is the full m-vector; only entries in ``s`` are inspected.
    """
    r = _rates(rates, p.m)
    return all(c.slack(r) >= -tol for c in sw_constraints(p, s))


def region_constraints(p: JointPmf, k: int) -> list[Constraint]:
    if not 1 <= k <= p.m:
        raise InvalidArgument(f"k={k} out of range 1..{p.m}")
    out = []
    for s in itertools.combinations(range(p.m), k):
        out.extend(sw_constraints(p, s))
    return out


def first_violation(rates, p: JointPmf, k: int, tol: float = MEMBERSHIP_TOL) -> Constraint | None:
    r = _rates(rates, p.m)
    for c in region_constraints(p, k):
        if c.slack(r) < -tol:
            return c
    return None


def in_Rk(rates, p: JointPmf, k: int, tol: float = MEMBERSHIP_TOL) -> bool:
    return first_violation(rates, p, k, tol) is None


def dfr_k(m: int, t: int) -> int:
    _check_t(m, t)
    return max(1, m - 2 * t)


def rfr_k(m: int, t: int) -> int:
    _check_t(m, t)
    return m - t


def _check_t(m: int, t: int):
    if not 0 <= t <= m - 1:
        raise InvalidArgument(f"t={t} out of range for m={m}")


def dfr_check(rates, p: JointPmf, t: int) -> bool:
    """Deterministic fixed-rate achievability."""
    return in_Rk(rates, p, dfr_k(p.m, t))


def rfr_check(rates, p: JointPmf, t: int) -> bool:
    """Randomized fixed-rate achievability."""
    return in_Rk(rates, p, rfr_k(p.m, t))


def min_sum_rate_point(p: JointPmf, k: int) -> tuple[float, RatePoint]:
    """Smallest total rate in ``R_k`` and a rate vector attaining it (by LP)."""
    cons = region_constraints(p, k)
    A = np.zeros((len(cons), p.m))
    b = np.zeros(len(cons))
    for row, c in enumerate(cons):
        A[row, sorted(c.u)] = -1.0
        b[row] = -c.bound
    res = linprog(np.ones(p.m), A_ub=A, b_ub=b, bounds=[(0, None)] * p.m, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise NumericFailure(f"LP solver failed: {res.message}")
    x = np.maximum(res.x, 0.0)
    return float(x.sum()), RatePoint(tuple(x))


def min_sum_rate(p: JointPmf, k: int) -> float:
    return min_sum_rate_point(p, k)[0]


def pairwise_half_sum(p: JointPmf) -> float:
    """Half the sum of all pairwise joint entropies (m = 3 lower bound on R_2 sum rates)."""
    return 0.5 * sum(entropy(p, pair) for pair in itertools.combinations(range(p.m), 2))


@dataclass(frozen=True)
class GapReport:
    variable_rate: float
    fixed_rate_lower_bound: float
    gap: float
    half_sum_bound: float
    argmax_pair: tuple[int, int]
    cmi: float
    outer_mi: float

    @property
    def condition_holds(self) -> bool:
        """I(X_a X_b; X_c) > I(X_a; X_b | X_c) for the pair (a, b) maximizing the CMI."""
        return self.outer_mi > self.cmi

    def to_dict(self) -> dict:
        return {
            "variable_rate": self.variable_rate,
            "fixed_rate_lower_bound": self.fixed_rate_lower_bound,
            "gap": self.gap,
            "half_sum_bound": self.half_sum_bound,
            "argmax_pair": [i + 1 for i in self.argmax_pair],
            "max_cmi": self.cmi,
            "outer_mi": self.outer_mi,
            "condition_holds": self.condition_holds,
        }


def gap_demo(p: JointPmf) -> GapReport:
    """Variable-rate sum rate vs the randomized fixed-rate minimum, m = 3 and t = 1."""
    if p.m != 3:
        raise InvalidArgument("the gap demonstration is defined for m = 3")
    variable = closed_form_t1(p)
    fixed = min_sum_rate(p, 2)
    pairs = list(itertools.combinations(range(3), 2))
    cmis = [conditional_mutual_information(p, {a}, {b}, {3 - a - b}) for a, b in pairs]
    j = int(np.argmax(cmis))
    a, b = pairs[j]
    c = 3 - a - b
    outer = conditional_mutual_information(p, {a, b}, {c})
    return GapReport(variable, fixed, fixed - variable, pairwise_half_sum(p), (a, b), cmis[j], outer)
