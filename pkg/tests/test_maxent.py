import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from byzcode.errors import ConvergenceFailure, InvalidArgument
from byzcode.info_core import JointPmf, entropy, marginalize
from byzcode.maxent import (
    Cover,
    QFamilySpec,
    brute_force_maxent,
    closed_form_t1,
    closed_form_tm1,
    enumerate_minimal_covers,
    fabrication_target,
    in_Q,
    max_entropy_over_family,
    solve_sum_rate_star,
    sum_rate_star,
)

from conftest import random_pmf


def oracle_minimal_covers(m, t):
    """Every subfamily of (m-t)-sets, filtered by the definition."""
    full = frozenset(range(m))
    cands = [frozenset(c) for c in itertools.combinations(range(m), m - t)]
    out = set()
    for mask in range(1, 1 << len(cands)):
        fam = [c for j, c in enumerate(cands) if mask >> j & 1]
        if frozenset().union(*fam) != full:
            continue
        if all(frozenset().union(*(fam[:j] + fam[j + 1:])) != full for j in range(len(fam))) or len(fam) == 1:
            out.add(frozenset(fam))
    return out


def slsqp_maxent(p: JointPmf, cover) -> float:
    """Direct constrained optimisation of the entropy, independent of scaling."""
    sizes = p.alphabet_sizes
    n = int(np.prod(sizes))
    rows, rhs = [], []
    cells = list(np.ndindex(*sizes))
    for s in cover:
        s = sorted(s)
        target = p.marginal_array(s)
        for sub in np.ndindex(*target.shape):
            rows.append([1.0 if tuple(c[i] for i in s) == sub else 0.0 for c in cells])
            rhs.append(target[sub])
    A, b = np.array(rows), np.array(rhs)
    # overlapping members repeat constraints; keep a linearly independent subset
    keep = []
    for j in range(len(A)):
        if np.linalg.matrix_rank(A[keep + [j]]) == len(keep) + 1:
            keep.append(j)
    A, b = A[keep], b[keep]

    def neg_h(q):
        q = np.clip(q, 1e-300, None)
        return float(np.sum(q * np.log2(q)))

    def grad(q):
        return np.log2(np.clip(q, 1e-300, None)) + 1 / math.log(2)

    res = minimize(neg_h, np.full(n, 1.0 / n), jac=grad, method="SLSQP",
                   constraints=[{"type": "eq", "fun": lambda q: A @ q - b, "jac": lambda q: A}],
                   bounds=[(0, 1)] * n, options={"ftol": 1e-14, "maxiter": 1000})
    return -res.fun


@pytest.mark.parametrize("m,t", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_minimal_covers_match_definition(m, t):
    got = {frozenset(c.sets) for c in enumerate_minimal_covers(m, t)}
    assert got == oracle_minimal_covers(m, t)


def test_minimal_cover_counts():
    assert len(enumerate_minimal_covers(3, 1)) == 3
    assert len(enumerate_minimal_covers(5, 0)) == 1
    assert len(enumerate_minimal_covers(6, 3)) == 325


def test_cover_validation_and_label():
    c = Cover(3, 1, [{0, 2}, {0, 1}])
    assert c.label() == "1-2|1-3"
    assert c.union == frozenset({0, 1, 2})
    with pytest.raises(InvalidArgument):
        Cover(3, 1, [{0}])
    with pytest.raises(InvalidArgument):
        Cover(3, 1, [{0, 1}, {1, 0}])


@pytest.mark.parametrize("seed", range(6))
def test_ipf_matches_slsqp(seed):
    rng = np.random.default_rng(seed)
    p = random_pmf(rng, (2, 2, 2), floor=0.01)
    cover = [{0, 1}, {1, 2}] if seed % 2 else [{0, 2}, {1, 2}]
    res = max_entropy_over_family(QFamilySpec(p, cover))
    assert res.marginal_error <= 1e-9
    assert res.H == pytest.approx(slsqp_maxent(p, cover), abs=1e-5)


def test_chain_cover_gives_markov_entropy(chain3):
    # matching (1,2) and (2,3) is maximised by the Markov chain through X2
    res = max_entropy_over_family(QFamilySpec(chain3, [{0, 1}, {1, 2}]))
    expected = entropy(chain3, {0, 1}) + entropy(chain3, {1, 2}) - entropy(chain3, {1})
    assert res.H == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_endpoints_and_t1_formula(seed):
    rng = np.random.default_rng(100 + seed)
    p = random_pmf(rng, (2, 3, 2))
    assert sum_rate_star(p, 0) == pytest.approx(entropy(p, {0, 1, 2}), abs=1e-9)
    assert sum_rate_star(p, 2) == pytest.approx(closed_form_tm1(p), abs=1e-9)
    assert sum_rate_star(p, 1) == pytest.approx(closed_form_t1(p), abs=1e-6)


def test_maxent_is_at_least_entropy_of_p():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = random_pmf(rng, (2, 2, 2, 2))
        for t in range(4):
            assert sum_rate_star(p, t) >= entropy(p, range(4)) - 1e-9


def test_brute_force_oracle_never_beats_ipf():
    rng = np.random.default_rng(11)
    p = random_pmf(rng, (2, 2, 3))
    spec = QFamilySpec(p, [{0, 1}, {1, 2}])
    oracle = brute_force_maxent(spec, samples=4000, refine_steps=100, seed=1)
    res = max_entropy_over_family(spec)
    assert oracle.constraint_error <= 1e-6
    assert res.H >= oracle.H - 1e-6
    assert res.H - oracle.H < 0.05


def test_convergence_failure_reports_progress():
    rng = np.random.default_rng(2)
    p = random_pmf(rng, (2, 2, 2), alpha=0.3)
    with pytest.raises(ConvergenceFailure) as info:
        max_entropy_over_family(QFamilySpec(p, [{0, 1}, {1, 2}, {0, 2}]), tol=1e-15, max_cycles=2)
    assert info.value.iterations == 2
    assert info.value.achieved_error > 0


def test_in_Q_and_fabrication_target(chain3):
    sol = solve_sum_rate_star(chain3, 1)
    cover, best = sol.argmax
    assert in_Q(best.q_star, chain3, 1)
    assert not in_Q(JointPmf.uniform((2, 2, 2)), chain3, 1)
    for traitor in range(3):
        honest = frozenset(range(3)) - {traitor}
        fcover, res = fabrication_target(chain3, 1, {traitor})
        assert honest in fcover
        assert marginalize(res.q_star, honest).allclose(marginalize(chain3, honest), atol=1e-9)
        assert res.H <= sol.R_star + 1e-9
    # the overall maximiser is reachable by a traitor outside one of its members
    member = next(iter(cover))
    t_star = (frozenset(range(3)) - member)
    assert fabrication_target(chain3, 1, t_star)[1].H == pytest.approx(sol.R_star, abs=1e-9)
