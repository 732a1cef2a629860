import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzcode.errors import FormatError, InvalidArgument, ZeroProbabilityContext
from byzcode.info_core import (
    JointPmf,
    SequenceBlock,
    condition,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    marginalize,
    mutual_information,
    sample_block,
)

from conftest import random_pmf


def oracle_entropy(probs) -> float:
    """Plain loop over cells."""
    return -sum(v * math.log2(v) for v in np.asarray(probs).ravel() if v > 0)


def oracle_marginal(p: JointPmf, s) -> np.ndarray:
    keep = sorted(s)
    out = np.zeros([p.alphabet_sizes[i] for i in keep])
    for cell in np.ndindex(*p.alphabet_sizes):
        out[tuple(cell[i] for i in keep)] += p.probs[cell]
    return out


pmfs = st.builds(
    lambda seed, sizes: random_pmf(np.random.default_rng(seed), sizes, alpha=0.7),
    st.integers(0, 2**32 - 1),
    st.lists(st.integers(1, 3), min_size=1, max_size=4).map(tuple),
)


def test_uniform_pair_has_two_bits():
    assert entropy(JointPmf.uniform((2, 2)), {0, 1}) == pytest.approx(2.0, abs=1e-12)


def test_point_mass_has_zero_entropy():
    p = JointPmf.point_mass((2, 3, 2), (1, 2, 0))
    for s in [{0}, {1, 2}, {0, 1, 2}]:
        assert entropy(p, s) == 0.0


def test_symmetric_pair_entropy(pair):
    assert entropy(pair, {0, 1}) == pytest.approx(1.721928094887362, abs=1e-12)
    assert entropy(pair, {0, 1}) == pytest.approx(oracle_entropy([0.4, 0.1, 0.1, 0.4]), abs=1e-14)
    assert conditional_entropy(pair, {1}, {0}) == pytest.approx(oracle_entropy([0.8, 0.2]), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(pmfs)
def test_marginals_match_loop_oracle(p):
    for i in range(p.m):
        assert np.allclose(p.marginal_array({i}), oracle_marginal(p, {i}), atol=1e-14)
    full = set(range(p.m))
    assert entropy(p, full) == pytest.approx(oracle_entropy(p.probs), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(pmfs)
def test_chain_rule_and_bounds(p):
    full = frozenset(range(p.m))
    h = entropy(p, full)
    acc = sum(conditional_entropy(p, {i}, set(range(i))) for i in range(p.m))
    assert acc == pytest.approx(h, abs=1e-10)
    assert 0 <= h <= sum(math.log2(a) for a in p.alphabet_sizes) + 1e-12
    for i in range(p.m):
        assert entropy(p, {i}) <= h + 1e-12


@settings(max_examples=60, deadline=None)
@given(pmfs.filter(lambda p: p.m >= 3))
def test_cmi_nonnegative_and_symmetric(p):
    i1 = conditional_mutual_information(p, {0}, {1}, {2})
    i2 = conditional_mutual_information(p, {1}, {0}, {2})
    assert i1 >= -1e-12
    assert i1 == pytest.approx(i2, abs=1e-12)
    assert mutual_information(p, {0}, {1}) >= -1e-12


def test_independent_product_has_zero_mi():
    a = JointPmf.from_array(np.array([0.3, 0.7]))
    b = JointPmf.from_array(np.array([0.2, 0.5, 0.3]))
    q = JointPmf.product(a, b)
    assert mutual_information(q, {0}, {1}) == pytest.approx(0.0, abs=1e-12)
    assert entropy(q, {0, 1}) == pytest.approx(oracle_entropy([0.3, 0.7]) + oracle_entropy([0.2, 0.5, 0.3]))


def test_marginalize_and_condition(pair):
    assert np.allclose(marginalize(pair, {1}).probs, [0.5, 0.5])
    c = condition(pair, {1}, {0: 0})
    assert np.allclose(c.probs, [0.8, 0.2])


def test_condition_on_impossible_context_raises():
    p = JointPmf.from_array(np.array([[0.5, 0.0], [0.0, 0.5]]))
    p3 = JointPmf.product(p, JointPmf.point_mass((2,), (0,)))
    with pytest.raises(ZeroProbabilityContext):
        condition(p3, {0}, {2: 1})


@pytest.mark.parametrize(
    "arr",
    [np.array([0.5, 0.6]), np.array([-0.1, 1.1]), np.array([np.nan, 1.0]), np.zeros((0,))],
)
def test_invalid_pmfs_rejected(arr):
    with pytest.raises(InvalidArgument):
        JointPmf.from_array(arr)


def test_bad_sensor_sets_rejected(pair):
    with pytest.raises(InvalidArgument):
        entropy(pair, {2})


def test_json_round_trip(pair):
    d = pair.to_dict()
    assert d["schema"] == 1
    assert d["probs"] == [0.4, 0.1, 0.1, 0.4]
    assert JointPmf.from_dict(d).allclose(pair, atol=0)


@pytest.mark.parametrize(
    "data",
    [
        {"alphabet_sizes": [2], "probs": [0.5, 0.5], "schema": 2},
        {"alphabet_sizes": [2]},
        {"alphabet_sizes": [2], "probs": "x"},
        {"alphabet_sizes": [3], "probs": [0.5, 0.5]},
        [1, 2],
    ],
)
def test_json_errors_are_format_errors(data):
    with pytest.raises(FormatError):
        JointPmf.from_dict(data)


def test_sample_block_is_seeded_and_follows_p(pair):
    a = sample_block(pair, 50_000, seed=3)
    b = sample_block(pair, 50_000, seed=3)
    assert a == b
    x = a.symbols
    freq = np.mean((x[0] == 0) & (x[1] == 0))
    assert freq == pytest.approx(0.4, abs=0.01)
    assert a.m == 2 and a.k == 50_000


def test_sequence_block_validation():
    with pytest.raises(InvalidArgument):
        SequenceBlock(np.array([[0, 2]]), (2,))
    with pytest.raises(InvalidArgument):
        SequenceBlock(np.zeros((1, 0), dtype=int), (2,))
