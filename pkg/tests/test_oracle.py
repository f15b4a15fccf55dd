import itertools
import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from spatialnet.core import is_graphical
from spatialnet.distributions import make_truncated_normal, make_uniform, target_as_reference
from spatialnet.oracle import (
    OracleTooLarge,
    all_simple_graph_degree_sequences,
    conditional_weight_law_check,
    enumerate_run_distribution,
    first_step_distribution,
    matching_distribution,
)
from spatialnet.sampler import run_batch

from conftest import constant_weights

W4 = np.array([[0, .1, .2, .3], [.1, 0, .25, .15], [.2, .25, 0, .05], [.3, .15, .05, 0]])


def _skewed():
    t = make_truncated_normal(0.15, 0.08, (0.0, 0.5))
    return t, target_as_reference(make_uniform(0.0, 0.5))


def test_perfect_matchings_one_third(flat):
    t, g = flat
    dist = enumerate_run_distribution([1, 1, 1, 1], constant_weights(4), t, g)
    assert sum(dist.values()) == 1
    assert len(dist) == 6
    matchings = matching_distribution(dist)
    assert set(matchings.values()) == {Fraction(1, 3)}


def test_k4_certain(flat):
    t, g = flat
    dist = enumerate_run_distribution([3, 3, 3, 3], constant_weights(4), t, g)
    assert sum(dist.values()) == 1
    assert all(len(seq) == 6 for seq in dist)
    assert matching_distribution(dist) == {frozenset(itertools.combinations(range(4), 2)): 1}


def test_first_step_marginals(flat):
    t, g = flat
    p = first_step_distribution([1, 1, 2], constant_weights(3), t, g)
    assert p == {(0, 1): Fraction(7, 31), (0, 2): Fraction(12, 31), (1, 2): Fraction(12, 31)}


def test_failure_branches_kept():
    # (2,2,1,1) on a path-like instance where some orders strand two adjacent stubs
    t, g = _skewed()
    dist = enumerate_run_distribution([2, 2, 1, 1], W4, t, g)
    assert sum(dist.values()) == 1
    failed = {k: v for k, v in dist.items() if len(k) < 3}
    assert failed and all(v > 0 for v in failed.values())


def test_guard():
    t, g = make_uniform(0, 1), target_as_reference(make_uniform(0, 1))
    with pytest.raises(OracleTooLarge):
        enumerate_run_distribution([1] * 6, constant_weights(6), t, g)
    with pytest.raises(OracleTooLarge):
        enumerate_run_distribution([4] * 5, constant_weights(5), t, g)


def test_simple_graph_degree_sequences_match_graphicality():
    for n in range(1, 6):
        seen = all_simple_graph_degree_sequences(n)
        for d in itertools.product(range(n), repeat=n):
            assert (d in seen) == is_graphical(d)


def test_sampler_matches_enumeration_chi_square():
    """Law of the whole ordered edge sequence, sampler against exact enumeration."""
    t, g = _skewed()
    degrees = [2, 2, 1, 1]
    dist = enumerate_run_distribution(degrees, W4, t, g)
    counts = Counter(tuple(e[:2] for e in s.edges)
                     for s in run_batch(degrees, W4, t, g, runs=100_000, seed=123))
    assert set(counts) <= set(dist)
    keys = sorted(dist)
    observed = np.array([counts.get(k, 0) for k in keys])
    expected = np.array([float(dist[k]) for k in keys]) * observed.sum()
    assert expected.min() >= 5
    _, p = stats.chisquare(observed, expected)
    assert p > 1e-3


def test_conditional_law_example():
    atoms, by_enum, by_formula = conditional_weight_law_check(2, (1, 1), [1, 2], 0)
    assert list(atoms) == [1.0, 2.0]
    assert by_enum[0] == pytest.approx(7 / 12, abs=1e-15)
    assert np.max(np.abs(by_enum - by_formula)) <= 1e-12


def test_conditional_law_random_configurations():
    rng = random.Random(77)
    checked = 0
    while checked < 50:
        n = rng.randint(1, 4)
        size = rng.randint(1, 4)
        values = rng.sample([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0], size)
        if all(v == 0 for v in values):
            values[0] = 1.0
        probs = [rng.random() + 0.05 for _ in values]
        total = sum(probs)
        law = [(v, p / total) for v, p in zip(values, probs)]
        law[-1] = (law[-1][0], 1.0 - sum(p for _, p in law[:-1]))
        c = [rng.uniform(0.2, 3.0) for _ in range(n)]
        k = rng.randrange(n)
        try:
            _, a, b = conditional_weight_law_check(n, c, law, k)
        except ValueError as exc:
            # n = 1 (I is always k) or every weight can vanish at once
            assert n == 1 or 0.0 in values, exc
            continue
        checked += 1
        assert np.max(np.abs(a - b)) <= 1e-12
        assert a.sum() == pytest.approx(1.0, abs=1e-12)
    assert checked == 50


def test_conditional_law_rejects_bad_input():
    with pytest.raises(ValueError):
        conditional_weight_law_check(2, (1, 1), [(1.0, 0.5), (2.0, 0.6)], 0)
    with pytest.raises(ValueError):
        conditional_weight_law_check(2, (1, -1), [1, 2], 0)
    with pytest.raises(ValueError):
        conditional_weight_law_check(2, (1, 1), [0.0, 0.0], 0)
    with pytest.raises(ValueError):
        conditional_weight_law_check(2, (1, 1), [1, 2], 2)
    with pytest.raises(ValueError, match="null"):
        conditional_weight_law_check(1, (1,), [1, 2], 0)
