import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatialnet.core import DegreeSequence, is_graphical, pair_degree_factor, total_edges
from spatialnet.oracle import all_simple_graph_degree_sequences


def test_graphical_examples():
    assert is_graphical([2, 2, 2])
    assert not is_graphical([3, 2])
    assert not is_graphical([3, 3, 3, 1])
    assert (3, 3, 3, 1) not in all_simple_graph_degree_sequences(4)
    assert is_graphical([])
    assert is_graphical([0, 0])
    assert not is_graphical([-1, 1])


@pytest.mark.parametrize("n", range(1, 6))
def test_graphical_matches_enumeration(n):
    realisable = all_simple_graph_degree_sequences(n)
    for seq in itertools.product(range(n), repeat=n):
        assert is_graphical(seq) == (seq in realisable), seq


@given(st.lists(st.integers(0, 12), min_size=0, max_size=14), st.randoms())
def test_graphical_permutation_invariant(seq, rnd):
    shuffled = list(seq)
    rnd.shuffle(shuffled)
    assert is_graphical(seq) == is_graphical(shuffled)


def test_total_edges():
    assert total_edges([3, 3, 3, 3]) == 6
    assert total_edges([1, 1]) == 1
    assert total_edges([3] * 1000) == 1500
    with pytest.raises(ValueError):
        total_edges([3, 2])


def test_pair_degree_factor():
    assert pair_degree_factor(3, 3, 1500) == pytest.approx(0.9985, abs=1e-15)
    assert pair_degree_factor(1, 1, 1) == 0.75
    assert pair_degree_factor(2, 2, 1) == 0.0
    with pytest.raises(ValueError):
        pair_degree_factor(3, 2, 1)


@given(st.integers(1, 10), st.integers(1, 10), st.integers(25, 200))
def test_pair_degree_factor_symmetric_monotone(a, b, m):
    assert pair_degree_factor(a, b, m) == pair_degree_factor(b, a, m)
    if a < 10:
        assert pair_degree_factor(a + 1, b, m) <= pair_degree_factor(a, b, m)


def test_degree_sequence_fields():
    d = DegreeSequence((3, 2, 2, 1))
    assert (d.n, d.m, d.d_max) == (4, 4, 3)
    assert d.d_bar == 2
    with pytest.raises(ValueError):
        DegreeSequence((3, 2))
    with pytest.raises(ValueError):
        DegreeSequence((4, 2, 2, 2))
