import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialnet.geometry import (
    PointCloud,
    estimate_density_histogram,
    generate_poisson_disk,
    generate_uniform,
    torus_distance,
    torus_distance_density,
    torus_distance_matrix,
    torus_distance_row,
)


def min_pairwise(cloud: PointCloud) -> float:
    d = torus_distance_matrix(cloud.points)
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def test_uniform_contract():
    c = generate_uniform(1000, 2, 7)
    assert c.points.shape == (1000, 2)
    assert c.points.min() >= 0 and c.points.max() < 1
    assert np.array_equal(c.points, generate_uniform(1000, 2, 7).points)
    bound = 3 * (1 / math.sqrt(12)) / math.sqrt(1000)
    assert np.all(np.abs(c.points.mean(axis=0) - 0.5) < bound)


def test_torus_distance_examples():
    assert torus_distance([0.1], [0.9]) == pytest.approx(0.2)
    assert torus_distance([0.3, 0.4], [0.3, 0.4]) == 0.0
    assert torus_distance([0.0, 0.0], [0.5, 0.5]) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    with pytest.raises(ValueError):
        torus_distance([0.1, 0.2], [0.1])


def test_distance_row_and_matrix_agree():
    c = generate_uniform(40, 3, 1)
    mat = torus_distance_matrix(c.points)
    assert np.array_equal(mat, mat.T)
    for i in (0, 17, 39):
        assert np.allclose(torus_distance_row(c.points, i), mat[i], atol=1e-15)
        assert mat[i, 5] == pytest.approx(torus_distance(c.points[i], c.points[5]), abs=1e-15)


def test_triangle_inequality_and_symmetry():
    rng = np.random.default_rng(3)
    for dim in (1, 2, 3):
        x, y, z = rng.random((3, 10_000, dim))
        dist = lambda a, b: np.sqrt((np.minimum(np.abs(a - b), 1 - np.abs(a - b)) ** 2).sum(axis=1))
        assert np.all(dist(x, z) <= dist(x, y) + dist(y, z) + 1e-12)
        assert np.array_equal(dist(x, y), dist(y, x))
        assert dist(x, y).max() <= math.sqrt(dim) / 2 + 1e-12


def test_density_examples():
    assert torus_distance_density(0.3, 1) == 2.0
    assert torus_distance_density(0.1, 2) == pytest.approx(0.62831853, abs=1e-8)
    with pytest.raises(ValueError):
        torus_distance_density(0.6, 2)
    with pytest.raises(ValueError):
        torus_distance_density(0.1, 3)


@pytest.mark.parametrize("dim", [1, 2])
def test_empirical_distance_law_matches_density(dim):
    rng = np.random.default_rng(11 + dim)
    x, y = rng.random((2, 100_000, dim))
    d = np.minimum(np.abs(x - y), 1 - np.abs(x - y))
    r = np.sqrt((d ** 2).sum(axis=1))
    edges = np.linspace(0, 0.5, 21)
    counts, _ = np.histogram(r, bins=edges)
    emp = counts / r.size / np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    exact = np.array([torus_distance_density(m, dim) for m in mid])
    # bin average of 2*pi*r equals its midpoint value, so compare directly
    assert np.all(np.abs(emp - exact) < 0.05 * np.maximum(1, exact))


def test_poisson_disk_examples():
    c = generate_poisson_disk(0.25, 2, 1)
    assert min_pairwise(c) >= 0.25
    assert c.n <= 1 / (math.pi * 0.125 ** 2)
    assert np.array_equal(c.points, generate_poisson_disk(0.25, 2, 1).points)
    with pytest.raises(ValueError):
        generate_poisson_disk(0.5, 2, 1)
    with pytest.raises(ValueError):
        generate_poisson_disk(0.1, 4, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]), st.floats(0.06, 0.3))
def test_poisson_disk_min_distance(seed, dim, radius):
    c = generate_poisson_disk(radius, dim, seed)
    if c.n > 1:
        assert min_pairwise(c) >= radius


def test_poisson_disk_is_near_maximal():
    c = generate_poisson_disk(0.05, 2, 4)
    # packing bound above, and a maximal packing covers the torus with 2r-discs
    assert 1 / (math.pi * 0.05 ** 2) <= c.n <= 1 / (math.pi * 0.025 ** 2)


def test_histogram_density():
    h = estimate_density_histogram([0.5] * 10, 2, (0.0, 1.0))
    assert h.values[1] > 0.99 * 2
    assert float(np.sum(h.masses)) == pytest.approx(1.0, abs=1e-9)
    assert h.values.min() > 0

    x = np.random.default_rng(0).random(100_000)
    h = estimate_density_histogram(x, 10, (0.0, 1.0))
    assert np.all(np.abs(h.values - 1.0) < 0.05)
    assert float(np.sum(h.masses)) == pytest.approx(1.0, abs=1e-9)
    assert h.cdf(1.0) == pytest.approx(1.0)
    assert h.ppf(h.cdf(0.37)) == pytest.approx(0.37)

    with pytest.raises(ValueError):
        estimate_density_histogram([], 4, (0, 1))
