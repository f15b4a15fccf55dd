import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialnet import sampler as sampler_mod
from spatialnet.core import DegreeSequence
from spatialnet.distributions import make_truncated_normal, make_uniform, target_as_reference, torus_reference
from spatialnet.geometry import generate_uniform
from spatialnet.sampler import (
    COMPLETE,
    EARLY_STOP,
    FAILURE,
    GraphSample,
    WeightTable,
    default_reference,
    initialize,
    run,
    run_batch,
    target_steps,
    verify_degrees,
)

from conftest import constant_weights

K4 = {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}


def test_initial_Z(flat):
    t, g = flat
    assert initialize([3, 3, 3, 3], constant_weights(4), t, g).Z == pytest.approx(33.75, abs=1e-12)
    assert initialize([1, 1], constant_weights(2), t, g).Z == pytest.approx(0.75, abs=1e-15)


def test_initialize_errors(flat):
    t, g = flat
    with pytest.raises(ValueError, match="graphical"):
        initialize([3, 3, 1, 1], constant_weights(4), t, g)
    with pytest.raises(ValueError):
        initialize([1, 1], constant_weights(3), t, g)
    # K_{2,9}: the two hubs give 9 * 9 = 81 > 4m = 72
    k29 = [9, 9] + [2] * 9
    with pytest.raises(ValueError, match="negative"):
        initialize(k29, constant_weights(11), t, g)
    s = initialize(k29, constant_weights(11), t, g, degree_correction=False)
    assert s.Z > 0


def test_all_ratios_zero_exhausts():
    t = make_uniform(0.6, 0.7)
    g = target_as_reference(make_uniform(0.0, 1.0))
    s = initialize([1, 1], constant_weights(2, 0.2), t, g)
    assert s.Z == 0
    assert s.step(np.random.default_rng(0)) is None
    out = run([1, 1], constant_weights(2, 0.2), t, g)
    assert out.status == FAILURE and out.k_final == 0


def test_step_probabilities_exact(flat):
    t, g = flat
    s = initialize([1, 1, 2], constant_weights(3), t, g)
    p = s.pair_probabilities()
    assert p[(0, 1)] == pytest.approx(0.875 / 3.875, abs=1e-15)
    assert p[(0, 2)] == pytest.approx(1.5 / 3.875, abs=1e-15)
    assert p[(1, 2)] == pytest.approx(1.5 / 3.875, abs=1e-15)
    assert round(p[(0, 1)], 5) == 0.22581 and round(p[(0, 2)], 5) == 0.38710


def test_forced_move(flat):
    t, g = flat
    s = initialize([1, 1, 2], constant_weights(3), t, g)
    s._place(0, 2)
    assert s.pair_probabilities() == {(1, 2): 1.0}
    assert s.step(np.random.default_rng(0))[:2] == (1, 2)


@pytest.mark.parametrize("seed", range(25))
def test_k4_every_seed(flat, seed):
    t, g = flat
    out = run([3, 3, 3, 3], constant_weights(4), t, g, seed=seed)
    assert out.status == COMPLETE
    assert {(i, j) for i, j, _ in out.edges} == K4
    assert verify_degrees(out, [3, 3, 3, 3])


def test_early_stop(flat):
    t, g = flat
    out = run([3, 3, 3, 3], constant_weights(4), t, g, gamma=0.5, seed=1)
    assert out.status == EARLY_STOP and out.k_final == 3
    assert not verify_degrees(out, [3, 3, 3, 3])
    assert target_steps(0.7, 10) == 7
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            target_steps(bad, 10)


def test_verify_degrees_edge_removed(flat):
    t, g = flat
    out = run([3, 3, 3, 3], constant_weights(4), t, g, seed=0)
    broken = GraphSample(edges=out.edges[:-1], status=COMPLETE, gamma=1.0, seed=0, n=4, m=6,
                         trace=out.trace, max_z_drift=0.0)
    assert not verify_degrees(broken, [3, 3, 3, 3])


def _check_run(sample, degrees):
    pairs = [(i, j) for i, j, _ in sample.edges]
    assert all(i < j for i, j in pairs)
    assert len(set(pairs)) == len(pairs)
    realized = sample.realized_degrees()
    assert np.all(realized <= np.asarray(degrees))
    # degree conservation along the trace
    assert realized.sum() == 2 * sample.k_final
    assert list(sample.trace.k) == list(range(1, sample.k_final + 1))
    if sample.status == COMPLETE:
        assert verify_degrees(sample, degrees)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(6, 30), st.integers(1, 4))
def test_random_runs_simple_and_conserving(seed, n, k):
    if n * k % 2:
        n += 1
    cloud = generate_uniform(n, 2, seed)
    t = make_truncated_normal(0.2, 0.05, (0.0, 0.5))
    out = run(DegreeSequence.regular(n, k), WeightTable.from_points(cloud), t, torus_reference(2), seed=seed)
    _check_run(out, [k] * n)
    if out.status == FAILURE:
        assert out.k_final < out.m


def test_z_drift_and_determinism():
    cloud = generate_uniform(1000, 2, 11)
    w = WeightTable.from_points(cloud)
    t = make_truncated_normal(0.1, 0.015, (0.0, 0.5))
    g = default_reference(w, t)
    a = run(DegreeSequence.regular(1000, 3), w, t, g, seed=3)
    b = run(DegreeSequence.regular(1000, 3), w, t, g, seed=3)
    assert a.max_z_drift < 1e-6
    assert a.edges == b.edges and a.status == b.status
    assert list(a.trace.rows()) == list(b.trace.rows())
    _check_run(a, [3] * 1000)


def test_early_stop_is_prefix_of_full_run():
    cloud = generate_uniform(200, 2, 4)
    w = WeightTable.from_points(cloud)
    t = make_truncated_normal(0.2, 0.03, (0.0, 0.5))
    g = torus_reference(2)
    full = run(DegreeSequence.regular(200, 3), w, t, g, seed=8)
    part = run(DegreeSequence.regular(200, 3), w, t, g, gamma=0.4, seed=8)
    assert part.status == EARLY_STOP and part.k_final == 120
    assert part.edges == full.edges[:120]


def test_degree_zero_vertices_dropped(flat, caplog):
    t, g = flat
    out = run([0, 1, 1, 0, 2], constant_weights(5), t, g, seed=0)
    assert "degree 0" in caplog.text
    assert out.status == COMPLETE and out.n == 5
    assert {(i, j) for i, j, _ in out.edges} == {(1, 4), (2, 4)}
    assert verify_degrees(out, [0, 1, 1, 0, 2])


def test_lazy_path_matches_materialized(monkeypatch):
    cloud = generate_uniform(300, 2, 21)
    t = make_truncated_normal(0.15, 0.03, (0.0, 0.5))
    g = torus_reference(2)
    eager = run(DegreeSequence.regular(300, 3), WeightTable.from_points(cloud), t, g, seed=2)
    monkeypatch.setattr(sampler_mod, "MATERIALIZE_MAX", 0)
    w = WeightTable.from_points(cloud)
    assert not w.materializable
    lazy = run(DegreeSequence.regular(300, 3), w, t, g, seed=2)
    assert [e[:2] for e in lazy.edges] == [e[:2] for e in eager.edges]
    assert np.allclose(lazy.lengths, eager.lengths, rtol=0, atol=1e-15)


def test_log_domain_fallback():
    # two far vertex pairs whose weight underflows in linear scale
    r = np.array([[0, 0.04, 0.6, 0.6],
                  [0.04, 0, 0.6, 0.6],
                  [0.6, 0.6, 0, 0.45],
                  [0.6, 0.6, 0.45, 0]])
    t = make_truncated_normal(0.04, 0.006, (0.0, 0.7))
    g = target_as_reference(make_uniform(0.0, 0.7))
    assert t.pdf(0.45) == 0.0
    out = run([1, 1, 1, 1], r, t, g, seed=0)
    assert out.status == COMPLETE
    assert {(i, j) for i, j, _ in out.edges} == {(0, 1), (2, 3)}


def test_weight_table_validation():
    with pytest.raises(ValueError):
        WeightTable.from_matrix([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        WeightTable.from_matrix([[0, -1], [-1, 0]])
    with pytest.raises(ValueError):
        WeightTable.from_matrix(np.zeros((2, 3)))
    w = WeightTable.from_matrix([[0, 0.3], [0.3, 0]])
    assert w.r(0, 1) == 0.3
    with pytest.raises(ValueError):
        w.r(1, 1)


def test_run_batch_matches_run(flat):
    t, g = flat
    w = np.array([[0, .1, .2, .3], [.1, 0, .25, .15], [.2, .25, 0, .05], [.3, .15, .05, 0]])
    batch = list(run_batch([2, 2, 1, 1], w, t, g, runs=50, seed=7))
    assert batch[0].edges == run([2, 2, 1, 1], w, t, g, seed=7).edges
    again = list(run_batch([2, 2, 1, 1], w, t, g, runs=50, seed=7))
    assert [b.edges for b in batch] == [b.edges for b in again]
    assert [b.seed for b in batch[:2]] == [(7, 0), (7, 1)]
    for b in batch:
        _check_run(b, [2, 2, 1, 1])
    with pytest.raises(ValueError):
        next(run_batch([1, 1], constant_weights(2), t, g, runs=-1))
