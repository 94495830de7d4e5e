import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa1f.dynamics import (
    BernoulliConditioned,
    CylinderEvent,
    Delta,
    DynamicsError,
    Explicit,
    couple,
    eval_event,
    evolve,
    is_t_activated,
    sample_initial,
)
from fa1f.graph import build_window
from fa1f.harris import HarrisScheme, sample_scheme
from fa1f.stats import binomial_se


def test_delta_initial():
    g = build_window("path", 5)
    c = sample_initial(Delta(2), g, 0)
    assert c.tolist() == [0, 0, 1, 0, 0, 0]


def test_bernoulli_conditioned_mean():
    g = build_window("path", 99)
    cs = np.array([sample_initial(BernoulliConditioned(0.9), g, s) for s in range(200)])
    assert abs(cs.mean() - 0.9) <= 3 * binomial_se(0.9, cs.size)
    assert cs.any(axis=1).all()


def test_explicit_unchanged():
    g = build_window("path", 3)
    ones = np.ones(4, dtype=np.int8)
    assert sample_initial(Explicit(ones), g, 0).tolist() == [1, 1, 1, 1]


def test_empty_scheme_no_flips():
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 5.0, 0.5, {})
    tr = evolve(sample_initial(Delta(0), g, 0), s)
    assert tr.flip_times.size == 0
    assert tr.final().tolist() == [1, 0]


def test_hand_rule_facilitated_flip():
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 5.0, 0.5, {0: [(1.5, 0)]})
    tr = evolve(np.array([1, 1]), s)
    assert tr.state_at(1.5).tolist() == [0, 1]
    assert tr.state_at(1.4999).tolist() == [1, 1]


def test_hand_rule_blocked_flip():
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 5.0, 0.5, {0: [(1.5, 0)]})
    tr = evolve(np.array([1, 0]), s)
    assert tr.flip_times.size == 0
    assert tr.final().tolist() == [1, 0]


def test_neighbor_reads_left_limit():
    # z1 empties at t=1 and z0 tries to flip at t=1 as well: same instant is not facilitated
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 5.0, 0.5, {0: [(2.0, 0)], 1: [(1.0, 0)]})
    tr = evolve(np.array([1, 1]), s)
    assert tr.final().tolist() == [1, 0]


def test_state_at_contract():
    g = build_window("path", 6)
    s = sample_scheme(g, 4.0, 0.6, 8)
    init = sample_initial(BernoulliConditioned(0.6), g, 8)
    tr = evolve(init, s)
    assert tr.state_at(0.0).tolist() == init.tolist()
    if tr.flip_times.size:
        assert tr.state_at(np.nextafter(tr.flip_times[0], 0)).tolist() == init.tolist()
    fold = init.copy()
    for x, v in zip(tr.flip_sites, tr.flip_values):
        fold[x] = v
    assert tr.final().tolist() == fold.tolist()
    with pytest.raises(DynamicsError):
        tr.state_at(4.5)


def test_flips_are_facilitated():
    g = build_window("grid2d", 3)
    s = sample_scheme(g, 6.0, 0.7, 12)
    tr = evolve(sample_initial(BernoulliConditioned(0.7), g, 12), s)
    for t, x, v in zip(tr.flip_times, tr.flip_sites, tr.flip_values):
        assert any(tr.value_before(y, t) for y in g.neighbors(x))
        assert tr.value_before(x, t) != v


def test_events():
    c = np.array([0, 1, 1], dtype=np.int8)
    e = CylinderEvent.occupied(1)
    assert eval_event(c, e)
    assert not eval_event(c, CylinderEvent((0, 1)))
    pat = CylinderEvent.pattern((0, 2), (0, 1))
    assert eval_event(c, pat) ^ eval_event(c, pat.complement())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.3, 0.6, 0.9]))
def test_coupling_properties(seed, q):
    g = build_window("path", 8)
    s = sample_scheme(g, 3.0, q, seed)
    same = couple(BernoulliConditioned(q), BernoulliConditioned(q), s, seed, seed)
    assert np.array_equal(same.eta.flip_times, same.eta_tilde.flip_times)
    assert all(is_t_activated(same, x, 1.7) for x in range(g.n))
    explicit = couple(Delta(3), Explicit(sample_initial(Delta(3), g, 0)), s, seed, seed + 1)
    assert explicit.eta.dump() == explicit.eta_tilde.dump()
    ct = couple(Delta(0), BernoulliConditioned(q), s, seed, seed + 1)
    merged = None
    grid = np.linspace(0, 3.0, 61)
    for t in grid:
        a, b = ct.eta.state_at(t), ct.eta_tilde.state_at(t)
        for x in range(g.n):
            assert is_t_activated(ct, x, t) == (a[x] == b[x])
        if merged is not None:
            assert np.array_equal(a, b)
        elif np.array_equal(a, b):
            merged = t


def test_t_zero_mismatch_not_activated():
    g = build_window("path", 4)
    s = sample_scheme(g, 1.0, 0.5, 1)
    ct = couple(Delta(0), Explicit(np.array([0, 1, 1, 1, 1])), s, 0, 0)
    assert not is_t_activated(ct, 0, 0.0)
    assert not is_t_activated(ct, 2, 0.0)
