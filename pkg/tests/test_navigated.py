import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa1f.dynamics import BernoulliConditioned, Delta, evolve, sample_initial
from fa1f.engine import navigate_batch
from fa1f.graph import build_window
from fa1f.harris import HarrisScheme, sample_scheme
from fa1f.navigated import (
    NavigationError,
    hitting_bound,
    hitting_stats,
    navigate,
    navigation_event,
    navigation_probability,
)


def test_start_is_target():
    g = build_window("path", 3)
    s = sample_scheme(g, 2.0, 0.7, 1)
    tr = evolve(np.ones(4, dtype=np.int8), s)
    p = navigate(tr, 2, 2, 0.5)
    assert p.arrival == 0.5 and p.jumps == ()


def test_empty_scheme_constant():
    g = build_window("path", 3)
    s = HarrisScheme.from_marks(g, 2.0, 0.7, {})
    tr = evolve(np.ones(4, dtype=np.int8), s)
    p = navigate(tr, 0, 3, 0.0)
    assert p.arrival is None and p.jumps == ()


def test_start_must_be_occupied():
    g = build_window("path", 3)
    s = HarrisScheme.from_marks(g, 2.0, 0.7, {})
    tr = evolve(np.array([1, 0, 0, 0]), s)
    with pytest.raises(NavigationError):
        navigate(tr, 2, 0, 0.0)


def test_moves_toward_target_on_type_one():
    g = build_window("path", 3)
    s = HarrisScheme.from_marks(g, 5.0, 0.7, {1: [(1.0, 1)], 2: [(2.0, 1)], 3: [(3.0, 1)]})
    tr = evolve(np.array([1, 0, 0, 0]), s)
    p = navigate(tr, 0, 3, 0.0)
    assert p.jumps == ((1.0, 1), (2.0, 2), (3.0, 3))
    assert p.arrival == 3.0 and p.down_steps == 3


def test_forced_move_prefers_closest():
    # walker at 2 empties at t=1; both neighbors occupied, the one closer to target 4 wins
    g = build_window("path", 4)
    s = HarrisScheme.from_marks(g, 5.0, 0.7, {2: [(1.0, 0)]})
    tr = evolve(np.array([0, 1, 1, 1, 0]), s)
    p = navigate(tr, 2, 4, 0.0)
    assert p.jumps == ((1.0, 3),)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**40), st.sampled_from([0.6, 0.75, 0.9]))
def test_completed_paths_stay_occupied(seed, q):
    g = build_window("grid2d", 3)
    s = sample_scheme(g, 8.0, q, seed)
    init = sample_initial(BernoulliConditioned(q), g, seed)
    start = int(np.flatnonzero(init)[0])
    tr = evolve(init, s)
    p = navigate(tr, start, g.n - 1, 0.0)
    assert p.check_occupied(tr)


def test_scalar_and_batch_agree(rng):
    g = build_window("half_line", 12)
    init = np.ones((60, g.n), dtype=np.int8)
    nb = navigate_batch(g, 0.75, init, 0, 6, 0.0, 40.0, rng, record=60)
    for r in range(60):
        tr = evolve(init[r], nb.stream.scheme(r))
        p = navigate(tr, 0, 6, 0.0)
        if np.isnan(nb.arrival[r]):
            assert p.arrival is None
        else:
            assert p.arrival == nb.arrival[r]
            assert (p.down_steps, p.up_steps, p.level_steps) == (nb.down_steps[r], nb.up_steps[r],
                                                                 nb.level_steps[r])


def test_bounds():
    assert hitting_bound(0.75, 1) == pytest.approx(2.0)
    assert hitting_bound(0.75, 10) == pytest.approx(20.0)
    with pytest.raises(NavigationError):
        hitting_bound(0.5, 3)


def test_zero_distance_exact(rng):
    h = hitting_stats(0.75, 0, 100, rng=rng)
    assert h.mean == 0.0 and h.se == 0.0


def test_mean_below_bound(rng):
    h = hitting_stats(0.75, 1, 5000, rng=rng)
    assert h.mean <= h.bound + 3 * h.se


def test_navigation_event_cases():
    g = build_window("path", 3)
    s = HarrisScheme.from_marks(g, 2.0, 0.7, {})
    tr = evolve(sample_initial(Delta(0), g, 0), s)
    assert navigation_event(tr, [0], 0.0, 1.0)
    assert not navigation_event(tr, [0, 1, 2], 0.0, 2.0)


def test_navigation_probability_grows(rng):
    res = navigation_probability(0.9, 0.3, [10.0, 20.0, 40.0, 80.0], 2000, rng)
    assert res.prob[-1] >= 0.99
    assert np.all(np.diff(res.prob) >= -3 * np.hypot(res.se[1:], res.se[:-1]))
