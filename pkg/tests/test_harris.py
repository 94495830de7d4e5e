import numpy as np
import pytest

from fa1f.graph import build_window
from fa1f.harris import HarrisScheme, SchemeError, marks_in, sample_scheme, times_between
from fa1f.stats import binomial_se


def test_marks_per_site_mean():
    g = build_window("path", 99)
    counts = np.concatenate([[len(t) for t in sample_scheme(g, 10.0, 0.5, seed).times] for seed in range(100)])
    assert counts.size == 10_000
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - 10.0) <= 3 * se


def test_same_seed_bit_identical():
    g = build_window("grid2d", 3)
    a, b = sample_scheme(g, 5.0, 0.7, 42), sample_scheme(g, 5.0, 0.7, 42)
    assert a.dump() == b.dump()
    assert sample_scheme(g, 5.0, 0.7, 43).dump() != a.dump()


def test_type_one_fraction():
    g = build_window("path", 1)
    s = sample_scheme(g, 10_000.0, 0.8, 3)
    gam = s.gammas[0]
    p = gam.mean()
    assert abs(p - 0.8) <= 3 * binomial_se(0.8, gam.size)


def test_site_streams_independent_of_window():
    small = sample_scheme(build_window("path", 3), 4.0, 0.6, 9)
    big = sample_scheme(build_window("path", 30), 4.0, 0.6, 9)
    for x in range(4):
        np.testing.assert_array_equal(small.times[x], big.times[x])


@pytest.mark.parametrize("q, T", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)])
def test_rejects_domain(q, T):
    with pytest.raises(SchemeError):
        sample_scheme(build_window("path", 2), T, q, 1)


def test_marks_in_filters():
    g = build_window("path", 2)
    s = sample_scheme(g, 20.0, 0.5, 11)
    every = marks_in(s, 1, 2.0, 15.0)
    zeros = marks_in(s, 1, 2.0, 15.0, "type0")
    ones = marks_in(s, 1, 2.0, 15.0, "type1")
    assert sorted(zeros + ones, key=lambda m: m.time) == every
    with pytest.raises(SchemeError):
        marks_in(s, 1, 3.0, 2.0)
    with pytest.raises(SchemeError):
        marks_in(s, 1, 3.0, 3.0)


def test_marks_in_empty_window():
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 10.0, 0.5, {0: [(5.0, 1)]})
    assert marks_in(s, 0, 1.0, 4.0) == []
    assert marks_in(s, 1, 0.0, 10.0) == []


def test_all_type_one_has_no_type_zero():
    # q = 1 is outside the sampler's domain; an explicit all-one scheme stands in
    g = build_window("path", 3)
    s = HarrisScheme.from_marks(g, 10.0, 0.99, {x: [(0.5 + x, 1), (2.5 + x, 1)] for x in range(4)})
    assert all(marks_in(s, x, 0.0, 10.0, "type0") == [] for x in range(4))


def test_dump_parse_round_trip():
    g = build_window("path", 4)
    s = sample_scheme(g, 3.0, 0.4, 5)
    r = HarrisScheme.parse(g, 3.0, 0.4, s.dump())
    for x in range(g.n):
        np.testing.assert_array_equal(r.times[x], s.times[x])
        np.testing.assert_array_equal(r.gammas[x], s.gammas[x])


def test_times_between_is_open():
    g = build_window("path", 1)
    s = HarrisScheme.from_marks(g, 10.0, 0.5, {0: [(1.0, 1), (2.0, 0), (3.0, 1)]})
    assert times_between(s, 0, 1.0, 3.0).tolist() == [2.0]


def test_from_marks_validation():
    g = build_window("path", 1)
    with pytest.raises(SchemeError):
        HarrisScheme.from_marks(g, 1.0, 0.5, {0: [(2.0, 1)]})
    with pytest.raises(SchemeError):
        HarrisScheme.from_marks(g, 1.0, 0.5, {0: [(0.5, 2)]})
