import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa1f.graph import (
    GraphError,
    GraphView,
    GrowthParams,
    PolynomialGrowth,
    build_window,
    check_growth,
    distance,
    embed_half_line,
    extend_half_line,
)


def test_smallest_path():
    g = build_window("path", 1)
    assert g.n == 2
    assert g.edges() == [(0, 1)]
    assert g.kappa == 1


def test_grid_ball_radius_one():
    g = build_window("grid2d", 1)
    assert g.n == 5
    assert g.kappa == 4
    centre = next(x for x in range(g.n) if len(g.neighbors(x)) == 4)
    assert all(len(g.neighbors(x)) == 1 for x in range(g.n) if x != centre)


def test_tree_count_by_level():
    g = build_window("regular_tree", 3, degree=3)
    assert g.n == 1 + 3 + 6 + 12


def test_vertex_cap():
    with pytest.raises(GraphError):
        build_window("grid2d", 50, vertex_cap=100)
    with pytest.raises(GraphError):
        build_window("path", 0)
    with pytest.raises(GraphError):
        build_window("hexagon", 3)


def test_distances():
    g = build_window("path", 7)
    assert distance(g, 3, 3) == 0
    assert distance(g, 3, 4) == 1
    assert distance(g, 0, 7) == 7


def test_edge_dump_round_trip():
    g = build_window("grid2d", 2)
    h = GraphView.parse_edges(g.dump_edges(), n=g.n)
    assert h.edges() == g.edges()


def test_growth_path_passes():
    g = build_window("path", 120)
    rep = check_growth(g, GrowthParams(3, 1, 0.5), 50)
    assert rep.passed
    assert all(row.max_ball == 2 * row.r + 1 for row in rep.rows)


def test_growth_tree_fails():
    g = build_window("regular_tree", 13, degree=3)
    rep = check_growth(g, GrowthParams(1, 1, 0.5), 12, max_centers=1)
    assert not rep.passed
    assert rep.first_failure is not None


@pytest.mark.parametrize("theta, ok", [(1.0, True), (0.5, False)])
def test_growth_radius_zero(theta, ok):
    g = build_window("path", 4)
    assert check_growth(g, GrowthParams(theta, 1, 0.5), 0).passed is ok


def test_polynomial_growth_grid():
    g = build_window("grid2d", 12)
    assert check_growth(g, PolynomialGrowth(5, 2), 6).passed


def test_embed_whole_path():
    g = build_window("path", 9)
    assert embed_half_line(g, 0, g.n - 1).sites == tuple(range(10))


def test_embed_grid_valid():
    g = build_window("grid2d", 3)
    hl = embed_half_line(g, 0, 5)
    assert len(hl) == 6
    hl.validate(g)


def test_embed_too_long():
    with pytest.raises(GraphError):
        embed_half_line(build_window("path", 3), 0, 4)


def test_extend_from_origin():
    g = build_window("path", 9)
    hl = embed_half_line(g, 0, 9)
    ext = extend_half_line(g, 0, hl)
    assert ext.prefix == (0,)
    assert ext.continuation == tuple(range(1, 10))


def test_extend_adjacent_to_z3():
    g = build_window("grid2d", 4)
    hl = embed_half_line(g, 0, 8)
    z3 = hl[3]
    y0 = next(v for v in g.neighbors(z3) if v not in hl.sites)
    ext = extend_half_line(g, y0, hl)
    assert ext.prefix == (y0, z3)
    assert ext.continuation == hl.sites[4:]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 40), st.integers(1, 8))
def test_extend_invariants_on_grid(radius, y0, length):
    g = build_window("grid2d", radius)
    y0 = y0 % g.n
    length = min(length, g.n - 1)
    hl = embed_half_line(g, 0, length)
    ext = extend_half_line(g, y0, hl)
    ext.validate(g)
    assert len(ext.prefix) - 1 == min(distance(g, y0, z) for z in hl.sites)
    assert not math.isnan(len(ext))
