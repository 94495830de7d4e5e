import numpy as np
import pytest

from fa1f.dynamics import CylinderEvent, evolve
from fa1f.engine import evolve_batch, light_cone_radius
from fa1f.graph import build_window
from fa1f.kernels import evolve_many, replica_scheme, replica_seeds
from fa1f.oracle import build_chain, transient_law
from fa1f.stats import binomial_se


def test_batch_replays_through_scalar(rng):
    g = build_window("grid2d", 2)
    init = (rng.random((40, g.n)) < 0.6).astype(np.int8)
    init[:, 0] = 1
    grid = [0.0, 0.7, 1.5, 3.0]
    run = evolve_batch(g, 0.6, [init], grid, rng, record=40)
    for r in range(40):
        tr = evolve(init[r], run.stream.scheme(r))
        for k, t in enumerate(grid):
            assert run.snapshots[0, k, r].tolist() == tr.state_at(t).tolist()


def test_kernel_replays_through_scalar(rng):
    g = build_window("path", 15)
    init = (rng.random((30, g.n)) < 0.7).astype(np.int8)
    init[:, 3] = 1
    seeds = replica_seeds(rng, 30)
    grid = [0.0, 1.0, 2.5, 4.0]
    snaps = evolve_many(g, 0.7, [init], grid, seeds)
    for r in range(30):
        tr = evolve(init[r], replica_scheme(g, 0.7, grid[-1], seeds[r]))
        for k, t in enumerate(grid):
            assert snaps[0, k, r].tolist() == tr.state_at(t).tolist()


def test_kernel_deterministic(rng):
    g = build_window("path", 30)
    init = np.ones((50, g.n), dtype=np.int8)
    seeds = replica_seeds(rng, 50)
    a = evolve_many(g, 0.5, [init], [1.0, 3.0], seeds)
    b = evolve_many(g, 0.5, [init], [1.0, 3.0], seeds)
    np.testing.assert_array_equal(a, b)
    # a replica's path does not depend on which other replicas run beside it
    c = evolve_many(g, 0.5, [init[:10]], [1.0, 3.0], seeds[:10])
    np.testing.assert_array_equal(a[:, :, :10], c)


def test_kernel_rejects_bad_input(rng):
    g = build_window("path", 3)
    with pytest.raises(ValueError):
        evolve_many(g, 0.5, [np.ones((2, 4))], [1.0], replica_seeds(rng, 3))
    with pytest.raises(ValueError):
        evolve_many(g, 0.5, [np.ones((2, 4))], [], replica_seeds(rng, 2))


@pytest.mark.parametrize("engine", ["batch", "kernel"])
def test_engines_match_oracle(engine, rng):
    g = build_window("path", 2)
    q, n = 0.5, 20_000
    ch = build_chain(g, q)
    ind = ch.event_indicator(CylinderEvent.occupied(2))
    grid = [0.5, 1.0, 2.0]
    init = np.zeros((n, g.n), dtype=np.int8)
    init[:, 0] = 1
    if engine == "batch":
        snaps = evolve_batch(g, q, [init], grid, rng, observe=[2]).snapshots
    else:
        snaps = evolve_many(g, q, [init], grid, replica_seeds(rng, n), observe=[2])
    for k, t in enumerate(grid):
        exact = transient_law(ch, ch.delta(0), t)[ind].sum()
        p = snaps[0, k, :, 0].mean()
        assert abs(p - exact) <= 3 * max(binomial_se(exact, n), 1e-12)


def test_light_cone_radius():
    assert light_cone_radius(0.0) == 0
    r = [light_cone_radius(t) for t in (1, 10, 80)]
    assert r == sorted(r)
    assert all(rad > t for rad, t in zip(r, (1, 10, 80)))
