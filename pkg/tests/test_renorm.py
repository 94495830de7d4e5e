import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa1f.dynamics import BernoulliConditioned, Delta, couple
from fa1f.graph import build_window
from fa1f.harris import HarrisScheme, sample_scheme
from fa1f.renorm import (
    GoodField,
    RenormError,
    RenormParams,
    classify_intervals,
    death_tail,
    open_bonds,
    p_K_closed_form,
    p_K_of,
    q_of_K,
    right_edge_stats,
    run_semi_oriented,
    sample_good_field,
    semi_oriented_batch,
    subordinate_chain,
    transport_check,
    window_probabilities,
)


def test_q_of_K_value():
    assert q_of_K(10) == pytest.approx(0.999324, abs=5e-7)


def test_q_of_K_identity_and_monotone():
    Ks = np.linspace(1, 30, 59)
    qs = [q_of_K(K) for K in Ks]
    assert np.all(np.diff(qs) > 0)
    for K, q in zip(Ks, qs):
        assert 0 < q < 1
        assert math.exp(-(1 - q) * K) == pytest.approx(1 - math.exp(-K / 2), rel=1e-12)


def test_q_of_K_rejects_small_K():
    with pytest.raises(RenormError):
        q_of_K(0.5)


@pytest.mark.parametrize("K", [1, 2, 5, 10, 20, 40])
def test_p_K_bound_and_closed_form(K):
    p = p_K_of(K)
    assert p <= 2 * math.exp(-K / 2)
    assert p == pytest.approx(p_K_closed_form(K), rel=1e-10)


def test_p_K_at_ten():
    assert p_K_of(10) == pytest.approx(0.0134532, abs=1e-7)


def test_window_probabilities_match_q():
    a, b = window_probabilities(10)
    assert a == pytest.approx(math.sqrt(1 - math.exp(-5)), rel=1e-12)
    assert 1 - a * a * b == pytest.approx(p_K_of(10), rel=1e-10)


def test_params_need_t_above_4K():
    with pytest.raises(RenormError):
        RenormParams(2.0, 8.0)
    assert RenormParams(2.0, 9.0).n_levels == 8


def _hand_scheme(marks):
    g = build_window("path", 4)
    return HarrisScheme.from_marks(g, 9.0, q_of_K(2.0), marks)


def test_classify_hand_cases():
    # K = 2, t = 9: window j is [8 - j, 9 - j]
    s = _hand_scheme({0: [(7.5, 1)], 1: [(7.5, 1), (8.5, 0)], 2: [(8.0, 0), (7.5, 1)]})
    f = classify_intervals(s, range(5), RenormParams(2.0, 9.0))
    assert f.n_levels == 8
    assert f.is_good(0, 0) and not f.is_good(0, 1)
    # type-0 in window 0 spoils level 0
    assert not f.is_good(1, 0)
    # a type-0 on the shared endpoint lies in both closed windows
    assert not f.is_good(2, 0) and not f.is_good(2, 1)
    # no type-1 anywhere
    assert not f.good[f.row(3)].any()


def test_classify_rejects_wrong_q():
    g = build_window("path", 2)
    s = HarrisScheme.from_marks(g, 9.0, 0.5, {})
    with pytest.raises(RenormError):
        classify_intervals(s, range(3), RenormParams(2.0, 9.0))


def test_classified_bad_frequency(rng):
    K, t = 4.0, 40.0
    params = RenormParams(K, t)
    g = build_window("path", 60)
    bad = []
    for seed in range(20):
        s = sample_scheme(g, t, params.q, seed)
        bad.append(classify_intervals(s, range(g.n), params).bad_fraction())
    n = 20 * g.n * params.n_levels
    assert np.mean(bad) == pytest.approx(p_K_of(K), abs=5 * math.sqrt(p_K_of(K) / n))


def test_good_field_one_dependent(rng):
    f = sample_good_field(range(4000), 40, 4.0, rng)
    x = f.good.astype(float)
    x -= x.mean()

    def corr(a, b):
        return float((a * b).mean() / math.sqrt((a * a).mean() * (b * b).mean()))

    n = x.size
    assert abs(corr(x[:, :-2], x[:, 2:])) < 5 / math.sqrt(n)
    assert abs(corr(x[:-1], x[1:])) < 5 / math.sqrt(n)
    assert corr(x[:, :-1], x[:, 1:]) > 10 / math.sqrt(n)


def _field(good, K=4.0, t=None):
    good = np.asarray(good, dtype=bool)
    return GoodField(tuple(range(good.shape[0])), good, K, t)


def test_semi_oriented_all_good_spreads():
    f = _field(np.ones((30, 25)))
    st_ = run_semi_oriented(f, range(30), 0, 20)
    assert st_.nu is None
    assert st_.parity_ok()
    assert st_.right_edges.tolist() == list(range(21))
    assert st_.xi[-1].sum() == 11


def test_semi_oriented_dies_on_bad_row():
    good = np.ones((10, 12), dtype=bool)
    good[:, 4] = False
    st_ = run_semi_oriented(_field(good), range(10), 1, 8)
    assert st_.nu == 3
    assert st_.right_edges[-1] == -1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 5))
def test_semi_oriented_parity_random(seed, start):
    f = sample_good_field(range(20), 14, 2.0, np.random.default_rng(seed))
    st_ = run_semi_oriented(f, range(20), 0, 12, start=start)
    assert st_.parity_ok()
    if st_.nu is not None:
        assert not st_.xi[st_.nu].any() and st_.xi[st_.nu - 1].any()


def test_open_bonds_follow_target_level():
    good = np.zeros((3, 4), dtype=bool)
    good[1, 2] = True
    bonds = open_bonds(_field(good), range(3), 0, 1)
    assert sorted(bonds) == [((0, 1), (1, 2)), ((2, 1), (1, 2))]


def test_batch_all_weights_one_without_mixture(rng):
    run = semi_oriented_batch(3.0, 500, 6, rng)
    assert np.all(run.weight == 1.0)
    alive = run.nu < 0
    assert np.all(run.right_edges[alive, -1] >= 0)
    died = ~alive
    assert np.all(run.right_edges[died, run.nu[died]] == -1)


def test_death_tail_nonincreasing(rng):
    dt = death_tail(4.0, 20_000, 6, rng)
    assert np.all(np.diff(dt.p_hat) <= 1e-12)
    assert dt.p_hat[0] == pytest.approx(dt.extinction)
    assert np.all(dt.p_hat <= 1 + 1e-12)


def test_importance_sampling_matches_plain(rng):
    K, reps = 3.0, 60_000
    plain = death_tail(K, reps, 4, rng, mixture=(1.0,))
    mixed = death_tail(K, reps, 4, rng)
    for n in range(5):
        se = math.hypot(plain.se[n], mixed.se[n])
        assert abs(plain.p_hat[n] - mixed.p_hat[n]) < 4 * se + 1e-12


def test_right_edge_probabilities_bounded(rng):
    cur = right_edge_stats(4.0, 0.5, 0.0, 5000, 8, rng)
    assert np.all((cur.p_hat >= 0) & (cur.p_hat <= 1))
    assert cur.n.tolist() == list(range(1, 9))


def test_subordinate_chain_survives_on_good_field():
    ch = subordinate_chain(_field(np.ones((20, 20))), range(20), 0, 5, 10)
    assert ch.survived and len(ch.entries) == 1 and ch.entries[0].lifetime is None


def test_subordinate_chain_restarts_and_exhausts():
    good = np.ones((20, 40), dtype=bool)
    good[:, [3, 7]] = False
    ch = subordinate_chain(_field(good), range(20), 0, 2, 10, start=4)
    assert not ch.survived and ch.budget_exhausted
    assert [(e.restart, e.offset, e.lifetime) for e in ch.entries] == [(4, 0, 3), (2, 3, 4)]
    assert ch.to_json_lines()[1] == {"restart": 2, "offset": 3, "lifetime": 4}


def test_subordinate_chain_runs_out_of_levels():
    ch = subordinate_chain(_field(np.zeros((5, 8))), range(5), 0, 100, 3)
    assert not ch.survived and not ch.budget_exhausted


def test_transport_mass():
    K, t = 4.0, 20.0
    params = RenormParams(K, t)
    g = build_window("path", 10)
    applicable = 0
    for seed in range(60):
        s = sample_scheme(g, t, params.q, seed)
        ct = couple(Delta(10), BernoulliConditioned(params.q), s, seed, seed + 1)
        f = classify_intervals(s, range(g.n), params)
        for y0 in range(g.n):
            chain = [y0]
            for i in range(1, 3):
                nxt = [w for w in g.neighbors(chain[-1]) if f.is_good(w, i)]
                if not nxt:
                    break
                chain.append(nxt[0])
            res = transport_check(ct, f, chain)
            if res is None:
                continue
            assert res.holds
            applicable += sum(res.applicable)
    assert applicable > 100


def test_transport_rejects_non_edges():
    K, t = 4.0, 20.0
    params = RenormParams(K, t)
    g = build_window("path", 3)
    s = sample_scheme(g, t, params.q, 1)
    ct = couple(Delta(0), Delta(1), s, 0, 1)
    f = classify_intervals(s, range(g.n), params)
    assert transport_check(ct, f, [0, 2]) is None
