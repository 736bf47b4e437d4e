import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combpricing.core import PricingInstance, brute_force_cpp, brute_force_kip, mask_bits
from combpricing.problems import (GraphData, KipData, KnapsackData, SetCoverData, estimate_difficulty,
                                  follower_bounds, generate, generate_kip, generate_kpp,
                                  generate_maxsspp, generate_minscpp, knapsack_value, sample_maximal)


# ----------------------------------------------------------------------
# generators

def test_kpp_tolled_share_and_determinism():
    a = generate_kpp(40, 0.5, 7)
    assert len(a.tolled) == 20
    assert a == generate_kpp(40, 0.5, 7)
    assert a != generate_kpp(40, 0.5, 8)
    assert a.payload.C == round(0.5 * sum(a.payload.w))


def test_kpp_ranges_over_seeds():
    for seed in range(100):
        inst = generate_kpp(30, 0.55, seed)
        w = np.array(inst.payload.w)
        assert w.min() >= 1 and w.max() <= 100
        free = list(inst.tollfree)
        v = inst.v[free]
        assert np.all(v >= 0.75 * w[free] - 0.5) and np.all(v <= 1.25 * w[free] + 0.5)
        tol = list(inst.tolled)
        assert np.all(inst.v[tol] >= 1.5 * w[tol] - 0.5) and np.all(inst.v[tol] <= 2.5 * w[tol] + 0.5)
        assert np.all(inst.v == np.round(inst.v))


def test_maxsspp_counts():
    inst = generate_maxsspp(120, 0.12, 3)
    assert len(inst.tolled) == 48
    assert generate_maxsspp(20, 0.0, 1).payload.edges == ()
    v = inst.v
    free = list(inst.tollfree)
    assert v[free].min() >= 50 and v[free].max() <= 150


def test_maxsspp_edge_density_within_three_sigma():
    n, d = 30, 0.2
    pairs = n * (n - 1) // 2
    counts = [len(generate_maxsspp(n, d, s).payload.edges) for s in range(50)]
    mean = np.mean(counts)
    sigma = math.sqrt(pairs * d * (1 - d) / 50)
    assert abs(mean - pairs * d) <= 3 * sigma


def test_minscpp_shape_and_cover():
    inst = generate_minscpp(70, 1.0, 0)
    d = inst.payload
    assert d.n_elements == 70 and inst.n == 70
    assert len(inst.tolled) == 20
    covered = 0
    for i in inst.tollfree:
        covered |= d.masks[i]
    assert covered == d.universe
    we = np.array(d.element_weights)
    assert we.min() >= 50 and we.max() <= 85


def test_minscpp_toll_free_cover_over_seeds():
    sizes = []
    for seed in range(50):
        inst = generate_minscpp(20, 1.0, seed)
        d = inst.payload
        covered = 0
        for i in inst.tollfree:
            covered |= d.masks[i]
        assert covered == d.universe
        sizes.extend(len(s) for s in d.sets)
    # inclusion probability 0.23 plus a small repair excess
    assert np.mean(sizes) == pytest.approx(0.23 * 20, rel=0.1)


def test_kip_generator():
    a = generate_kip(10, 4)
    assert a == generate_kip(10, 4)
    d = a.payload
    assert d.c == round(0.5 * sum(d.w)) and d.C == round(0.5 * sum(d.W))
    assert np.isfinite(brute_force_kip(a).objective)


def test_generate_dispatch():
    assert generate("kpp", 3, n=10, r=0.5) == generate_kpp(10, 0.5, 3)


# ----------------------------------------------------------------------
# follower optima versus enumeration

def _enum_opt(prob, profit):
    feas = prob._feasible_all()
    vals = mask_bits(feas, prob.n) @ profit
    return vals.max() if prob.sense == "max" else vals.min()


def _random_instance(kind, n, seed):
    if kind == "kpp":
        return generate_kpp(n, 0.5, seed)
    if kind == "maxsspp":
        return generate_maxsspp(n, 0.35, seed)
    return generate_minscpp(n, 1.0, seed, n_elements=max(4, n - 2))


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["kpp", "maxsspp", "minscpp"]), n=st.integers(4, 12),
       seed=st.integers(0, 10_000), tseed=st.integers(0, 10_000))
def test_best_response_matches_enumeration(kind, n, seed, tseed):
    inst = _random_instance(kind, n, seed)
    prob = inst.follower()
    r = np.random.default_rng(tseed)
    t = np.zeros(n)
    t[list(inst.tolled)] = r.uniform(0, 60, size=len(inst.tolled))
    profit = prob.follower_profit(t)
    sol, val = prob.best_response(profit, t)
    assert prob.is_feasible(sol.mask)
    assert val == pytest.approx(_enum_opt(prob, profit), abs=1e-7)
    # the search path (DP or branch and bound) agrees with enumeration
    m = prob._solve_lex(profit, t)
    assert prob.is_feasible(m)
    assert prob.value(m, profit) == pytest.approx(val, abs=1e-7)
    assert float(t @ mask_bits([m], n)[0]) == pytest.approx(float(t @ sol.to_array()), abs=1e-6)


@pytest.mark.parametrize("kind", ["kpp", "maxsspp", "minscpp"])
def test_samples_are_extremal(kind):
    rng = np.random.default_rng(0)
    for seed in range(20):
        inst = _random_instance(kind, 9, seed)
        prob = inst.follower()
        ext = set(int(m) for m in prob.extremal_masks())
        for _ in range(5):
            s = sample_maximal(prob, rng)
            assert prob.is_feasible(s.mask)
            assert s.mask in ext


def test_kip_inner_dp_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 13))
        profit = rng.integers(0, 50, size=n).astype(float)
        w = rng.integers(1, 30, size=n)
        C = int(rng.integers(0, w.sum() + 1))
        bits = mask_bits(np.arange(1 << n), n)
        ok = bits @ w <= C
        best = (bits[ok] @ profit).max()
        assert knapsack_value(profit, w, C) == pytest.approx(best)


# ----------------------------------------------------------------------
# difficulty

def test_difficulty_four_item(knap4):
    d = estimate_difficulty(knap4)
    assert (d.f0, d.finf) == (3, 1)
    assert d.g == pytest.approx(1.5)
    assert d.score == pytest.approx(4 / 3)


def test_difficulty_without_tolled_items():
    inst = PricingInstance("kpp", [2, 3], (), KnapsackData((1, 1), 1))
    assert estimate_difficulty(inst).score == 0


def test_difficulty_scale_invariant_and_at_least_one():
    for seed in range(5):
        inst = generate_kpp(8, 0.5, seed)
        d = estimate_difficulty(inst)
        scaled = PricingInstance("kpp", inst.v * 3, inst.tolled, inst.payload)
        assert estimate_difficulty(scaled).score == pytest.approx(d.score)
        if d.g > 0:
            assert d.score >= 1 - 1e-9


def test_difficulty_min_sense(cover5):
    f0, finf = follower_bounds(cover5)
    assert finf >= f0
    d = estimate_difficulty(cover5)
    assert d.score == pytest.approx((finf - f0) / brute_force_cpp(cover5).revenue)


def test_difficulty_rejects_kip():
    with pytest.raises(ValueError):
        estimate_difficulty(generate_kip(5, 0))


def test_data_validation():
    with pytest.raises(ValueError):
        GraphData(3, [(0, 0)])
    with pytest.raises(ValueError):
        SetCoverData(2, [(0, 5)])
    with pytest.raises(ValueError):
        KnapsackData((1, -1), 2)
    with pytest.raises(ValueError):
        KipData((1,), (1, 2), 1, (1,), 1)
