import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raolab.generators import gen_lemma3, gen_random
from raolab.model import Article, Instance, cut_instance
from raolab.oracles import (
    KphItem,
    OracleLimitError,
    instance_kph,
    kph_items,
    opt_rao_dp,
    opt_rao_waterfill,
    solve_kph,
    solve_kph_integral,
)

from oracles_bf import brute_force_rao, enumerate_rao, exhaustive_fractional_knapsack

THREE = [KphItem(0, 5, 4), KphItem(1, 3, 6), KphItem(2, 2, 8)]


def random_small(rng, n_max=8, t_max=20, c_max=4):
    """Small instance with arbitrary (not necessarily monotone) profiles and C > 1."""
    n = int(rng.integers(1, n_max + 1))
    budget = int(rng.integers(1, t_max + 1))
    arts = []
    for _ in range(n):
        hint = int(rng.integers(1, 10))
        t = int(rng.integers(1, budget + 1))
        lo = max(1, hint // int(rng.integers(1, c_max + 1)))
        rates = rng.integers(lo, hint + 1, size=t).tolist()
        arts.append(Article.from_rates(hint, rates))
    return Instance(budget, tuple(arts), tie_priority=tuple(rng.permutation(n).tolist()))


def random_monotone(rng, n_max=8, t_max=20):
    inst = random_small(rng, n_max, t_max)
    arts = tuple(Article.from_rates(a.hint, sorted(a.profile.rates(), reverse=True))
                 for a in inst.articles)
    return Instance(inst.budget, arts, inst.tie_priority)


class TestSolveKph:
    def test_worked_example(self):
        sol = solve_kph(THREE, 8)
        assert sol.y == {0: 1, 1: Fraction(2, 3), 2: 0}
        assert sol.rho == 3 and sol.value == 32 and sol.weight == 8
        assert sol.fractional_item == 1 and sol.integral_set == {0}
        assert exhaustive_fractional_knapsack(8, [5, 3, 2], [4, 6, 8]) == 32

    def test_everything_fits(self):
        sol = solve_kph(THREE, 100)
        assert set(sol.y.values()) == {1}
        assert sol.rho == 2 and sol.weight == 18

    def test_zero_budget(self):
        sol = solve_kph(THREE, 0)
        assert sol.value == 0 and set(sol.y.values()) == {0}

    def test_restriction_queries(self):
        sol = solve_kph(THREE, 8)
        assert sol.value_of([1]) == 12 and sol.weight_of([1]) == 4
        assert sol.value_of([0, 1, 2]) == sol.value

    def test_ties_follow_priority(self):
        items = [KphItem(0, 4, 3, priority=1), KphItem(1, 4, 3, priority=0)]
        sol = solve_kph(items, 4)
        assert sol.y == {0: Fraction(1, 3), 1: 1}

    def test_export(self):
        d = solve_kph(THREE, 8).to_dict()
        assert json.loads(json.dumps(d)) == {"value": 32, "y": {"0": 1, "1": "2/3", "2": 0}, "rho": 3}

    @given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 20)), min_size=1, max_size=9),
           st.fractions(0, 120), st.randoms(use_true_random=False))
    def test_threshold_structure_and_optimality(self, pairs, budget, rnd):
        items = [KphItem(i, h, t, p) for i, ((h, t), p) in
                 enumerate(zip(pairs, rnd.sample(range(len(pairs)), len(pairs))))]
        sol = solve_kph(items, budget)
        assert sum(0 < v < 1 for v in sol.y.values()) <= 1
        for it in items:
            if it.hint > sol.rho:
                assert sol.y[it.key] == 1 or sol.weight == budget
            if it.hint < sol.rho:
                assert sol.y[it.key] == 0
        assert sol.weight == min(budget, sum(t for _, t in pairs))
        assert sol.value == exhaustive_fractional_knapsack(
            budget, [h for h, _ in pairs], [t for _, t in pairs])

    @given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 20)), min_size=1, max_size=8),
           st.integers(0, 60), st.randoms(use_true_random=False))
    def test_input_order_irrelevant(self, pairs, budget, rnd):
        items = [KphItem(i, h, t, i) for i, (h, t) in enumerate(pairs)]
        shuffled = items[:]
        rnd.shuffle(shuffled)
        a, b = solve_kph(items, budget), solve_kph(shuffled, budget)
        assert (a.value, a.rho, a.y) == (b.value, b.rho, b.y)


class TestIntegral:
    def test_worked_example(self):
        res = solve_kph_integral(THREE, 8)
        assert res.value == 20 and res.chosen == {0}

    def test_single_item(self):
        assert solve_kph_integral([KphItem(7, 3, 2)], 5).chosen == {7}

    def test_fractional_lengths_enumerate(self):
        items = [KphItem(0, 3, Fraction(3, 2)), KphItem(1, 2, Fraction(5, 2))]
        assert solve_kph_integral(items, 4).value == Fraction(19, 2)

    def test_limit(self):
        with pytest.raises(OracleLimitError):
            solve_kph_integral(THREE, 10**6, limit=1000)

    def test_relaxation_dominates_and_decomposition(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            inst = random_small(rng, n_max=10, t_max=30)
            items = kph_items(inst)
            frac = solve_kph(items, inst.budget).value
            integral = solve_kph_integral(items, inst.budget).value
            assert frac >= integral
            assert frac <= integral + max(a.upper_value for a in inst.articles)


class TestDp:
    def test_worked_example(self):
        inst = Instance(3, (Article.from_rates(5, [5, 2]), Article.from_rates(4, [4, 4])))
        opt = opt_rao_dp(inst)
        assert opt.value == 13 == enumerate_rao(3, [[5, 2], [4, 4]])
        assert opt.witness.reads == (1, 2)

    def test_read_everything(self):
        inst = Instance(50, (Article.from_rates(5, [5, 2]), Article.from_rates(4, [4, 1, 4])))
        assert opt_rao_dp(inst).value == 16

    def test_lemma3(self):
        assert opt_rao_dp(gen_lemma3(3)).value == 249

    def test_matches_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            inst = random_small(rng, n_max=4, t_max=8)
            profiles = [a.profile.rates() for a in inst.articles]
            opt = opt_rao_dp(inst)
            assert opt.value == enumerate_rao(inst.budget, profiles)
            assert opt.witness.time_used <= inst.budget

    def test_limits(self):
        with pytest.raises(OracleLimitError):
            opt_rao_dp(gen_lemma3(8), limit=1000)
        frac = cut_instance(gen_random({"n": 3, "budget": 10, "length_range": (5, 10)}, 1),
                            Fraction(1, 3))
        with pytest.raises(OracleLimitError):
            opt_rao_dp(frac)


class TestWaterfill:
    def test_worked_example(self):
        inst = Instance(3, (Article.from_rates(5, [5, 2]), Article.from_rates(4, [4, 4])))
        assert opt_rao_waterfill(inst).value == 13

    def test_fractional_budget(self):
        inst = Instance(Fraction(3, 2), (Article.from_rates(4, [4, 2]),))
        assert opt_rao_waterfill(inst).value == 5

    def test_constant_matches_kph(self):
        inst = gen_random({"n": 12, "budget": 40, "length_range": (1, 40)}, 6)
        assert opt_rao_waterfill(inst).value == instance_kph(inst).value

    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            opt_rao_waterfill(Instance(3, (Article.from_rates(5, [1, 5]),)))

    def test_equals_dp_exhaustive_fuzz(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            inst = random_monotone(rng)
            assert opt_rao_waterfill(inst).value == opt_rao_dp(inst).value


def test_kph_dominates_exact_optimum():
    rng = np.random.default_rng(29)
    for _ in range(500):
        inst = random_small(rng)
        assert instance_kph(inst).value >= opt_rao_dp(inst).value
        assert opt_rao_dp(inst).value == brute_force_rao(
            inst.budget, [a.profile.rates() for a in inst.articles])


def test_cut_keeps_g_fraction_of_kph():
    rng = np.random.default_rng(31)
    for _ in range(100):
        inst = random_monotone(rng, n_max=10, t_max=30)
        g = Fraction(int(rng.integers(1, 101)), 100)
        assert g * instance_kph(inst).value <= instance_kph(cut_instance(inst, g)).value
