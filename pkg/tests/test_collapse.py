import math

import pytest

from heurevo.collapse import (
    CollapseState,
    expected_stagnation_rounds,
    simulate_stagnation,
    survival_probability,
)
from heurevo.rng import Pcg32


class TestObserveRound:
    def test_not_counting_before_pool_full(self):
        state = CollapseState()
        assert state.observe_round(new_global_best=True, pool_full=False) == -1
        assert state.observe_round(new_global_best=False, pool_full=False) == -1

    def test_counting_starts_when_pool_full(self):
        state = CollapseState()
        assert state.observe_round(new_global_best=False, pool_full=True) == 1
        assert state.observe_round(new_global_best=False, pool_full=True) == 2

    def test_improvement_resets_to_zero(self):
        state = CollapseState()
        state.counter = 7
        assert state.observe_round(new_global_best=True, pool_full=True) == 0

    def test_improvement_before_counting_keeps_minus_one(self):
        state = CollapseState()
        assert state.observe_round(new_global_best=True, pool_full=True) == -1

    def test_reporting_view_is_non_negative(self):
        state = CollapseState()
        assert state.stagnation_rounds == 0
        state.counter = 4
        assert state.stagnation_rounds == 4


class TestShouldCollapse:
    def test_never_fires_while_unarmed(self):
        state = CollapseState(delta0=0.5)
        state.counter = 0
        for i in range(50):
            assert state.should_collapse(Pcg32(i)) is False
        state.counter = -1
        assert state.should_collapse(Pcg32(1)) is False

    def test_cap_fires_deterministically(self):
        state = CollapseState(delta0=0.0005, cap=25)
        state.counter = 25
        for i in range(20):
            assert state.should_collapse(Pcg32(i)) is True

    def test_hazard_probability_scales_with_counter(self):
        state = CollapseState(delta0=0.0005, cap=None)
        state.counter = 10
        rng = Pcg32(7)
        n = 400_000
        hits = sum(state.should_collapse(rng) for _ in range(n))
        assert abs(hits / n - 0.005) < 0.0005

    def test_validation(self):
        with pytest.raises(ValueError):
            CollapseState(delta0=0.0)
        with pytest.raises(ValueError):
            CollapseState(delta0=1.5)
        with pytest.raises(ValueError):
            CollapseState(cap=0)


class TestExpectation:
    def test_closed_form_values(self):
        assert expected_stagnation_rounds(0.0005) == pytest.approx(56.0499, abs=0.01)
        assert expected_stagnation_rounds(0.005) == pytest.approx(17.7245, abs=0.01)
        assert expected_stagnation_rounds(math.pi / 2) == pytest.approx(1.0)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            expected_stagnation_rounds(0.0)
        with pytest.raises(ValueError):
            expected_stagnation_rounds(-0.1)

    def test_monte_carlo_matches_closed_form(self):
        rng = Pcg32(123)
        for delta0 in (0.0005, 0.005):
            lengths = simulate_stagnation(delta0, cap=None, trials=20_000, rng=rng)
            mean = sum(lengths) / len(lengths)
            expected = expected_stagnation_rounds(delta0)
            assert abs(mean - expected) / expected < 0.02

    def test_cap_bounds_every_trajectory(self):
        rng = Pcg32(5)
        lengths = simulate_stagnation(0.0005, cap=25, trials=5000, rng=rng)
        assert max(lengths) <= 25


class TestSurvival:
    def test_matches_direct_product_exactly(self):
        # delta0 small enough that every factor stays positive up to k = 100
        for delta0 in (0.0005, 0.005, 0.009):
            direct = 1.0
            for k in range(1, 101):
                direct *= 1.0 - k * delta0
                assert survival_probability(delta0, k) == direct

    def test_empirical_survival_tracks_product(self):
        delta0 = 0.01
        rng = Pcg32(9)
        lengths = simulate_stagnation(delta0, cap=None, trials=40_000, rng=rng)
        for k in (5, 10, 20):
            empirical = sum(length > k for length in lengths) / len(lengths)
            assert empirical == pytest.approx(survival_probability(delta0, k), abs=0.01)
