import json
import math

import pytest
from hypothesis import given, strategies as st

from heurevo.grpo import (
    GrpoBatch,
    TokenLogProbs,
    clipped_token_objective,
    export_training_batch,
    group_advantages,
    grpo_objective,
    kl_estimate,
)
from heurevo.rng import Pcg32


class TestGroupAdvantages:
    def test_hand_case_four_rewards(self):
        # mean 2.5, population std sqrt(1.25)
        got = group_advantages([1.0, 2.0, 3.0, 4.0])
        expected = [-1.3416407864998738, -0.4472135954999579, 0.4472135954999579, 1.3416407864998738]
        assert got == pytest.approx(expected, abs=1e-12)

    def test_two_rewards(self):
        assert group_advantages([0.0, 1.0]) == pytest.approx([-1.0, 1.0])

    def test_zero_variance_gives_zeros(self):
        assert group_advantages([0.7, 0.7, 0.7]) == [0.0, 0.0, 0.0]

    def test_sample_std_switch(self):
        got = group_advantages([0.0, 1.0], population_std=False)
        s = math.sqrt(0.5)
        assert got == pytest.approx([-0.5 / s, 0.5 / s])

    def test_zero_mean_unit_population_std(self):
        rng = Pcg32(17)
        for _ in range(500):
            g = rng.randint(2, 8)
            rewards = [rng.uniform(-2, 2) for _ in range(g)]
            adv = group_advantages(rewards)
            if all(r == rewards[0] for r in rewards):
                continue
            mean = sum(adv) / g
            var = sum(a * a for a in adv) / g
            assert abs(mean) < 1e-12
            assert abs(var - 1.0) < 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            group_advantages([])


class TestKlEstimate:
    def test_equal_inputs_zero(self):
        assert kl_estimate(-1.5, -1.5) == 0.0

    def test_half_nat_gap(self):
        assert kl_estimate(-1.0, -1.5) == pytest.approx(math.exp(0.5) - 1.5, abs=1e-12)

    def test_ln_two_gap(self):
        assert kl_estimate(-0.2, -0.2 - math.log(2)) == pytest.approx(2 - math.log(2) - 1, abs=1e-12)

    def test_nonnegative_everywhere(self):
        rng = Pcg32(23)
        for _ in range(100_000):
            a = -20.0 * rng.random()
            b = -20.0 * rng.random()
            assert kl_estimate(a, b) >= 0.0

    def test_zero_only_at_equality(self):
        rng = Pcg32(29)
        for _ in range(5000):
            a = -10.0 * rng.random()
            b = -10.0 * rng.random()
            if abs(a - b) > 1e-9:
                assert kl_estimate(a, b) > 0.0


class TestClippedObjective:
    def test_clip_upper(self):
        assert clipped_token_objective(1.5, 1.0, 0.2) == pytest.approx(1.2)

    def test_pessimistic_on_negative_advantage(self):
        assert clipped_token_objective(0.5, -1.0, 0.2) == pytest.approx(-0.8)

    def test_identity_inside_band(self):
        for a in (-2.0, 0.0, 3.5):
            assert clipped_token_objective(1.0, a, 0.2) == a

    def test_validation(self):
        with pytest.raises(ValueError):
            clipped_token_objective(0.0, 1.0, 0.2)
        with pytest.raises(ValueError):
            clipped_token_objective(1.0, 1.0, 0.0)

    @given(
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=-10, max_value=10),
        st.floats(min_value=1e-3, max_value=0.999),
    )
    def test_never_exceeds_unclipped(self, ratio, advantage, eps):
        assert clipped_token_objective(ratio, advantage, eps) <= ratio * advantage + 1e-12


def logprobs(theta, old=None, ref=None):
    theta = tuple(theta)
    return TokenLogProbs(
        theta=theta,
        old=tuple(old) if old is not None else theta,
        ref=tuple(ref) if ref is not None else theta,
    )


class TestTokenLogProbs:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            TokenLogProbs(theta=(-1.0,), old=(-1.0, -2.0), ref=(-1.0,))

    def test_positive_logprob_rejected(self):
        with pytest.raises(ValueError):
            logprobs([0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            logprobs([])


class TestGrpoObjective:
    def test_all_ratios_one_beta_zero_gives_mean_advantage(self):
        batch = GrpoBatch(
            prompt="p",
            responses=[logprobs([-1.0, -2.0]), logprobs([-0.5])],
            rewards=[0.0, 1.0],
            beta=0.0,
        )
        assert grpo_objective(batch) == pytest.approx(sum(batch.advantages) / 2)

    def test_policy_equals_reference_kills_kl_term(self):
        responses = [logprobs([-1.0, -0.25], old=[-1.1, -0.5]) for _ in range(2)]
        with_kl = GrpoBatch(prompt="p", responses=responses, rewards=[0.0, 1.0], beta=5.0)
        without = GrpoBatch(prompt="p", responses=responses, rewards=[0.0, 1.0], beta=0.0)
        assert grpo_objective(with_kl) == pytest.approx(grpo_objective(without))

    def test_hand_case_two_tokens(self):
        # ratios (1.5, 0.9), advantage 1, eps 0.2 -> (1.2 + 0.9) / 2
        theta = (-1.0, -1.0)
        old = (-1.0 - math.log(1.5), -1.0 - math.log(0.9))
        batch = GrpoBatch(
            prompt="p",
            responses=[TokenLogProbs(theta=theta, old=old, ref=theta)],
            rewards=[1.0],
            advantages=[1.0],
            eps=0.2,
            beta=0.0,
        )
        assert grpo_objective(batch) == pytest.approx(1.05, abs=1e-12)

    def test_reordering_invariance(self):
        rng = Pcg32(31)
        responses = []
        rewards = []
        for i in range(4):
            n = rng.randint(1, 5)
            theta = [-3.0 * rng.random() - 0.01 for _ in range(n)]
            old = [-3.0 * rng.random() - 0.01 for _ in range(n)]
            ref = [-3.0 * rng.random() - 0.01 for _ in range(n)]
            responses.append(TokenLogProbs(tuple(theta), tuple(old), tuple(ref)))
            rewards.append(rng.uniform(-1, 2))
        forward = GrpoBatch(prompt="p", responses=responses, rewards=rewards)
        perm = [2, 0, 3, 1]
        shuffled = GrpoBatch(
            prompt="p",
            responses=[responses[i] for i in perm],
            rewards=[rewards[i] for i in perm],
        )
        assert grpo_objective(forward) == pytest.approx(grpo_objective(shuffled), abs=1e-12)

    def test_misaligned_rewards_rejected(self):
        with pytest.raises(ValueError):
            GrpoBatch(prompt="p", responses=[logprobs([-1.0])], rewards=[1.0, 2.0])


class TestExport:
    def test_records_appended_in_order(self, tmp_path):
        dest = tmp_path / "batch.jsonl"
        n = export_training_batch(
            "prompt-1", ["a", "b"], [1.0, -0.6], [1.0, -1.0], dest, 1, "injection", "run-x"
        )
        assert n == 2
        n = export_training_batch(
            "prompt-2", ["c"], [0.5], [0.0], dest, 2, "crossover", "run-x"
        )
        assert n == 1
        lines = [json.loads(s) for s in dest.read_text().splitlines()]
        assert [r["round"] for r in lines] == [1, 1, 2]
        assert lines[0]["prompt"] == "prompt-1"
        assert lines[2]["operator"] == "crossover"
        assert list(lines[0]) == ["prompt", "response", "reward", "advantage", "round", "operator", "run_id"]

    def test_empty_group_writes_nothing(self, tmp_path):
        dest = tmp_path / "batch.jsonl"
        assert export_training_batch("p", [], [], [], dest, 1, "injection", "r") == 0
        assert not dest.exists()

    def test_misalignment_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_training_batch("p", ["a"], [1.0, 2.0], [0.0], tmp_path / "b", 1, "x", "r")
