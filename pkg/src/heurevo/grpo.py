"""Group-relative policy optimization numerics and batch export.

This module verifies and exports everything an external fine-tuning
process consumes: group-normalized advantages, the positive-by-construction
KL estimator, the clipped token objective, and the full surrogate value.
No gradients are computed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


def group_advantages(rewards: Sequence[float], population_std: bool = True) -> list[float]:
    """Normalize rewards within one response group to zero mean, unit std.

    Uses the population standard deviation by default (``population_std``
    switches to the sample estimator). A zero-variance group carries no
    learning signal and maps to all-zero advantages.
    """
    n = len(rewards)
    if n < 1:
        raise ValueError("need at least one reward")
    if all(r == rewards[0] for r in rewards):
        return [0.0] * n
    mean = sum(rewards) / n
    centered = [r - mean for r in rewards]
    ddof = 0 if population_std else 1
    if n - ddof <= 0:
        return [0.0] * n
    var = sum(c * c for c in centered) / (n - ddof)
    if var == 0.0:
        return [0.0] * n
    std = math.sqrt(var)
    return [c / std for c in centered]


def kl_estimate(logp_ref: float, logp_theta: float) -> float:
    """Per-token KL estimate u - log(u) - 1 with u = p_ref / p_theta.

    Non-negative for all finite inputs and zero only when they coincide.
    """
    diff = logp_ref - logp_theta
    return math.exp(diff) - diff - 1.0


def clipped_token_objective(ratio: float, advantage: float, eps: float) -> float:
    """Pessimistic clipped surrogate min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    if ratio <= 0:
        raise ValueError("probability ratio must be positive")
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    clipped = min(max(ratio, 1.0 - eps), 1.0 + eps)
    return min(ratio * advantage, clipped * advantage)


@dataclass(frozen=True)
class TokenLogProbs:
    """Aligned per-token log-probabilities for one response."""

    theta: tuple[float, ...]
    old: tuple[float, ...]
    ref: tuple[float, ...]

    def __post_init__(self):
        n = len(self.theta)
        if n < 1:
            raise ValueError("a response needs at least one token")
        if len(self.old) != n or len(self.ref) != n:
            raise ValueError("log-prob sequences must have identical length")
        for seq in (self.theta, self.old, self.ref):
            for v in seq:
                if not math.isfinite(v) or v > 0:
                    raise ValueError("log-probabilities must be finite and <= 0")

    def __len__(self) -> int:
        return len(self.theta)


@dataclass
class GrpoBatch:
    """One prompt's response group with rewards and advantages."""

    prompt: str
    responses: list[TokenLogProbs]
    rewards: list[float]
    advantages: list[float] = field(default_factory=list)
    eps: float = 0.2
    beta: float = 0.04

    def __post_init__(self):
        g = len(self.responses)
        if g < 1:
            raise ValueError("batch needs at least one response")
        if len(self.rewards) != g:
            raise ValueError("rewards must align with responses")
        if not self.advantages:
            self.advantages = group_advantages(self.rewards)
        elif len(self.advantages) != g:
            raise ValueError("advantages must align with responses")

    @property
    def group_size(self) -> int:
        return len(self.responses)


def grpo_objective(batch: GrpoBatch) -> float:
    """Full surrogate: token-mean clipped term minus beta * KL, response-mean.

    The probability ratio is exp(logp_theta - logp_old) per token; the
    advantage is constant across a response's tokens.
    """
    total = 0.0
    for logprobs, advantage in zip(batch.responses, batch.advantages):
        per_token = 0.0
        for lp_theta, lp_old, lp_ref in zip(logprobs.theta, logprobs.old, logprobs.ref):
            ratio = math.exp(lp_theta - lp_old)
            per_token += clipped_token_objective(ratio, advantage, batch.eps)
            per_token -= batch.beta * kl_estimate(lp_ref, lp_theta)
        total += per_token / len(logprobs)
    return total / batch.group_size


CLIP_CHECK_CASES = (
    # ratio, advantage, eps, expected
    (1.5, 1.0, 0.2, 1.2),
    (0.5, -1.0, 0.2, -0.8),
    (1.0, 2.5, 0.2, 2.5),
    (0.9, 1.0, 0.2, 0.9),
    (0.7, 1.0, 0.2, 0.7),
    (0.7, -2.0, 0.2, -1.6),
    (2.0, -0.5, 0.5, -1.0),
    (2.0, 0.5, 0.5, 0.75),
    (1.25, -3.0, 0.1, -3.75),
    (0.5, 0.0, 0.2, 0.0),
)


def self_check(seed: int = 0) -> list[dict]:
    """Fast self-test of the numerics; returns one record per check."""
    from .rng import Pcg32

    rng = Pcg32(seed)
    checks: list[dict] = []

    worst_mean = worst_std = 0.0
    for _ in range(2000):
        g = rng.randint(2, 8)
        rewards = [rng.uniform(-2.0, 2.0) for _ in range(g)]
        adv = group_advantages(rewards)
        mean = sum(adv) / g
        std = math.sqrt(sum(a * a for a in adv) / g)
        worst_mean = max(worst_mean, abs(mean))
        worst_std = max(worst_std, abs(std - 1.0))
    checks.append(
        {
            "name": "advantages zero-mean unit-std",
            "passed": worst_mean < 1e-12 and worst_std < 1e-9,
            "detail": f"max |mean| {worst_mean:.2e}, max |std-1| {worst_std:.2e}",
        }
    )
    checks.append(
        {
            "name": "zero-variance group maps to zeros",
            "passed": group_advantages([0.3, 0.3, 0.3, 0.3]) == [0.0] * 4,
            "detail": "constant rewards",
        }
    )

    kl_min = min(
        kl_estimate(-20.0 * rng.random(), -20.0 * rng.random()) for _ in range(20_000)
    )
    checks.append(
        {
            "name": "KL estimator non-negative",
            "passed": kl_min >= 0.0 and kl_estimate(-1.0, -1.0) == 0.0,
            "detail": f"min over 20000 random pairs {kl_min:.2e}",
        }
    )

    clip_ok = all(
        clipped_token_objective(r, a, e) == expected for r, a, e, expected in CLIP_CHECK_CASES
    )
    checks.append(
        {
            "name": "clipped objective hand table",
            "passed": clip_ok,
            "detail": f"{len(CLIP_CHECK_CASES)} exact cases",
        }
    )

    invariant_ok = True
    for _ in range(50):
        g = rng.randint(2, 5)
        responses = []
        rewards = []
        for _ in range(g):
            n = rng.randint(1, 4)
            mk = lambda: tuple(-3.0 * rng.random() - 0.01 for _ in range(n))
            responses.append(TokenLogProbs(mk(), mk(), mk()))
            rewards.append(rng.uniform(-1.0, 2.0))
        batch = GrpoBatch(prompt="q", responses=responses, rewards=rewards)
        order = list(range(g))
        rng.shuffle(order)
        shuffled = GrpoBatch(
            prompt="q",
            responses=[responses[i] for i in order],
            rewards=[rewards[i] for i in order],
        )
        if abs(grpo_objective(batch) - grpo_objective(shuffled)) > 1e-12:
            invariant_ok = False
            break
    checks.append(
        {
            "name": "objective reorder invariance",
            "passed": invariant_ok,
            "detail": "50 random batches",
        }
    )
    return checks


BATCH_RECORD_FIELDS = ("prompt", "response", "reward", "advantage", "round", "operator", "run_id")


def export_training_batch(
    prompt: str,
    responses: Sequence[str],
    rewards: Sequence[float],
    advantages: Sequence[float],
    destination: Path,
    round_index: int,
    operator: str,
    run_id: str,
) -> int:
    """Append one JSON record per response to the trainer batch file.

    Returns the number of records written; an empty group writes nothing
    and does not touch the file.
    """
    if not (len(responses) == len(rewards) == len(advantages)):
        raise ValueError("responses, rewards and advantages must align")
    if not responses:
        return 0
    destination = Path(destination)
    with destination.open("a", encoding="utf-8") as fp:
        for text, reward, advantage in zip(responses, rewards, advantages):
            record = {
                "prompt": prompt,
                "response": text,
                "reward": reward,
                "advantage": advantage,
                "round": round_index,
                "operator": operator,
                "run_id": run_id,
            }
            fp.write(json.dumps(record, separators=(",", ":")) + "\n")
    return len(responses)
