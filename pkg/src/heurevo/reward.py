"""Response diagnosis and scalar reward assignment.

Infeasible responses get a graded penalty that rises toward feasibility:
missing idea -1.0, missing code block -0.95, malformed function -0.9,
runtime error or timeout -0.85, randomness detected -0.75. The randomness
penalty upper-bounds every infeasible reward and scales the duplicate and
degradation branches of the feasible case, so any feasible response beats
any infeasible one.
"""

from __future__ import annotations

import io
import re
import tokenize
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .operators import OperatorKind
from .pool import Heuristic

RANDOMNESS_PENALTY = -0.75

DEFAULT_RANDOMNESS_DENYLIST = (
    "random",
    "np.random",
    "numpy.random",
    "secrets",
    "os.urandom",
    "uuid",
    "time.time",
)


class FeasibilityDiagnosis(Enum):
    MISSING_IDEA = "missing_idea"
    MISSING_CODE_BLOCK = "missing_code_block"
    MALFORMED_FUNCTION = "malformed_function"
    RUNTIME_OR_TIMEOUT = "runtime_or_timeout"
    RANDOMNESS_DETECTED = "randomness_detected"
    FEASIBLE = "feasible"


INFEASIBLE_REWARDS = {
    FeasibilityDiagnosis.MISSING_IDEA: -1.0,
    FeasibilityDiagnosis.MISSING_CODE_BLOCK: -0.95,
    FeasibilityDiagnosis.MALFORMED_FUNCTION: -0.9,
    FeasibilityDiagnosis.RUNTIME_OR_TIMEOUT: -0.85,
    FeasibilityDiagnosis.RANDOMNESS_DETECTED: RANDOMNESS_PENALTY,
}


@dataclass(frozen=True)
class RewardRecord:
    prompt_id: str
    response_index: int
    diagnosis: FeasibilityDiagnosis
    reward: float
    heuristic_id: Optional[str] = None


def _dotted_names(code: str) -> list[str]:
    """Maximal dotted identifier chains, skipping strings and comments."""
    chains: list[str] = []
    current: list[str] = []
    expect_name = False
    try:
        tokens = list(tokenize.generate_tokens(io.StringIO(code).readline))
    except (tokenize.TokenError, SyntaxError, IndentationError):
        # fall back to a lexical scan when the code does not tokenize
        return re.findall(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*", code)
    for tok in tokens:
        if tok.type == tokenize.NAME:
            if expect_name or not current:
                current.append(tok.string)
                expect_name = False
            else:
                chains.append(".".join(current))
                current = [tok.string]
        elif tok.type == tokenize.OP and tok.string == "." and current:
            expect_name = True
        else:
            if current:
                chains.append(".".join(current))
                current = []
            expect_name = False
    if current:
        chains.append(".".join(current))
    return chains


def detect_randomness(code: str, denylist: Sequence[str] = DEFAULT_RANDOMNESS_DENYLIST) -> bool:
    """True iff a denylisted name occurs as whole dotted-name components.

    ``random`` matches ``random.choice`` and the bare module name but not
    ``randomish_score``; ``np.random`` matches ``np.random.rand``.
    """
    entries = [tuple(e.split(".")) for e in denylist]
    for chain in _dotted_names(code):
        parts = tuple(chain.split("."))
        for entry in entries:
            k = len(entry)
            if k > len(parts):
                continue
            if any(parts[i : i + k] == entry for i in range(len(parts) - k + 1)):
                return True
    return False


def diagnose_response(
    parsed,
    eval_result=None,
    denylist: Sequence[str] = DEFAULT_RANDOMNESS_DENYLIST,
) -> FeasibilityDiagnosis:
    """Walk the failure ladder; the first failing check wins.

    ``parsed`` is a ParseResult-like object with ``idea``, ``code`` and
    ``function_name``; ``eval_result`` (when evaluation ran) carries a
    ``status`` of "ok", "runtime_error" or "timeout". The randomness scan
    is static and runs before any evaluation, so ``eval_result`` is None
    both for responses that never reached the worker and for random code.
    """
    if not parsed.idea:
        return FeasibilityDiagnosis.MISSING_IDEA
    if not parsed.code:
        return FeasibilityDiagnosis.MISSING_CODE_BLOCK
    if not parsed.function_name:
        return FeasibilityDiagnosis.MALFORMED_FUNCTION
    if detect_randomness(parsed.code, denylist):
        return FeasibilityDiagnosis.RANDOMNESS_DETECTED
    if eval_result is None or eval_result.status != "ok":
        return FeasibilityDiagnosis.RUNTIME_OR_TIMEOUT
    return FeasibilityDiagnosis.FEASIBLE


def relative_delta(g_new: float, g_base: float) -> float:
    """Relative score gap, clipped to [0, 1]; symmetric in its arguments."""
    denom = min(abs(g_new), abs(g_base))
    if denom == 0:
        return 0.0 if g_new == g_base else 1.0
    return min(1.0, max(0.0, abs(g_new - g_base) / denom))


def assign_reward(
    diagnosis: FeasibilityDiagnosis,
    op: OperatorKind,
    g_new: Optional[float],
    bases: Sequence[Heuristic],
) -> float:
    """Scalar reward for one response.

    Feasible rewards: 0 for initialization (no reference point); otherwise,
    against the best base score g_top: exact duplication of any base score
    earns 0.8 * randomness penalty, a worse score earns
    0.5 * penalty * delta, and a better score earns 1 + delta.
    """
    if diagnosis is not FeasibilityDiagnosis.FEASIBLE:
        return INFEASIBLE_REWARDS[diagnosis]
    if op is OperatorKind.INITIALIZATION:
        return 0.0
    if g_new is None:
        raise ValueError("feasible response requires a score")
    if not bases:
        raise ValueError(f"{op.value} response has no base heuristics")
    g_top = max(h.performance for h in bases)
    if any(h.performance == g_new for h in bases):
        return 0.8 * RANDOMNESS_PENALTY
    delta = relative_delta(g_new, g_top)
    if g_new < g_top:
        return 0.5 * RANDOMNESS_PENALTY * delta
    return 1.0 + delta
