"""LLM-driven evolutionary heuristic search engine.

The engine evolves a pool of heuristics through operator-structured
prompts, grades every model response with a graded reward, exports
trainer-ready batches with group-normalized advantages, and scores
heuristics on four benchmark problems.
"""

__version__ = "0.1.0"

from .collapse import CollapseState, expected_stagnation_rounds
from .grpo import GrpoBatch, TokenLogProbs, group_advantages, grpo_objective
from .operators import ComponentLog, OperatorKind, OperatorWeights, PromptBundle
from .orchestrator import Orchestrator, RunConfig, resume, run
from .pool import Heuristic, HeuristicPool, diversity, idea_tokens
from .problems import PROBLEMS, generate_obp, generate_routing, l2_lower_bound
from .reward import FeasibilityDiagnosis, assign_reward, detect_randomness, relative_delta
from .rng import Pcg32

__all__ = [
    "CollapseState",
    "ComponentLog",
    "FeasibilityDiagnosis",
    "GrpoBatch",
    "Heuristic",
    "HeuristicPool",
    "OperatorKind",
    "OperatorWeights",
    "Orchestrator",
    "PROBLEMS",
    "Pcg32",
    "PromptBundle",
    "RunConfig",
    "TokenLogProbs",
    "assign_reward",
    "detect_randomness",
    "diversity",
    "expected_stagnation_rounds",
    "generate_obp",
    "generate_routing",
    "group_advantages",
    "grpo_objective",
    "idea_tokens",
    "l2_lower_bound",
    "relative_delta",
    "resume",
    "run",
]
