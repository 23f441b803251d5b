"""Evolutionary operators: selection, base sampling, prompt rendering.

Prompt templates live as text files under ``templates/`` with ``{slot}``
placeholders; the placeholder vocabulary is fixed and checked at import of
the template set, so a typo in a template fails fast instead of producing
a silently broken prompt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

from .pool import Heuristic, HeuristicPool
from .rng import Pcg32


class OperatorKind(str, Enum):
    INITIALIZATION = "initialization"
    INJECTION = "injection"
    REPLACEMENT = "replacement"
    CROSSOVER = "crossover"
    SIMPLIFICATION = "simplification"


# Fixed iteration order keeps weighted draws reproducible.
_DRAW_ORDER = (
    OperatorKind.INJECTION,
    OperatorKind.REPLACEMENT,
    OperatorKind.CROSSOVER,
    OperatorKind.SIMPLIFICATION,
)

REPLACEMENT_INSTRUCTIONS = ("hyperparameters", "instance_dependent", "credit")

_TEMPLATE_FILES = {
    "system": "system.txt",
    "details": "algorithm_details.txt",
    "initialization": "initialization.txt",
    "injection": "injection.txt",
    "replacement_hyperparameters": "replacement_hyperparameters.txt",
    "replacement_instance_dependent": "replacement_instance_dependent.txt",
    "replacement_credit": "replacement_credit.txt",
    "crossover": "crossover.txt",
    "simplification": "simplification.txt",
}

_ALLOWED_PLACEHOLDERS = {
    "name",
    "description",
    "unit",
    "idea",
    "code",
    "performance",
    "components",
    "signature",
    "details",
}

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class TemplateError(Exception):
    """A prompt template is missing or carries an unknown placeholder."""


@lru_cache(maxsize=1)
def load_templates() -> dict[str, str]:
    """Read and validate every prompt template once per process."""
    root = resources.files("heurevo").joinpath("templates")
    templates: dict[str, str] = {}
    for key, filename in _TEMPLATE_FILES.items():
        path = root.joinpath(filename)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise TemplateError(f"missing prompt template {filename!r}") from exc
        unknown = set(_PLACEHOLDER_RE.findall(text)) - _ALLOWED_PLACEHOLDERS
        if unknown:
            raise TemplateError(
                f"template {filename!r} uses unknown placeholders: {sorted(unknown)}"
            )
        templates[key] = text
    return templates


def render(template: str, values: dict[str, str]) -> str:
    """Single-pass placeholder substitution (values are never re-scanned)."""

    def _sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise TemplateError(f"no value supplied for placeholder {{{key}}}")
        return values[key]

    return _PLACEHOLDER_RE.sub(_sub, template)


@dataclass
class OperatorWeights:
    """Sampling weights per operator; injection remembers its base value.

    While the pool is still below the population size the injection weight
    is raised to the maximum of all weights to push exploration; it reverts
    to ``injection_base`` once the pool is full.
    """

    simplification: float = 1.0
    injection: float = 1.0
    replacement: float = 2.0
    crossover: float = 4.0
    injection_base: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.injection_base is None:
            self.injection_base = self.injection
        values = (self.simplification, self.injection, self.replacement, self.crossover)
        if any(w < 0 for w in values):
            raise ValueError("operator weights must be non-negative")
        if all(w == 0 for w in values):
            raise ValueError("at least one operator weight must be positive")

    def value(self, kind: OperatorKind) -> float:
        return {
            OperatorKind.SIMPLIFICATION: self.simplification,
            OperatorKind.INJECTION: self.injection,
            OperatorKind.REPLACEMENT: self.replacement,
            OperatorKind.CROSSOVER: self.crossover,
        }[kind]

    def max_weight(self) -> float:
        return max(self.simplification, self.injection, self.replacement, self.crossover)


class ComponentLog:
    """Append-only history of component descriptions from injection rounds."""

    def __init__(self, items: Sequence[str] = ()):
        self._items: list[str] = list(items)

    def append(self, description: str) -> None:
        self._items.append(description)

    def recent(self, limit: int = 10) -> list[str]:
        return self._items[-limit:]

    def __len__(self) -> int:
        return len(self._items)

    def all(self) -> list[str]:
        return list(self._items)


@dataclass(frozen=True)
class PromptBundle:
    """A rendered prompt: operator, base heuristics, chat messages."""

    operator: OperatorKind
    bases: tuple[Heuristic, ...]
    system_text: str
    user_text: str
    replacement_instruction: Optional[str]
    round: int

    def __post_init__(self):
        n = len(self.bases)
        if self.operator is OperatorKind.INITIALIZATION:
            expected = 0
        elif self.operator is OperatorKind.CROSSOVER:
            expected = 2
        else:
            expected = 1
        if n != expected:
            raise ValueError(
                f"{self.operator.value} prompt needs {expected} base(s), got {n}"
            )


def feasible_operators(pool_size: int) -> set[OperatorKind]:
    """Which operators can run against a pool of the given size."""
    if pool_size < 0:
        raise ValueError("pool_size must be >= 0")
    if pool_size == 0:
        return {OperatorKind.INITIALIZATION}
    ops = {OperatorKind.INJECTION, OperatorKind.REPLACEMENT, OperatorKind.SIMPLIFICATION}
    if pool_size >= 2:
        ops.add(OperatorKind.CROSSOVER)
    return ops


def draw_operator(
    weights: OperatorWeights,
    pool_size: int,
    population_size: int,
    rng: Pcg32,
) -> OperatorKind:
    """Sample the round's operator.

    An empty pool forces initialization and consumes no randomness. While
    the pool is below the population size, injection is boosted to the
    maximum weight.
    """
    feasible = feasible_operators(pool_size)
    if feasible == {OperatorKind.INITIALIZATION}:
        return OperatorKind.INITIALIZATION
    boosted = pool_size < population_size
    injection_weight = weights.max_weight() if boosted else weights.injection_base
    kinds = [k for k in _DRAW_ORDER if k in feasible]
    values = [
        injection_weight if k is OperatorKind.INJECTION else weights.value(k)
        for k in kinds
    ]
    total = sum(values)
    u = rng.random() * total
    acc = 0.0
    for kind, w in zip(kinds, values):
        acc += w
        if u < acc:
            return kind
    return kinds[-1]


def select_bases(op: OperatorKind, pool: HeuristicPool, rng: Pcg32) -> list[Heuristic]:
    """Pick the base heuristics the prompt is built from.

    Crossover flips a fair coin between two parent-selection strategies:
    both parents by performance rank (second resampled until distinct), or
    the second parent by diversity rank against the first.
    """
    if op is OperatorKind.INITIALIZATION:
        return []
    first = pool.rank_sample(rng)
    if op is not OperatorKind.CROSSOVER:
        return [first]
    if len(pool) < 2:
        raise ValueError("crossover needs at least 2 pool entries")
    second: Optional[Heuristic] = None
    if rng.random() <= 0.5:
        for _ in range(len(pool)):
            candidate = pool.rank_sample(rng)
            if candidate.id != first.id:
                second = candidate
                break
        # rank sampling can be confined to a single eligible entry (e.g.
        # population_size == 1); fall through to diversity selection then
    if second is None:
        second = pool.diversity_rank_sample(first, rng)
    return [first, second]


def _render_details(templates: dict[str, str], h: Heuristic) -> str:
    return render(
        templates["details"],
        {"idea": h.idea, "code": h.code, "performance": f"{h.performance:g}"},
    ).strip()


def build_prompt(
    op: OperatorKind,
    bases: Sequence[Heuristic],
    component_log: ComponentLog,
    problem,
    rng: Pcg32,
    round_index: int = 0,
) -> PromptBundle:
    """Render the system and user messages for one operator application.

    ``problem`` supplies ``name``, ``description``, ``unit`` and
    ``signature``. The result is a pure function of the arguments (the rng
    is consumed only by the replacement-instruction draw).
    """
    templates = load_templates()
    for attr in ("name", "description", "unit", "signature"):
        if not getattr(problem, attr, None):
            raise ValueError(f"problem metadata is missing {attr!r}")
    system_text = render(
        templates["system"],
        {"name": problem.name, "description": problem.description, "unit": problem.unit},
    ).strip()

    instruction: Optional[str] = None
    if op is OperatorKind.INITIALIZATION:
        user_text = render(templates["initialization"], {"signature": problem.signature})
    else:
        blocks = [_render_details(templates, h) for h in bases]
        if op is OperatorKind.CROSSOVER:
            details = f"First parent:\n{blocks[0]}\n\nSecond parent:\n{blocks[1]}"
        else:
            details = blocks[0]
        values = {"details": details, "signature": problem.signature}
        if op is OperatorKind.INJECTION:
            recent = component_log.recent(10)
            if recent:
                listing = "\n".join(f"- {c}" for c in recent)
                values["components"] = (
                    f"Previously introduced components (most recent last):\n{listing}\n\n"
                )
            else:
                values["components"] = ""
            key = "injection"
        elif op is OperatorKind.REPLACEMENT:
            instruction = REPLACEMENT_INSTRUCTIONS[rng.randrange(len(REPLACEMENT_INSTRUCTIONS))]
            key = f"replacement_{instruction}"
        elif op is OperatorKind.CROSSOVER:
            key = "crossover"
        else:
            key = "simplification"
        user_text = render(templates[key], values)

    return PromptBundle(
        operator=op,
        bases=tuple(bases),
        system_text=system_text,
        user_text=user_text.strip() + "\n",
        replacement_instruction=instruction,
        round=round_index,
    )


_SENTINEL_RE = re.compile(r"The new component\s+(.+?)\s+has been introduced", re.DOTALL)


def record_component(response_text: str, component_log: ComponentLog) -> Optional[str]:
    """Append the sentinel-wrapped component description, if one parses.

    Only the leftmost sentinel counts. Returns the recorded description or
    None when the response carries no parseable sentinel.
    """
    match = _SENTINEL_RE.search(response_text)
    if not match:
        return None
    description = " ".join(match.group(1).split())
    if not description:
        return None
    component_log.append(description)
    return description
