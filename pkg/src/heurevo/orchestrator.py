"""The search loop: operator draw, prompt, sampling, rewards, pool update.

One round draws a feasible operator, renders its prompt, samples G
responses, grades each response (parse, randomness scan, evaluation,
diagnosis, reward), exports the trainer batch, inserts every feasible
heuristic into the pool, and finally advances the stagnation counter and
possibly collapses the pool. Everything observable is journaled; under the
replay backend the whole run is a pure function of (config, corpus, seed).
"""

from __future__ import annotations

import ast
import hashlib
import importlib.util
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .backends import BackendConfig, make_backend, parse_heuristic, sample_responses
from .collapse import CollapseState
from .evaluation import (
    EvalResult,
    EvalTask,
    ScriptedEvaluator,
    SubprocessEvaluator,
    TrustedLocalEvaluator,
)
from .grpo import export_training_batch, group_advantages
from .journal import JournalError, JournalWriter, read_journal
from .operators import (
    ComponentLog,
    OperatorKind,
    OperatorWeights,
    build_prompt,
    draw_operator,
    load_templates,
    record_component,
    select_bases,
)
from .pool import Heuristic, HeuristicPool
from .problems import PROBLEMS, generate_obp, generate_routing, l2_lower_bound
from .reward import (
    DEFAULT_RANDOMNESS_DENYLIST,
    FeasibilityDiagnosis,
    assign_reward,
    detect_randomness,
    diagnose_response,
)
from .rng import Pcg32

JOURNAL_NAME = "journal.jsonl"
BATCH_NAME = "batch.jsonl"
POOL_NAME = "pool.jsonl"

# rng stream ids; distinct streams keep one concern's draws from shifting
# another's, which keeps resumed and uninterrupted runs aligned
_STREAM_OPERATORS = 1
_STREAM_BASES = 2
_STREAM_PROMPT = 3
_STREAM_COLLAPSE = 4


class ConfigError(Exception):
    pass


class SeedEvaluationError(Exception):
    pass


@dataclass
class RunConfig:
    problem: str = "obp"
    rounds: int = 500
    group_size: int = 4
    population_size: int = 10
    weights: OperatorWeights = field(default_factory=OperatorWeights)
    delta0: float = 0.0005
    collapse_cap: Optional[int] = 25
    eval_budget_s: float = 60.0
    seed: int = 0
    backend: BackendConfig = field(default_factory=BackendConfig)
    evaluator: str = "auto"  # auto | local | worker | scripted
    allow_unsafe_local: bool = False
    scores_path: Optional[str] = None
    worker_cmd: Optional[list[str]] = None
    seed_heuristics: list[str] = field(default_factory=list)
    output_dir: str = "runs/latest"
    instance_seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    obp_items: int = 1000
    obp_capacity: int = 100
    weibull_shape: float = 3.0
    weibull_scale: float = 45.0
    nodes: int = 50
    solver_params: dict = field(default_factory=dict)
    advantage_population_std: bool = True
    randomness_denylist: list[str] = field(
        default_factory=lambda: list(DEFAULT_RANDOMNESS_DENYLIST)
    )

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.group_size < 1:
            raise ConfigError("group_size must be >= 1")
        if self.population_size < 1:
            raise ConfigError("population_size must be >= 1")
        if self.eval_budget_s <= 0:
            raise ConfigError("eval_budget_s must be positive")
        if self.evaluator not in ("auto", "local", "worker", "scripted"):
            raise ConfigError(f"unknown evaluator {self.evaluator!r}")
        if self.evaluator == "scripted" and not self.scores_path:
            raise ConfigError("scripted evaluator needs scores_path")

    def identity_hash(self) -> str:
        """Hash of the stream-shaping parameters.

        Excludes the round budget (so a finished run can be extended by
        resume) and all filesystem locations (so journals replay anywhere).
        """
        payload = {
            "problem": self.problem,
            "group_size": self.group_size,
            "population_size": self.population_size,
            "weights": [
                self.weights.simplification,
                self.weights.injection_base,
                self.weights.replacement,
                self.weights.crossover,
            ],
            "delta0": self.delta0,
            "collapse_cap": self.collapse_cap,
            "eval_budget_s": self.eval_budget_s,
            "seed": self.seed,
            "backend_kind": self.backend.kind,
            "evaluator": self.evaluator,
            "instance_seeds": list(self.instance_seeds),
            "obp": [self.obp_items, self.obp_capacity, self.weibull_shape, self.weibull_scale],
            "nodes": self.nodes,
            "solver_params": dict(sorted(self.solver_params.items())),
            "advantage_population_std": self.advantage_population_std,
            "randomness_denylist": list(self.randomness_denylist),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def config_from_mapping(data: dict) -> RunConfig:
    """Build a validated RunConfig from a plain mapping (file or request)."""
    data = dict(data)
    weights = data.pop("weights", None)
    backend = data.pop("backend", None)
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    if weights is not None:
        try:
            cfg.weights = OperatorWeights(**weights)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad operator weights: {exc}") from exc
    if backend is not None:
        try:
            cfg.backend = BackendConfig(**backend)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad backend config: {exc}") from exc
    cfg.validate()
    return cfg


def load_seed_heuristic(path: Path, index: int) -> tuple[str, str]:
    """Read a seed file; the module docstring is the idea, the text the code."""
    code = Path(path).read_text(encoding="utf-8")
    try:
        idea = ast.get_docstring(ast.parse(code))
    except SyntaxError as exc:
        raise SeedEvaluationError(f"seed heuristic {path} does not parse: {exc}") from exc
    if not idea:
        raise SeedEvaluationError(f"seed heuristic {path} needs a leading docstring idea")
    return idea.strip(), code


def _worker_available() -> bool:
    return importlib.util.find_spec("heurevo_worker") is not None


class Orchestrator:
    def __init__(self, cfg: RunConfig, backend=None, evaluator=None):
        cfg.validate()
        load_templates()  # fail fast on a broken prompt template
        self.cfg = cfg
        self.problem = PROBLEMS[cfg.problem]
        self.out_dir = Path(cfg.output_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.run_id = f"{cfg.identity_hash()}"
        self.backend = backend if backend is not None else make_backend(cfg.backend)
        self._owns_evaluator = evaluator is None
        self.evaluator = evaluator if evaluator is not None else self._resolve_evaluator()
        self.instances = self._build_instances()
        self.pool = HeuristicPool(cfg.population_size)
        self.components = ComponentLog()
        self.collapse = CollapseState(delta0=cfg.delta0, cap=cfg.collapse_cap)
        self.rng_ops = Pcg32(cfg.seed, stream=_STREAM_OPERATORS)
        self.rng_bases = Pcg32(cfg.seed, stream=_STREAM_BASES)
        self.rng_prompt = Pcg32(cfg.seed, stream=_STREAM_PROMPT)
        self.rng_collapse = Pcg32(cfg.seed, stream=_STREAM_COLLAPSE)
        self._next_round = 1
        self._journal_initialized = False

    # -- construction helpers -------------------------------------------------

    def _resolve_evaluator(self):
        cfg = self.cfg
        kind = cfg.evaluator
        if kind == "auto":
            if cfg.problem in ("cvrp", "op"):
                kind = "worker"
            elif _worker_available():
                kind = "worker"
            else:
                kind = "local"
        if kind == "scripted":
            return ScriptedEvaluator.from_file(cfg.scores_path)
        if kind == "worker":
            cmd = cfg.worker_cmd or [sys.executable, "-m", "heurevo_worker"]
            return SubprocessEvaluator(cmd)
        if cfg.backend.kind == "http" and not cfg.allow_unsafe_local:
            raise ConfigError(
                "refusing to run model-generated code in-process; use the worker "
                "evaluator or set allow_unsafe_local"
            )
        return TrustedLocalEvaluator()

    def _build_instances(self) -> tuple:
        cfg = self.cfg
        if cfg.evaluator == "scripted":
            return ()
        if cfg.problem == "obp":
            return tuple(
                generate_obp(
                    cfg.obp_items,
                    cfg.obp_capacity,
                    cfg.weibull_shape,
                    cfg.weibull_scale,
                    seed=s,
                )
                for s in cfg.instance_seeds
            )
        return tuple(
            generate_routing(cfg.problem, cfg.nodes, seed=s) for s in cfg.instance_seeds
        )

    def _reference(self) -> Optional[dict]:
        if self.cfg.problem == "obp" and self.instances:
            bounds = [l2_lower_bound(inst) for inst in self.instances]
            return {"lb_mean": sum(bounds) / len(bounds), "lb": bounds}
        return None

    def evaluate_code(self, code: str) -> EvalResult:
        task = EvalTask(
            code=code,
            problem=self.cfg.problem,
            instances=self.instances,
            solver_params=self.cfg.solver_params,
            seed=self.cfg.seed,
            budget_s=self.cfg.eval_budget_s,
        )
        return self.evaluator.evaluate(task)

    # -- journaled state ------------------------------------------------------

    def _rng_snapshot(self) -> dict:
        return {
            "ops": list(self.rng_ops.getstate()),
            "bases": list(self.rng_bases.getstate()),
            "prompt": list(self.rng_prompt.getstate()),
            "collapse": list(self.rng_collapse.getstate()),
        }

    def _restore_rng(self, snapshot: dict) -> None:
        self.rng_ops.setstate(tuple(snapshot["ops"]))
        self.rng_bases.setstate(tuple(snapshot["bases"]))
        self.rng_prompt.setstate(tuple(snapshot["prompt"]))
        self.rng_collapse.setstate(tuple(snapshot["collapse"]))

    def _insert_seeds(self, journal: JournalWriter) -> None:
        for index, path in enumerate(self.cfg.seed_heuristics, start=1):
            idea, code = load_seed_heuristic(Path(path), index)
            result = self.evaluate_code(code)
            if result.status != "ok":
                raise SeedEvaluationError(
                    f"seed heuristic {path} failed evaluation: {result.status}: {result.error}"
                )
            h = Heuristic(
                id=f"seed-{index}",
                idea=idea,
                code=code,
                performance=result.g,
                origin={"operator": "seed", "parents": []},
                created_round=0,
            )
            self.pool.insert(h)
            self.pool.seed_ids.append(h.id)
            journal.write({"event": "seed", "heuristic": h.to_record()})

    # -- the loop -------------------------------------------------------------

    def _play_round(self, t: int, journal: JournalWriter, batch_path: Path) -> None:
        cfg = self.cfg
        op = draw_operator(cfg.weights, len(self.pool), cfg.population_size, self.rng_ops)
        bases = select_bases(op, self.pool, self.rng_bases)
        prompt = build_prompt(
            op, bases, self.components, self.problem, self.rng_prompt, round_index=t
        )
        prompt_text = prompt.system_text + "\n\n" + prompt.user_text
        prompt_hash = hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()[:16]
        journal.write(
            {
                "event": "prompt",
                "round": t,
                "operator": op.value,
                "base_ids": [h.id for h in bases],
                "replacement_instruction": prompt.replacement_instruction,
                "prompt_sha256": prompt_hash,
            }
        )

        texts = sample_responses(self.backend, prompt, cfg.group_size)
        diagnoses: list[FeasibilityDiagnosis] = []
        rewards: list[float] = []
        feasible: list[tuple[int, str, str, float]] = []  # slot, idea, code, g
        components: list[Optional[str]] = []
        for slot, text in enumerate(texts):
            parsed = parse_heuristic(text, self.problem.signature_spec)
            eval_result = None
            if (
                parsed.idea
                and parsed.code
                and parsed.function_name
                and not detect_randomness(parsed.code, cfg.randomness_denylist)
            ):
                eval_result = self.evaluate_code(parsed.code)
            diagnosis = diagnose_response(parsed, eval_result, cfg.randomness_denylist)
            reward = assign_reward(
                diagnosis,
                op,
                eval_result.g if diagnosis is FeasibilityDiagnosis.FEASIBLE else None,
                bases,
            )
            diagnoses.append(diagnosis)
            rewards.append(reward)
            if diagnosis is FeasibilityDiagnosis.FEASIBLE:
                feasible.append((slot, parsed.idea, parsed.code, eval_result.g))
            component = None
            if op is OperatorKind.INJECTION:
                component = record_component(text, self.components)
            components.append(component)

        advantages = group_advantages(rewards, population_std=cfg.advantage_population_std)
        export_training_batch(
            prompt_text, texts, rewards, advantages, batch_path, t, op.value, self.run_id
        )

        new_global_best = False
        inserted: dict[int, Heuristic] = {}
        for slot, idea, code, g in feasible:
            h = Heuristic(
                id=f"h{t:04d}-{slot}",
                idea=idea,
                code=code,
                performance=g,
                origin={"operator": op.value, "parents": [b.id for b in bases]},
                created_round=t,
            )
            improved = self.pool.insert(h)
            new_global_best = new_global_best or improved
            inserted[slot] = h

        for slot in range(cfg.group_size):
            record = {
                "event": "response",
                "round": t,
                "slot": slot,
                "diagnosis": diagnoses[slot].value,
                "reward": rewards[slot],
                "advantage": advantages[slot],
                "heuristic_id": inserted[slot].id if slot in inserted else None,
            }
            if slot in inserted:
                record["heuristic"] = inserted[slot].to_record()
            if components[slot] is not None:
                record["component"] = components[slot]
            journal.write(record)

        pool_full = len(self.pool) >= cfg.population_size
        self.collapse.observe_round(new_global_best, pool_full)
        collapsed = self.collapse.should_collapse(self.rng_collapse)
        if collapsed:
            kept = self.pool.collapse()
            self.collapse.reset()
            journal.write(
                {"event": "collapse", "round": t, "kept_ids": [h.id for h in kept]}
            )
        best = self.pool.best
        journal.write(
            {
                "event": "round",
                "round": t,
                "operator": op.value,
                "new_global_best": new_global_best,
                "best_id": best.id,
                "best_performance": best.performance,
                "pool_size": len(self.pool),
                "collapse_counter": self.collapse.counter,
                "collapsed": collapsed,
                "rng": self._rng_snapshot(),
            }
        )

    def run(self) -> Heuristic:
        cfg = self.cfg
        journal_path = self.out_dir / JOURNAL_NAME
        batch_path = self.out_dir / BATCH_NAME
        resuming = self._journal_initialized
        try:
            with JournalWriter(journal_path, resume=resuming) as journal:
                if not resuming:
                    batch_path.unlink(missing_ok=True)
                    journal.write(
                        {
                            "event": "meta",
                            "version": 1,
                            "run_id": self.run_id,
                            "config_hash": cfg.identity_hash(),
                            "problem": cfg.problem,
                            "seed": cfg.seed,
                            "group_size": cfg.group_size,
                            "population_size": cfg.population_size,
                            "reference": self._reference(),
                        }
                    )
                    self._insert_seeds(journal)
                for t in range(self._next_round, cfg.rounds + 1):
                    self._play_round(t, journal, batch_path)
        finally:
            self.close()
        with (self.out_dir / POOL_NAME).open("w", encoding="utf-8") as fp:
            self.pool.dump_snapshot(fp)
        if not len(self.pool):
            raise RuntimeError("run finished without a single feasible heuristic")
        return self.pool.best

    def close(self) -> None:
        """Release an evaluator this orchestrator created itself."""
        if self._owns_evaluator and hasattr(self.evaluator, "close"):
            self.evaluator.close()


def run(cfg: RunConfig, backend=None, evaluator=None) -> Heuristic:
    return Orchestrator(cfg, backend=backend, evaluator=evaluator).run()


def resume(journal_path: Path, cfg: RunConfig, backend=None, evaluator=None) -> Heuristic:
    """Rebuild state from a journal and continue to the configured rounds.

    The journal's config hash must match; trailing records of an
    interrupted round are dropped before appending.
    """
    journal_path = Path(journal_path)
    records = read_journal(journal_path)
    if not records or records[0].get("event") != "meta":
        raise JournalError("journal has no meta record")
    meta = records[0]
    if meta.get("config_hash") != cfg.identity_hash():
        raise ConfigError(
            "journal was produced by a different configuration "
            f"({meta.get('config_hash')} != {cfg.identity_hash()})"
        )

    last_round_idx = None
    for i, record in enumerate(records):
        if record.get("event") == "round":
            last_round_idx = i
    orch = Orchestrator(cfg, backend=backend, evaluator=evaluator)
    orch._journal_initialized = True

    if last_round_idx is None:
        kept = records[: 1 + sum(1 for r in records[1:] if r.get("event") == "seed")]
    else:
        kept = records[: last_round_idx + 1]
    if len(kept) < len(records):
        _truncate_journal(journal_path, len(kept))
    last_round = kept[last_round_idx]["round"] if last_round_idx is not None else 0
    _trim_batch(orch.out_dir / BATCH_NAME, last_round)

    for record in kept[1:]:
        event = record.get("event")
        if event == "seed":
            h = Heuristic.from_record(record["heuristic"])
            orch.pool.insert(h)
            orch.pool.seed_ids.append(h.id)
        elif event == "response":
            if record.get("heuristic"):
                orch.pool.insert(Heuristic.from_record(record["heuristic"]))
            if record.get("component"):
                orch.components.append(record["component"])
        elif event == "collapse":
            orch.pool.collapse()
        elif event == "round":
            orch.collapse.counter = record["collapse_counter"]
            orch._restore_rng(record["rng"])
            orch._next_round = record["round"] + 1

    if orch._next_round > cfg.rounds:
        orch.close()
        if not len(orch.pool):
            raise RuntimeError("journal contains no feasible heuristic")
        return orch.pool.best
    return orch.run()


def _truncate_journal(path: Path, keep_records: int) -> None:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln]
    path.write_text("".join(line + "\n" for line in lines[:keep_records]), encoding="utf-8")


def _trim_batch(path: Path, last_round: int) -> None:
    """Drop trainer-batch records from rounds beyond the last journaled one."""
    if not path.exists():
        return
    kept = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if json.loads(line).get("round", 0) <= last_round:
            kept.append(line)
    path.write_text("".join(line + "\n" for line in kept), encoding="utf-8")
