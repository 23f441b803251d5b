"""FastAPI service wrapping the engine.

Every capability of the engine is reachable through these endpoints; the
CLI is a thin client over them. Run execution is synchronous: desk-scale
runs finish in seconds under the replay or mock backends, and clients
driving long runs should raise their request timeout accordingly.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..backends import BackendError
from ..collapse import expected_stagnation_rounds, simulate_stagnation
from ..evaluation import EvalTask, SubprocessEvaluator, TrustedLocalEvaluator
from ..grpo import self_check
from ..journal import JournalError, build_report, read_journal
from ..orchestrator import ConfigError, SeedEvaluationError, config_from_mapping, resume, run
from ..problems import (
    ObpInstance,
    PROBLEMS,
    RoutingInstance,
    generate_obp,
    generate_routing,
    l2_lower_bound,
    optimality_gap,
)
from ..rng import Pcg32
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="heurevo",
        description="LLM-driven evolutionary heuristic search engine",
        version=__version__,
    )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/runs", response_model=schemas.RunResponse)
    def start_run(request: schemas.RunRequest) -> dict:
        cfg = _build_config(request)
        try:
            best = run(cfg)
        except (SeedEvaluationError, BackendError, JournalError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _run_response(cfg, best)

    @app.post("/runs/resume", response_model=schemas.RunResponse)
    def resume_run(request: schemas.ResumeRequest) -> dict:
        cfg = _build_config(request.config)
        journal_path = Path(request.journal_path)
        if not journal_path.exists():
            raise HTTPException(status_code=404, detail=f"no journal at {journal_path}")
        try:
            best = resume(journal_path, cfg)
        except (ConfigError, JournalError, SeedEvaluationError, BackendError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return _run_response(cfg, best)

    @app.post("/heuristics/eval", response_model=schemas.EvalResponse)
    def eval_heuristic(request: schemas.EvalRequest) -> dict:
        if request.problem not in PROBLEMS:
            raise HTTPException(status_code=422, detail=f"unknown problem {request.problem!r}")
        spec = PROBLEMS[request.problem]
        instances = _collect_instances(request)
        if not instances:
            raise HTTPException(status_code=422, detail="no instances supplied or generated")
        task = EvalTask(
            code=request.code,
            problem=request.problem,
            instances=tuple(instances),
            solver_params=request.solver_params,
            seed=request.seed,
            budget_s=request.budget_s,
        )
        if request.evaluator == "worker" or request.problem in ("cvrp", "op"):
            import sys

            evaluator = SubprocessEvaluator(
                request.worker_cmd or [sys.executable, "-m", "heurevo_worker"]
            )
            try:
                result = evaluator.evaluate(task)
            finally:
                evaluator.close()
        else:
            result = TrustedLocalEvaluator().evaluate(task)
        payload: dict = {
            "status": result.status,
            "objectives": list(result.objectives),
            "performance": result.g,
            "error": result.error,
        }
        references = None
        if request.references is not None:
            if len(request.references) != len(instances):
                raise HTTPException(
                    status_code=422, detail="references must align with instances"
                )
            references = [float(r) for r in request.references]
        elif request.problem == "obp":
            references = [float(l2_lower_bound(inst)) for inst in instances]
        if result.status == "ok" and references is not None:
            gaps = [
                optimality_gap(value, ref, spec.direction)
                for value, ref in zip(result.objectives, references)
            ]
            payload["references"] = references
            payload["gaps"] = gaps
            payload["mean_gap"] = sum(gaps) / len(gaps)
        return payload

    @app.post("/instances", response_model=schemas.GenInstancesResponse)
    def gen_instances(request: schemas.GenInstancesRequest) -> dict:
        if request.kind not in PROBLEMS:
            raise HTTPException(status_code=422, detail=f"unknown problem {request.kind!r}")
        documents = []
        for i in range(request.count):
            seed = request.seed + i
            if request.kind == "obp":
                inst = generate_obp(
                    request.n_items, request.capacity, request.shape, request.scale, seed=seed
                )
            else:
                inst = generate_routing(
                    request.kind, request.nodes, seed=seed, maxlen=request.maxlen
                )
            documents.append(inst.to_document())
        return {"instances": documents}

    @app.post("/collapse/simulate", response_model=schemas.CollapseSimResponse)
    def simulate_collapse(request: schemas.CollapseSimRequest) -> dict:
        if request.delta0 <= 0 or request.delta0 >= 1:
            raise HTTPException(status_code=422, detail="delta0 must lie in (0, 1)")
        rng = Pcg32(request.seed, stream=4)
        lengths = simulate_stagnation(request.delta0, request.cap, request.trials, rng)
        empirical = sum(lengths) / len(lengths)
        closed = expected_stagnation_rounds(request.delta0)
        return {
            "trials": request.trials,
            "empirical_mean": empirical,
            "closed_form": closed,
            "relative_error": abs(empirical - closed) / closed,
            "max_length": max(lengths),
            "capped": request.cap is not None,
        }

    @app.post("/grpo/self-check", response_model=schemas.GrpoCheckResponse)
    def grpo_self_check() -> dict:
        checks = self_check()
        return {"passed": all(c["passed"] for c in checks), "checks": checks}

    @app.post("/reports")
    def report(request: schemas.ReportRequest) -> dict:
        path = Path(request.journal_path)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no journal at {path}")
        try:
            return build_report(read_journal(path))
        except JournalError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app


def _build_config(request: schemas.RunRequest):
    try:
        return config_from_mapping(request.model_dump(exclude_none=False))
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _run_response(cfg, best) -> dict:
    journal_path = Path(cfg.output_dir) / "journal.jsonl"
    collapses = [
        r["round"] for r in read_journal(journal_path) if r.get("event") == "collapse"
    ]
    pool_lines = (Path(cfg.output_dir) / "pool.jsonl").read_text(encoding="utf-8").splitlines()
    record = best.to_record()
    return {
        "run_id": cfg.identity_hash(),
        "rounds": cfg.rounds,
        "best": record,
        "pool_size": len([ln for ln in pool_lines if ln]),
        "collapses": collapses,
        "journal_path": str(journal_path),
        "batch_path": str(Path(cfg.output_dir) / "batch.jsonl"),
    }


def _collect_instances(request: schemas.EvalRequest) -> list:
    instances = []
    for doc in request.instances:
        if doc.get("kind") == "obp":
            instances.append(ObpInstance.from_document(doc))
        else:
            instances.append(RoutingInstance.from_document(doc))
    gen = request.generate
    if gen:
        count = int(gen.get("count", 5))
        base_seed = int(gen.get("seed", 1))
        for i in range(count):
            if request.problem == "obp":
                instances.append(
                    generate_obp(
                        int(gen.get("n_items", 1000)),
                        int(gen.get("capacity", 100)),
                        float(gen.get("shape", 3.0)),
                        float(gen.get("scale", 45.0)),
                        seed=base_seed + i,
                    )
                )
            else:
                instances.append(
                    generate_routing(
                        request.problem,
                        int(gen.get("nodes", 50)),
                        seed=base_seed + i,
                        maxlen=gen.get("maxlen"),
                    )
                )
    return instances
