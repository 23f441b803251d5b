"""Command-line client for the engine service.

Every subcommand issues HTTP requests against the service API: a remote
instance when --server is given, otherwise an in-process application over
an ASGI transport, so the CLI works standalone while all logic stays
behind the endpoints. Exit codes: 0 success, 1 usage error, 2 runtime
failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click
import httpx
import yaml


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    # no server given: dispatch against the app in-process through the
    # sync-to-ASGI bridge, so the CLI works standalone
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), base_url="http://heurevo.local")


class CliRuntimeError(click.ClickException):
    exit_code = 2


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise CliRuntimeError(f"request failed: {exc}")
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except json.JSONDecodeError:
            detail = response.text
        raise CliRuntimeError(f"{path} -> {response.status_code}: {detail}")
    return response.json()


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; in-process when omitted.")
@click.pass_context
def cli(ctx, server):
    """Evolutionary heuristic search engine."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@cli.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML run config; flags override file keys.")
@click.option("--problem", type=click.Choice(["obp", "tsp", "cvrp", "op"]), default=None)
@click.option("--rounds", "-T", type=int, default=None)
@click.option("--group-size", "-G", type=int, default=None)
@click.option("--population", type=int, default=None)
@click.option("--delta0", type=float, default=None)
@click.option("--cap", type=int, default=None)
@click.option("--budget", type=float, default=None, help="Per-heuristic evaluation budget in seconds.")
@click.option("--seed", type=int, default=None)
@click.option("--backend", type=click.Choice(["http", "replay", "mock"]), default=None)
@click.option("--corpus", type=click.Path(exists=True), default=None, help="Replay corpus file.")
@click.option("--endpoint", default=None, help="Chat-completion endpoint for the http backend.")
@click.option("--model", default=None)
@click.option("--evaluator", type=click.Choice(["auto", "local", "worker", "scripted"]), default=None)
@click.option("--scores", type=click.Path(exists=True), default=None, help="Scripted evaluator score map.")
@click.option("--seed-heuristic", "seed_heuristics", multiple=True, type=click.Path(exists=True))
@click.option("--out", default=None, help="Run output directory (journal, batch, pool).")
@click.pass_context
def run_cmd(ctx, config_path, problem, rounds, group_size, population, delta0, cap,
            budget, seed, backend, corpus, endpoint, model, evaluator, scores,
            seed_heuristics, out):
    """Execute a full search run."""
    payload: dict = {}
    if config_path:
        payload = yaml.safe_load(Path(config_path).read_text(encoding="utf-8")) or {}
    overrides = {
        "problem": problem,
        "rounds": rounds,
        "group_size": group_size,
        "population_size": population,
        "delta0": delta0,
        "collapse_cap": cap,
        "eval_budget_s": budget,
        "seed": seed,
        "evaluator": evaluator,
        "scores_path": scores,
        "output_dir": out,
    }
    payload.update({k: v for k, v in overrides.items() if v is not None})
    if seed_heuristics:
        payload["seed_heuristics"] = [str(p) for p in seed_heuristics]
    backend_cfg = dict(payload.get("backend") or {})
    for key, value in (("kind", backend), ("corpus_path", corpus),
                       ("endpoint", endpoint), ("model", model)):
        if value is not None:
            backend_cfg[key] = value
    if backend_cfg:
        payload["backend"] = backend_cfg

    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/runs", payload)
    best = result["best"]
    click.echo(f"run {result['run_id']} finished after {result['rounds']} rounds")
    click.echo(f"pool size {result['pool_size']}, collapses at rounds {result['collapses'] or 'none'}")
    click.echo(f"journal: {result['journal_path']}")
    click.echo(f"trainer batch: {result['batch_path']}")
    click.echo(f"best heuristic {best['id']} performance {best['performance']:.6g}")
    click.echo(best["idea"])


@cli.command("resume")
@click.argument("journal", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--rounds", "-T", type=int, default=None, help="Extend the run to this many rounds.")
@click.pass_context
def resume_cmd(ctx, journal, config_path, rounds):
    """Continue an interrupted run from its journal."""
    payload = yaml.safe_load(Path(config_path).read_text(encoding="utf-8")) or {}
    if rounds is not None:
        payload["rounds"] = rounds
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/runs/resume", {"journal_path": str(journal), "config": payload})
    best = result["best"]
    click.echo(f"resumed to round {result['rounds']}")
    click.echo(f"best heuristic {best['id']} performance {best['performance']:.6g}")


@cli.command("eval")
@click.argument("heuristic_file", type=click.Path(exists=True))
@click.option("--problem", type=click.Choice(["obp", "tsp", "cvrp", "op"]), default="obp")
@click.option("--instances", "instance_files", multiple=True, type=click.Path(exists=True))
@click.option("--generate", "generate_count", type=int, default=None,
              help="Generate this many instances instead of reading files.")
@click.option("--gen-seed", type=int, default=1)
@click.option("--n-items", type=int, default=1000)
@click.option("--capacity", type=int, default=100)
@click.option("--nodes", type=int, default=50)
@click.option("--budget", type=float, default=60.0)
@click.option("--evaluator", type=click.Choice(["local", "worker"]), default="local")
@click.option("--ants", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--reference", "references", multiple=True, type=float,
              help="Per-instance reference objective for gap reporting.")
@click.pass_context
def eval_cmd(ctx, heuristic_file, problem, instance_files, generate_count, gen_seed,
             n_items, capacity, nodes, budget, evaluator, ants, iterations, references):
    """Score one heuristic file on a problem."""
    code = Path(heuristic_file).read_text(encoding="utf-8")
    payload: dict = {
        "code": code,
        "problem": problem,
        "budget_s": budget,
        "evaluator": evaluator,
        "instances": [json.loads(Path(p).read_text(encoding="utf-8")) for p in instance_files],
    }
    solver_params = {}
    if ants is not None:
        solver_params["ants"] = ants
    if iterations is not None:
        solver_params["iterations"] = iterations
    if solver_params:
        payload["solver_params"] = solver_params
    if references:
        payload["references"] = list(references)
    if generate_count is not None:
        payload["generate"] = {
            "count": generate_count,
            "seed": gen_seed,
            "n_items": n_items,
            "capacity": capacity,
            "nodes": nodes,
        }
    if not payload["instances"] and generate_count is None:
        raise click.UsageError("supply --instances files or --generate N")
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/heuristics/eval", payload)
    if result["status"] != "ok":
        raise CliRuntimeError(f"evaluation {result['status']}: {result.get('error')}")
    for i, objective in enumerate(result["objectives"]):
        line = f"instance {i + 1}: objective {objective:.6g}"
        if result.get("gaps"):
            line += f", reference {result['references'][i]:.6g}, gap {result['gaps'][i] * 100:.2f}%"
        click.echo(line)
    click.echo(f"aggregate performance g = {result['performance']:.6g}")
    if result.get("mean_gap") is not None:
        click.echo(f"mean gap {result['mean_gap'] * 100:.2f}%")


@cli.command("gen-instances")
@click.option("--kind", type=click.Choice(["obp", "tsp", "cvrp", "op"]), default="obp")
@click.option("--count", type=int, default=5)
@click.option("--seed", type=int, default=1)
@click.option("--n-items", type=int, default=1000)
@click.option("--capacity", type=int, default=100)
@click.option("--shape", type=float, default=3.0)
@click.option("--scale", type=float, default=45.0)
@click.option("--nodes", type=int, default=50)
@click.option("--maxlen", type=float, default=None)
@click.option("--out", type=click.Path(), required=True, help="Directory for instance files.")
@click.pass_context
def gen_instances_cmd(ctx, kind, count, seed, n_items, capacity, shape, scale, nodes, maxlen, out):
    """Generate benchmark instances and write them as files."""
    payload = {
        "kind": kind, "count": count, "seed": seed, "n_items": n_items,
        "capacity": capacity, "shape": shape, "scale": scale, "nodes": nodes,
        "maxlen": maxlen,
    }
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/instances", payload)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, doc in enumerate(result["instances"], start=1):
        path = out_dir / f"{kind}_{i:04d}.json"
        path.write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
        click.echo(str(path))


@cli.command("simulate-collapse")
@click.option("--delta0", type=float, default=0.0005)
@click.option("--cap", type=int, default=None)
@click.option("--trials", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.pass_context
def simulate_collapse_cmd(ctx, delta0, cap, trials, seed):
    """Monte Carlo of the stagnation process against the closed form."""
    payload = {"delta0": delta0, "cap": cap, "trials": trials, "seed": seed}
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/collapse/simulate", payload)
    click.echo(f"trials: {result['trials']}")
    click.echo(f"empirical mean stagnation: {result['empirical_mean']:.4f}")
    click.echo(f"closed form sqrt(pi/(2*delta0)): {result['closed_form']:.4f}")
    click.echo(f"relative error: {result['relative_error'] * 100:.2f}%")
    click.echo(f"longest trajectory: {result['max_length']}")


@cli.command("grpo-check")
@click.pass_context
def grpo_check_cmd(ctx):
    """Self-test of the policy-optimization numerics."""
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/grpo/self-check", {})
    for check in result["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        click.echo(f"[{status}] {check['name']}: {check['detail']}")
    if not result["passed"]:
        raise CliRuntimeError("numerics self-check failed")
    click.echo("all checks passed")


@cli.command("report")
@click.argument("journal", type=click.Path(exists=True))
@click.pass_context
def report_cmd(ctx, journal):
    """Summarize a run journal."""
    with _client(ctx.obj["server"]) as client:
        result = _post(client, "/reports", {"journal_path": str(journal)})
    click.echo(f"run {result['run_id']} on {result['problem']}: {result['rounds']} rounds, "
               f"{result['responses']} responses")
    click.echo(f"diagnoses: {json.dumps(result['diagnosis_counts'], sort_keys=True)}")
    click.echo(f"collapses at rounds: {result['collapses'] or 'none'}")
    trajectory = result["trajectory"]
    step = max(1, len(trajectory) // 20)
    shown = trajectory[::step]
    if trajectory and shown[-1] != trajectory[-1]:
        shown.append(trajectory[-1])
    for point in shown:
        line = (f"round {point['round']:>4}  best {point['best_id']:<12} "
                f"g = {point['best_performance']:.6g}  pool {point['pool_size']}")
        if "gap" in point:
            line += f"  gap {point['gap'] * 100:.2f}%"
        click.echo(line)
    best = result["best"]
    if best:
        click.echo(f"best: {best['id']} (g = {best['performance']:.6g})")


@cli.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.Abort:
        click.echo("aborted", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
