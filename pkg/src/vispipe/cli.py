"""Command-line interface.

    vispipe eval   --task qa --dataset data.json --pool pool.json \
                   --client replay:completions.json --backend procedural \
                   --strategy voting --k 3 --runs 5 --seed 0 --out out/
    vispipe run    --program prog.vp --image IMAGE=scene.json --backend procedural
    vispipe judge  report.json --id e1 --verdict correct
    vispipe render-scene scene.json out.png
    vispipe serve  --pool tagging=pool.json --scene scene.json ...
"""

from __future__ import annotations

import json
import sys

import click

from .backends import ProceduralBackend
from .dsl import parse_program, validate
from .errors import VispipeError
from .generator import (
    CuratedStrategy,
    PromptSpec,
    RandomStrategy,
    VotingStrategy,
    load_pool,
)
from .harness import input_names_for, load_dataset, record_judgment, run_eval
from .interpreter import execute
from .rationale import render_rationale
from .registry import default_registry
from .scenes import Scene, render_scene
from .service import ServiceConfig, build_state, create_app, make_backend, make_client
from .values import Image, Value


def _parse_backend(spec: str, knowledge=None):
    if spec == "procedural":
        return make_backend("procedural", knowledge=knowledge)
    if ":" in spec:
        mode, path = spec.split(":", 1)
        if mode in ("fixtures", "remote"):
            return make_backend(mode, path, knowledge)
    raise click.BadParameter(
        "backend must be 'procedural', 'fixtures:FILE', or 'remote:URL'")


def _parse_client(spec: str):
    if ":" not in spec:
        raise click.BadParameter("client must be 'replay:FILE' or 'scripted:FILE'")
    mode, path = spec.split(":", 1)
    return make_client(mode, path)


@click.group()
def main():
    """Visual-program engine: generate, execute, evaluate."""


@main.command("eval")
@click.option("--task", type=click.Choice(["qa", "pairqa", "tagging", "editing"]),
              required=True)
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True),
              help="In-context example pool JSON.")
@click.option("--client", "client_spec", required=True,
              help="replay:FILE or scripted:FILE completion source.")
@click.option("--strategy", type=click.Choice(["random", "curated", "voting"]),
              default="random", show_default=True)
@click.option("--k", type=int, default=3, show_default=True,
              help="In-context examples per prompt.")
@click.option("--runs", type=int, default=5, show_default=True,
              help="Voting runs (voting strategy only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--curated-ids", default=None,
              help="Comma-separated pool indices for the curated strategy.")
@click.option("--backend", "backend_spec", default="procedural",
              show_default=True, help="procedural, fixtures:FILE, remote:URL.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def eval_command(task, dataset_path, pool_path, client_spec, strategy, k, runs,
                 seed, curated_ids, backend_spec, out_dir):
    """Batch-evaluate a dataset: generate, execute, score, write report."""
    dataset = load_dataset(dataset_path)
    if dataset.task != task:
        raise click.BadParameter(
            f"dataset is task {dataset.task!r}, not {task!r}")
    if strategy == "curated":
        ids = tuple(int(x) for x in (curated_ids or "").split(",") if x != "")
        strat = CuratedStrategy(ids)
    elif strategy == "voting":
        strat = VotingStrategy(runs=runs)
    else:
        strat = RandomStrategy()
    spec = PromptSpec(pool=load_pool(pool_path), k=k, strategy=strat)
    client = _parse_client(client_spec)
    backend = _parse_backend(backend_spec, knowledge=dataset.knowledge)
    report = run_eval(dataset, spec, client, backend, out_dir, seed=seed)
    click.echo(json.dumps(report["aggregates"], indent=2, sort_keys=True))
    click.echo(f"report: {out_dir}/report.json")


@main.command("run")
@click.option("--program", "program_path", required=True,
              type=click.Path(exists=True, allow_dash=True))
@click.option("--image", "images", multiple=True,
              help="NAME=path bindings; scene JSONs are rendered.")
@click.option("--backend", "backend_spec", default="procedural",
              show_default=True)
@click.option("--rationale", "rationale_path", default=None,
              type=click.Path(), help="Write the HTML rationale here.")
def run_command(program_path, images, backend_spec, rationale_path):
    """Execute one program against named input images."""
    if program_path == "-":
        source = sys.stdin.read()
    else:
        with open(program_path, "r", encoding="utf-8") as f:
            source = f.read()
    program = parse_program(source)
    backend = _parse_backend(backend_spec)
    inputs = {}
    for binding in images:
        if "=" not in binding:
            raise click.BadParameter(f"--image needs NAME=path, got {binding!r}")
        name, path = binding.split("=", 1)
        if path.endswith(".json"):
            scene = Scene.load(path)
            image = backend.add_scene(scene) \
                if isinstance(backend, ProceduralBackend) else render_scene(scene)
        else:
            with open(path, "rb") as f:
                image = Image.from_png(f.read())
        inputs[name] = Value.image(image)
    registry = default_registry()
    report = validate(program, registry, list(inputs))
    if not report.ok:
        for issue in report.issues:
            click.echo(f"validation: step {issue.step_index}: {issue.message}",
                       err=True)
        sys.exit(2)
    record = execute(program, inputs, registry, backend)
    for trace in record.traces:
        status = "ERROR" if trace.error else "ok"
        click.echo(f"[{trace.index}] {trace.step_text}  ({status}) "
                   f"{trace.summary or (trace.error or {}).get('message', '')}")
    if rationale_path:
        with open(rationale_path, "w", encoding="utf-8") as f:
            f.write(render_rationale(record))
        click.echo(f"rationale: {rationale_path}")
    if record.status == "ok":
        click.echo(f"result: {record.result.render_short()}")
    else:
        sys.exit(1)


@main.command("judge")
@click.argument("report_path", type=click.Path(exists=True))
@click.option("--id", "record_id", required=True)
@click.option("--verdict", type=click.Choice(["correct", "incorrect"]),
              required=True)
def judge_command(report_path, record_id, verdict):
    """Record a manual judgment for one editing prediction."""
    report = record_judgment(report_path, record_id, verdict)
    click.echo(json.dumps(report["aggregates"], indent=2, sort_keys=True))


@main.command("render-scene")
@click.argument("scene_path", type=click.Path(exists=True))
@click.argument("out_path", type=click.Path())
def render_scene_command(scene_path, out_path):
    """Render a synthetic scene JSON to a PNG."""
    image = render_scene(Scene.load(scene_path))
    with open(out_path, "wb") as f:
        f.write(image.to_png())
    click.echo(f"{image.width}x{image.height} -> {out_path}")


@main.command("serve")
@click.option("--pool", "pools", multiple=True,
              help="task=pool.json (repeatable).")
@click.option("--client", "client_spec", default=None,
              help="replay:FILE or scripted:FILE.")
@click.option("--backend", "backend_spec", default="procedural",
              show_default=True)
@click.option("--scene", "scene_paths", multiple=True,
              help="Scene JSONs preloaded into the procedural backend.")
@click.option("--knowledge", "knowledge_path", default=None,
              type=click.Path(exists=True),
              help="JSON map of knowledge query -> items.")
@click.option("--store", "store_path", default=":memory:", show_default=True)
@click.option("--images-dir", default=None, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
def serve_command(pools, client_spec, backend_spec, scene_paths, knowledge_path,
                  store_path, images_dir, host, port, k):
    """Run the HTTP service."""
    import uvicorn

    pool_map = {}
    for entry in pools:
        if "=" not in entry:
            raise click.BadParameter(f"--pool needs task=path, got {entry!r}")
        task, path = entry.split("=", 1)
        pool_map[task] = path
    knowledge = {}
    if knowledge_path:
        with open(knowledge_path, "r", encoding="utf-8") as f:
            knowledge = json.load(f)
    if backend_spec == "procedural":
        backend_mode, backend_path = "procedural", None
    else:
        backend_mode, backend_path = backend_spec.split(":", 1)
    client_mode, client_path = ("replay", None)
    if client_spec:
        client_mode, client_path = client_spec.split(":", 1)
    config = ServiceConfig(
        pools=pool_map, client_mode=client_mode, client_path=client_path,
        backend_mode=backend_mode, backend_path=backend_path,
        scenes=tuple(scene_paths), knowledge=knowledge,
        store_path=store_path, images_dir=images_dir, k=k,
        host=host, port=port)
    app = create_app(build_state(config))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
