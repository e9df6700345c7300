"""HTTP facade: generation, execution, rationales, and tuning sessions.

The app is a thin layer over the engine: programs still parse/validate/run
through the same code paths the harness uses, runs persist as canonical JSON
(re-fetching a run returns the stored bytes unchanged), and sessions give the
instruction-tuning loop an append-only history.  Per-session writes hold an
exclusive lock so concurrent iteration submissions serialize cleanly.

Endpoints (JSON unless noted):

    GET  /api/health
    GET  /api/tasks
    POST /api/images                 (PNG/JPEG body)      -> {image_id,...}
    GET  /api/images/{id}            (PNG bytes)
    POST /api/generate               {instruction, task, strategy?, k?, seed?}
    POST /api/execute                {program, input_image_ids, task}
    GET  /api/runs/{id}
    GET  /api/runs/{id}/rationale    (HTML document)
    GET  /api/runs/{id}/rationale.json
    POST /api/sessions               {task, image_ids}
    GET  /api/sessions
    GET  /api/sessions/{id}
    DELETE /api/sessions/{id}
    POST /api/sessions/{id}/iterations  {instruction, seed?}
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .backends import Backend, FixtureBackend, FixtureSet, ProceduralBackend, RemoteBackend
from .dsl import parse_program, validate
from .errors import (
    EmptyProgramError,
    GenerationError,
    ProgramParseError,
    VispipeError,
)
from .generator import (
    CuratedStrategy,
    PromptSpec,
    RandomStrategy,
    ReplayClient,
    ScriptedClient,
    build_prompt,
    generate_program,
    load_pool,
)
from .harness import answer_text, input_names_for
from .interpreter import ExecutionOptions, RunRecord, execute
from .rationale import rationale_cells, render_rationale
from .registry import Registry, default_registry
from .scenes import Scene
from .serialization import ImageStore, canonical_dumps
from .store import BlobStore
from .values import Image, Value

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"


@dataclass
class ServiceState:
    """Everything the handlers share; construct directly in tests or via
    build_state() from a config."""

    pools: dict[str, PromptSpec]
    client: object
    backend: Optional[Backend]
    registry: Registry = field(default_factory=default_registry)
    store: BlobStore = field(default_factory=BlobStore)
    images: ImageStore = field(default_factory=ImageStore)
    options: ExecutionOptions = ExecutionOptions(step_timeout_s=None)
    default_seed: int = 0

    def __post_init__(self):
        self._session_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._session_locks.setdefault(session_id, threading.Lock())


@dataclass
class ServiceConfig:
    """File-based configuration used by the CLI entry point."""

    pools: dict[str, str] = field(default_factory=dict)  # task -> pool path
    client_mode: str = "replay"      # replay:PATH | scripted:PATH
    client_path: Optional[str] = None
    backend_mode: str = "procedural"  # procedural | fixtures:PATH | remote:URL
    backend_path: Optional[str] = None
    scenes: tuple[str, ...] = ()      # scene JSONs preloaded for procedural
    knowledge: dict[str, list[str]] = field(default_factory=dict)
    store_path: str = ":memory:"
    images_dir: Optional[str] = None
    k: int = 3
    host: str = "127.0.0.1"
    port: int = 8000


def make_backend(mode: str, path: Optional[str] = None,
                 knowledge: Optional[dict] = None) -> Backend:
    if mode == "procedural":
        return ProceduralBackend(knowledge=knowledge)
    if mode == "fixtures":
        if not path:
            raise VispipeError("fixtures backend needs a fixture file path")
        return FixtureBackend(FixtureSet.load(path))
    if mode == "remote":
        if not path:
            raise VispipeError("remote backend needs a base URL")
        return RemoteBackend(path)
    raise VispipeError(f"unknown backend mode {mode!r}")


def make_client(mode: str, path: Optional[str]):
    if mode == "replay":
        if not path:
            raise VispipeError("replay client needs a fixture file path")
        return ReplayClient.load(path)
    if mode == "scripted":
        if not path:
            raise VispipeError("scripted client needs a rules file path")
        return ScriptedClient.load(path)
    raise VispipeError(f"unknown client mode {mode!r}")


def build_state(config: ServiceConfig) -> ServiceState:
    backend = make_backend(config.backend_mode, config.backend_path,
                           config.knowledge)
    images = ImageStore(config.images_dir)
    if isinstance(backend, ProceduralBackend):
        for path in config.scenes:
            image = backend.add_scene(Scene.load(path))
            images.put(image)
    pools = {task: PromptSpec(pool=load_pool(path), k=config.k)
             for task, path in config.pools.items()}
    return ServiceState(
        pools=pools,
        client=make_client(config.client_mode, config.client_path),
        backend=backend,
        store=BlobStore(config.store_path),
        images=images,
    )


def _json_response(payload: dict, status: int = 200) -> Response:
    return Response(content=canonical_dumps(payload), status_code=status,
                    media_type="application/json")


def _error_response(status: int, error: VispipeError) -> Response:
    return _json_response({"error": error.to_json()}, status)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="vispipe service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.engine = state

    # -- images -------------------------------------------------------------

    @app.post("/api/images")
    async def upload_image(request: Request):
        data = await request.body()
        if not (data.startswith(PNG_MAGIC) or data.startswith(JPEG_MAGIC)):
            return _json_response(
                {"error": {"code": "unsupported-media-type",
                           "message": "only PNG or JPEG uploads accepted"}}, 415)
        try:
            image = Image.from_png(data)  # PIL sniffs the actual format
        except Exception:
            return _json_response(
                {"error": {"code": "unsupported-media-type",
                           "message": "could not decode image"}}, 415)
        image_id = state.images.put(image)
        return _json_response({"image_id": image_id, "width": image.width,
                               "height": image.height})

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        try:
            data = state.images.get_png(image_id)
        except KeyError:
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown image"}}, 404)
        return Response(content=data, media_type="image/png")

    # -- generation ----------------------------------------------------------

    def _spec_for(task: str, strategy: Optional[str], k: Optional[int],
                  curated_ids: Optional[list[int]]) -> Optional[PromptSpec]:
        base = state.pools.get(task)
        if base is None:
            return None
        out = base
        if k is not None:
            out = PromptSpec(pool=out.pool, k=k, strategy=out.strategy,
                             header=out.header, header_vars=out.header_vars)
        if strategy == "curated":
            ids = tuple(curated_ids or range(min(out.k, len(out.pool))))
            out = PromptSpec(pool=out.pool, k=out.k,
                             strategy=CuratedStrategy(ids), header=out.header,
                             header_vars=out.header_vars)
        elif strategy in (None, "random"):
            out = PromptSpec(pool=out.pool, k=out.k, strategy=RandomStrategy(),
                             header=out.header, header_vars=out.header_vars)
        else:
            raise VispipeError(f"strategy {strategy!r} is not available over "
                               "HTTP (voting happens in the eval harness)")
        return out

    @app.post("/api/generate")
    async def generate(request: Request):
        body = await request.json()
        task = body.get("task", "")
        try:
            spec = _spec_for(task, body.get("strategy"), body.get("k"),
                             body.get("curated_ids"))
        except VispipeError as e:
            return _error_response(400, e)
        if spec is None:
            return _json_response(
                {"error": {"code": "unknown-task",
                           "message": f"no example pool for task {task!r}"}}, 400)
        instruction = body.get("instruction", "")
        seed = int(body.get("seed", state.default_seed))
        try:
            program = generate_program(
                spec, instruction, state.client, seed=seed,
                registry=state.registry, inputs=input_names_for(task))
        except GenerationError as e:
            return _json_response({"error": e.to_json()}, 422)
        except VispipeError as e:
            return _error_response(422, e)
        payload = {"program": program.source.strip()}
        if body.get("include_prompt"):
            payload["prompt_echo"] = build_prompt(spec, instruction, seed)
        return _json_response(payload)

    # -- execution -----------------------------------------------------------

    def _persist_run(run: RunRecord) -> None:
        state.store.put(f"run:{run.run_id}",
                        canonical_dumps(run.to_json(state.images)))
        state.store.put(f"rationale:{run.run_id}", render_rationale(run))
        state.store.put(f"rationalejson:{run.run_id}",
                        canonical_dumps(rationale_cells(run)))

    def _execute_program(source: str, image_ids: list[str], task: str):
        program = parse_program(source)
        names = input_names_for(task)
        if len(image_ids) != len(names):
            raise VispipeError(
                f"task {task!r} needs {len(names)} image(s), got {len(image_ids)}")
        report = validate(program, state.registry, names)
        if not report.ok:
            return None, report
        inputs = {}
        for name, image_id in zip(names, image_ids):
            inputs[name] = Value.image(state.images.get(image_id))
        run = execute(program, inputs, state.registry, state.backend,
                      state.options)
        _persist_run(run)
        return run, report

    @app.post("/api/execute")
    async def execute_endpoint(request: Request):
        body = await request.json()
        task = body.get("task", "qa")
        if task not in ("qa", "pairqa", "tagging", "editing"):
            return _json_response({"error": {"code": "unknown-task",
                                             "message": f"unknown task {task!r}"}},
                                  400)
        try:
            run, report = _execute_program(body.get("program", ""),
                                           body.get("input_image_ids", []), task)
        except (ProgramParseError, EmptyProgramError) as e:
            return _json_response({"error": e.to_json()}, 422)
        except KeyError as e:
            return _json_response({"error": {"code": "not-found",
                                             "message": f"unknown image {e}"}}, 404)
        except VispipeError as e:
            return _error_response(422, e)
        if run is None:
            return _json_response({"error": {"code": "validation-failed",
                                             "report": report.to_json()}}, 422)
        return _json_response(_run_summary(run))

    def _run_summary(run: RunRecord) -> dict:
        summary: dict = {"run_id": run.run_id, "status": run.status,
                         "result": None}
        if run.result is not None:
            summary["result"] = {"kind": run.result.kind.value,
                                 "text": answer_text(run.result)}
            if run.result.kind.value == "image":
                summary["result"]["image_id"] = run.result.data.content_hash
        if run.status != "ok":
            failing = next((t for t in run.traces if t.error), None)
            if failing is not None:
                summary["error"] = failing.error
                summary["failed_step"] = failing.index
        return summary

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        stored = state.store.get(f"run:{run_id}")
        if stored is None:
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown run"}}, 404)
        return Response(content=stored, media_type="application/json")

    @app.get("/api/runs/{run_id}/rationale.json")
    def get_rationale_json(run_id: str):
        stored = state.store.get(f"rationalejson:{run_id}")
        if stored is None:
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown run"}}, 404)
        return Response(content=stored, media_type="application/json")

    @app.get("/api/runs/{run_id}/rationale")
    def get_rationale(run_id: str):
        stored = state.store.get(f"rationale:{run_id}")
        if stored is None:
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown run"}}, 404)
        return Response(content=stored, media_type="text/html")

    # -- sessions ------------------------------------------------------------

    def _load_session(session_id: str) -> Optional[dict]:
        stored = state.store.get(f"session:{session_id}")
        return None if stored is None else json.loads(stored)

    def _save_session(session: dict) -> None:
        state.store.put(f"session:{session['session_id']}",
                        canonical_dumps(session))

    @app.post("/api/sessions")
    async def create_session(request: Request):
        body = await request.json()
        task = body.get("task", "")
        if task not in ("qa", "pairqa", "tagging", "editing"):
            return _json_response({"error": {"code": "unknown-task",
                                             "message": f"unknown task {task!r}"}},
                                  400)
        image_ids = list(body.get("image_ids", []))
        expected = len(input_names_for(task))
        if len(image_ids) != expected:
            return _json_response(
                {"error": {"code": "bad-request",
                           "message": f"task {task!r} needs {expected} image(s)"}},
                400)
        for image_id in image_ids:
            if image_id not in state.images:
                return _json_response({"error": {"code": "not-found",
                                                 "message": f"unknown image "
                                                 f"{image_id}"}}, 404)
        session = {"session_id": uuid.uuid4().hex, "task": task,
                   "image_ids": image_ids, "history": []}
        _save_session(session)
        return _json_response(session)

    @app.get("/api/sessions")
    def list_sessions():
        ids = [k.split(":", 1)[1] for k in state.store.keys("session:")]
        return _json_response({"sessions": ids})

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = _load_session(session_id)
        if session is None:
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown session"}}, 404)
        return _json_response(session)

    @app.delete("/api/sessions/{session_id}")
    def delete_session(session_id: str):
        if not state.store.delete(f"session:{session_id}"):
            return _json_response({"error": {"code": "not-found",
                                             "message": "unknown session"}}, 404)
        return Response(status_code=204)

    @app.post("/api/sessions/{session_id}/iterations")
    async def add_iteration(request: Request, session_id: str):
        body = await request.json()
        instruction = body.get("instruction", "")
        if not instruction.strip():
            return _json_response({"error": {"code": "bad-request",
                                             "message": "instruction is empty"}},
                                  400)
        lock = state.session_lock(session_id)
        with lock:  # iteration appends are strictly ordered per session
            session = _load_session(session_id)
            if session is None:
                return _json_response({"error": {"code": "not-found",
                                                 "message": "unknown session"}},
                                      404)
            task = session["task"]
            spec = state.pools.get(task)
            entry: dict = {"index": len(session["history"]),
                           "instruction": instruction, "program": None,
                           "run_id": None, "status": None, "result": None,
                           "error": None}
            if spec is None:
                entry["status"] = "generation_failed"
                entry["error"] = {"code": "unknown-task",
                                  "message": f"no example pool for {task!r}"}
            else:
                seed = int(body.get("seed", entry["index"]))
                try:
                    program = generate_program(
                        spec, instruction, state.client, seed=seed,
                        registry=state.registry, inputs=input_names_for(task))
                    entry["program"] = program.source.strip()
                    run, _ = _execute_program(program.source,
                                              session["image_ids"], task)
                    assert run is not None  # program already validated
                    summary = _run_summary(run)
                    entry["run_id"] = summary["run_id"]
                    entry["status"] = summary["status"]
                    entry["result"] = summary["result"]
                    if "error" in summary:
                        entry["error"] = summary["error"]
                except GenerationError as e:
                    entry["status"] = "generation_failed"
                    entry["error"] = e.to_json()
                except VispipeError as e:
                    entry["status"] = "failed"
                    entry["error"] = e.to_json()
            session["history"].append(entry)
            _save_session(session)
        return _json_response(entry)

    # -- misc ----------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return _json_response({"ok": True})

    @app.get("/api/tasks")
    def tasks():
        return _json_response({"tasks": sorted(state.pools)})

    return app
