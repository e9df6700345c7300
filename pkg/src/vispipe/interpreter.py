"""Step-by-step program execution.

The interpreter seeds the state with the inputs, walks the program one step
at a time, resolves each step's arguments (literals converted, variable
references looked up, declared defaults applied), invokes the module, and
binds the output.  Execution halts at the first error so each failure is
attributable to exactly one step; the RunRecord keeps the traces gathered up
to that point.

The run's result is the output of the last RESULT step when one exists, else
the final step's output (generated programs occasionally omit RESULT).

Run IDs are content hashes of (program source, inputs), which keeps repeated
runs and persisted artifacts byte-identical; wall-clock timings live only on
the in-memory traces and stay out of the serialized record.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Optional

from .backends import Backend, ListConfig
from .dsl import (
    BooleanLiteral,
    NoneLiteral,
    NumberLiteral,
    Program,
    ProgramStep,
    TextLiteral,
    VarRef,
    render_step,
)
from .errors import (
    MissingArgument,
    StepTimeout,
    TypeMismatch,
    UnknownArgument,
    VispipeError,
)
from .registry import ModuleContext, ModuleImpl, ModuleSignature, Registry
from .serialization import ImageStore, value_to_json
from .values import ProgramState, Value


@dataclass
class StepTrace:
    index: int
    step_text: str
    module: str
    args: dict[str, Value]
    output: Optional[Value] = None
    summary: str = ""
    wall_ms: float = 0.0
    error: Optional[dict] = None

    def to_json(self, images: Optional[ImageStore] = None,
                include_timing: bool = False) -> dict:
        out = {
            "index": self.index,
            "step": self.step_text,
            "module": self.module,
            "args": {name: value_to_json(v, images)
                     for name, v in self.args.items()},
            "output": None if self.output is None
            else value_to_json(self.output, images),
            "summary": self.summary,
            "error": self.error,
        }
        if include_timing:
            out["wall_ms"] = self.wall_ms
        return out


@dataclass
class RunRecord:
    run_id: str
    program_source: str
    inputs: dict[str, Value]
    traces: list[StepTrace] = field(default_factory=list)
    result: Optional[Value] = None
    status: str = "ok"  # ok | failed

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self, images: Optional[ImageStore] = None,
                include_timing: bool = False) -> dict:
        return {
            "run_id": self.run_id,
            "program": self.program_source,
            "inputs": {name: value_to_json(v, images)
                       for name, v in self.inputs.items()},
            "traces": [t.to_json(images, include_timing) for t in self.traces],
            "result": None if self.result is None
            else value_to_json(self.result, images),
            "status": self.status,
        }


@dataclass(frozen=True)
class ExecutionOptions:
    step_timeout_s: Optional[float] = 30.0  # guards remote backends
    list_config: ListConfig = field(default_factory=ListConfig)


def run_id_for(program_source: str, inputs: dict[str, Value]) -> str:
    h = hashlib.sha256()
    h.update(program_source.encode())
    for name in sorted(inputs):
        h.update(b"\x00" + name.encode() + b"\x00")
        value = inputs[name]
        h.update(repr(value_to_json(value)).encode())
    return "run-" + h.hexdigest()[:16]


def resolve_args(step: ProgramStep, state: ProgramState,
                 signature: ModuleSignature, step_index: int = 0) -> dict[str, Value]:
    """Turn a step's literal/VarRef arguments into Values per the signature."""
    declared = {a.name: a for a in signature.args}
    resolved: dict[str, Value] = {}
    for name, argv in step.args:
        spec = declared.get(name)
        if spec is None:
            raise UnknownArgument(
                f"module {signature.name} has no argument {name!r}")
        if isinstance(argv, TextLiteral):
            value = Value.text(argv.value)
        elif isinstance(argv, NumberLiteral):
            value = Value.number(argv.value)
        elif isinstance(argv, BooleanLiteral):
            value = Value.boolean(argv.value)
        elif isinstance(argv, NoneLiteral):
            value = Value.null()
        else:
            value = state.lookup(argv.name, step_index)
        if not spec.accepts(value.kind):
            raise TypeMismatch(name, spec.kinds_text(), value.kind.value)
        resolved[name] = value
    for spec in signature.args:
        if spec.name in resolved:
            continue
        if spec.required:
            raise MissingArgument(
                f"module {signature.name} requires argument {spec.name!r}")
        resolved[spec.name] = spec.default if spec.default is not None \
            else Value.null()
    return resolved


def _invoke(impl: ModuleImpl, args: dict[str, Value], ctx: ModuleContext,
            timeout: Optional[float]) -> Value:
    if timeout is None:
        return impl.execute(args, ctx)
    with ThreadPoolExecutor(max_workers=1) as pool:
        future = pool.submit(impl.execute, args, ctx)
        try:
            return future.result(timeout=timeout)
        except FutureTimeout:
            future.cancel()
            raise StepTimeout(
                f"step exceeded {timeout:g}s timeout") from None


def _error_json(e: Exception) -> dict:
    if isinstance(e, VispipeError):
        return e.to_json()
    return {"code": "internal-error", "message": f"{type(e).__name__}: {e}"}


def execute(program: Program, inputs: dict[str, Value], registry: Registry,
            backend: Optional[Backend] = None,
            options: ExecutionOptions = ExecutionOptions()) -> RunRecord:
    """Run a validated program; never raises for step-level failures."""
    source = program.source or "\n".join(render_step(s) for s in program.steps)
    record = RunRecord(run_id=run_id_for(source, inputs),
                       program_source=source, inputs=dict(inputs))
    state = ProgramState(inputs)
    result_value: Optional[Value] = None
    saw_result_step = False
    for index, step in enumerate(program.steps):
        trace = StepTrace(index=index, step_text=render_step(step),
                          module=step.module.upper(), args={})
        record.traces.append(trace)
        started = time.perf_counter()
        try:
            impl = registry.resolve(step.module)
            ctx = ModuleContext(state=state, backend=backend, step_index=index,
                                list_config=options.list_config)
            args = resolve_args(step, state, impl.signature, index)
            trace.args = args
            output = _invoke(impl, args, ctx, options.step_timeout_s)
            state.bind(step.output, output)
            trace.output = output
            trace.summary = impl.summarize(args, output)
            if impl.signature.name.upper() == "RESULT":
                result_value = output
                saw_result_step = True
            elif not saw_result_step:
                result_value = output
        except Exception as e:  # noqa: BLE001 - faults become failed traces
            trace.error = _error_json(e)
            record.status = "failed"
            record.result = None
            trace.wall_ms = (time.perf_counter() - started) * 1000.0
            return record
        trace.wall_ms = (time.perf_counter() - started) * 1000.0
    record.result = result_value
    return record
