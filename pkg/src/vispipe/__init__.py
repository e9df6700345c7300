"""vispipe: a modular visual-program engine.

Programs are straight-line sequences of module invocations written in a small
step language, generated from natural-language instructions by a few-shot
completion client, executed over images against pluggable model backends, and
summarized step by step into self-contained visual rationales.
"""

from .values import (
    Box,
    Image,
    Mask,
    ObjectRegion,
    ProgramState,
    Value,
    ValueKind,
)
from .dsl import Program, ProgramStep, parse_program, parse_step, render_step, validate
from .registry import Registry, default_registry
from .interpreter import ExecutionOptions, RunRecord, StepTrace, execute
from .backends import (
    Backend,
    FixtureBackend,
    FixtureSet,
    ProceduralBackend,
    RecordingBackend,
    RemoteBackend,
)
from .rationale import rationale_cells, render_rationale

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "Box",
    "ExecutionOptions",
    "FixtureBackend",
    "FixtureSet",
    "Image",
    "Mask",
    "ObjectRegion",
    "ProceduralBackend",
    "Program",
    "ProgramState",
    "ProgramStep",
    "RecordingBackend",
    "Registry",
    "RemoteBackend",
    "RunRecord",
    "StepTrace",
    "Value",
    "ValueKind",
    "default_registry",
    "execute",
    "parse_program",
    "parse_step",
    "rationale_cells",
    "render_rationale",
    "render_step",
    "validate",
    "__version__",
]
