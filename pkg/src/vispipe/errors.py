"""Exception hierarchy for the whole engine.

Every error raised by vispipe derives from :class:`VispipeError` so callers can
catch engine failures without swallowing genuine bugs (TypeError, etc.).
Step-level errors carry enough structure for the interpreter to attach them to
a trace and for the service to serialize them.
"""

from __future__ import annotations


class VispipeError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self)}


# ---------------------------------------------------------------------------
# core-types


class InvalidIdentifier(VispipeError):
    code = "invalid-identifier"


class DuplicateBinding(VispipeError):
    code = "duplicate-binding"


class UnboundVariable(VispipeError):
    code = "unbound-variable"

    def __init__(self, name: str, step_index: int | None = None):
        self.name = name
        self.step_index = step_index
        where = f" (step {step_index})" if step_index is not None else ""
        super().__init__(f"variable {name!r} is not bound{where}")


class ValueError_(VispipeError):
    """Malformed domain value (bad raster shape, score out of range, ...)."""

    code = "invalid-value"


class TypeMismatch(VispipeError):
    code = "type-mismatch"

    def __init__(self, arg_name: str, expected: str, actual: str):
        self.arg_name = arg_name
        self.expected = expected
        self.actual = actual
        super().__init__(f"argument {arg_name!r} expects {expected}, got {actual}")


# ---------------------------------------------------------------------------
# program-dsl


class ProgramSyntaxError(VispipeError):
    """Positioned syntax error in one step line.

    ``column`` is 1-based; ``expected`` lists the token kinds that would have
    been accepted at that position.
    """

    code = "syntax-error"

    def __init__(self, message: str, column: int, expected: tuple[str, ...] = (),
                 line: int | None = None):
        self.raw_message = message
        self.column = column
        self.expected = tuple(expected)
        self.line = line
        at = f"line {line}, " if line is not None else ""
        hint = f" (expected {' or '.join(expected)})" if expected else ""
        super().__init__(f"{at}column {column}: {message}{hint}")

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "message": str(self),
            "line": self.line,
            "column": self.column,
            "expected": list(self.expected),
        }


class ProgramParseError(VispipeError):
    """Aggregate of per-line syntax errors from parse_program."""

    code = "parse-error"

    def __init__(self, errors: list[ProgramSyntaxError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))

    def to_json(self) -> dict:
        return {"code": self.code, "errors": [e.to_json() for e in self.errors]}


class EmptyProgramError(VispipeError):
    code = "empty-program"


# ---------------------------------------------------------------------------
# expr-lang


class ExprSyntaxError(VispipeError):
    code = "expr-syntax-error"

    def __init__(self, message: str, column: int):
        self.column = column
        super().__init__(f"column {column}: {message}")


class ExprTypeError(VispipeError):
    code = "expr-type-error"


class DivisionByZero(VispipeError):
    code = "division-by-zero"


class UnsupportedValueKind(VispipeError):
    code = "unsupported-value-kind"


# ---------------------------------------------------------------------------
# module-registry


class DuplicateModule(VispipeError):
    code = "duplicate-module"


class UnknownModule(VispipeError):
    code = "unknown-module"


class EmptyCrop(VispipeError):
    code = "empty-crop"


class UntaggedRegion(VispipeError):
    code = "untagged-region"


class MissingMask(VispipeError):
    code = "missing-mask"


class UnknownEmoji(VispipeError):
    code = "unknown-emoji"

    def __init__(self, name: str, available: tuple[str, ...]):
        self.name = name
        self.available = tuple(available)
        super().__init__(
            f"unknown emoji {name!r}; available: {', '.join(available)}")


# ---------------------------------------------------------------------------
# model-backends


class BackendError(VispipeError):
    code = "backend-error"


class FixtureMiss(BackendError):
    code = "fixture-miss"

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no fixture for request key {key!r}")


class NoCandidates(VispipeError):
    code = "no-candidates"


class EmptyList(VispipeError):
    code = "empty-list"


# ---------------------------------------------------------------------------
# interpreter


class MissingArgument(VispipeError):
    code = "missing-argument"


class UnknownArgument(VispipeError):
    code = "unknown-argument"


class StepTimeout(VispipeError):
    code = "step-timeout"


# ---------------------------------------------------------------------------
# generator


class PoolTooSmall(VispipeError):
    code = "pool-too-small"


class UnknownExampleId(VispipeError):
    code = "unknown-example-id"


class ClientError(VispipeError):
    code = "client-error"


class GenerationError(VispipeError):
    """Completion could not be turned into a valid program.

    Carries the raw completion text so failures can be inspected and counted
    in error analysis.
    """

    code = "generation-error"

    def __init__(self, message: str, raw_completion: str):
        self.raw_completion = raw_completion
        super().__init__(message)

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self),
                "raw_completion": self.raw_completion}


class AllRunsFailed(VispipeError):
    code = "all-runs-failed"


# ---------------------------------------------------------------------------
# eval-harness


class LengthMismatch(VispipeError):
    code = "length-mismatch"


class EmptySet(VispipeError):
    code = "empty-set"


class DatasetError(VispipeError):
    code = "dataset-error"
