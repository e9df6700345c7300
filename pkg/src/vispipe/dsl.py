"""The step-sequence program language.

One program is a straight line of steps, one per line:

    OBJ0=SELECT(image=IMAGE,object=OBJ,query='desert',category=None)

Grammar::

    STEP := VAR '=' MODNAME '(' [ARG (',' ARG)*] ')'
    ARG  := NAME '=' (QUOTED | NUMBER | 'True' | 'False' | 'None' | VAR)

``VAR`` matches ``[A-Z][A-Z0-9_]*`` (case-sensitive); ``MODNAME`` matches
``[A-Za-z][A-Za-z0-9_]*`` and is resolved case-insensitively against the
module registry.  Quoted text is single-quoted with ``\\'`` and ``\\\\``
escapes.  Blank lines and lines starting with ``#`` are ignored (LLM output
sometimes carries comments).  There is no control flow.

The parser is pure and reentrant.  Every failure is a positioned
ProgramSyntaxError carrying the 1-based column and the expected token set;
`parse_program` aggregates them per line into a ProgramParseError.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .errors import (
    EmptyProgramError,
    ProgramParseError,
    ProgramSyntaxError,
)
from .values import ValueKind, format_number, is_var_name

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class TextLiteral:
    value: str


@dataclass(frozen=True)
class NumberLiteral:
    value: float


@dataclass(frozen=True)
class BooleanLiteral:
    value: bool


@dataclass(frozen=True)
class NoneLiteral:
    pass


@dataclass(frozen=True)
class VarRef:
    name: str


ArgValue = Union[TextLiteral, NumberLiteral, BooleanLiteral, NoneLiteral, VarRef]


@dataclass(frozen=True)
class ProgramStep:
    output: str
    module: str
    args: tuple[tuple[str, ArgValue], ...]

    def arg_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.args)

    def var_refs(self) -> tuple[str, ...]:
        return tuple(v.name for _, v in self.args if isinstance(v, VarRef))


@dataclass(frozen=True)
class Program:
    steps: tuple[ProgramStep, ...]
    source: str = ""

    def output_names(self) -> tuple[str, ...]:
        return tuple(s.output for s in self.steps)


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = {"=": "EQUALS", "(": "LPAREN", ")": "RPAREN", ",": "COMMA", "-": "MINUS"}


@dataclass(frozen=True)
class _Token:
    kind: str          # IDENT NUMBER STRING EQUALS LPAREN RPAREN COMMA MINUS EOL
    text: str
    column: int        # 1-based position of the first character


def _tokenize(line: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        col = i + 1
        if c in " \t\r":
            i += 1
            continue
        if c in _PUNCT:
            tokens.append(_Token(_PUNCT[c], c, col))
            i += 1
            continue
        if c == "'":
            j = i + 1
            chars: list[str] = []
            while j < n:
                ch = line[j]
                if ch == "\\":
                    if j + 1 >= n:
                        raise ProgramSyntaxError(
                            "unterminated escape in text literal", j + 1,
                            ("escape character",))
                    nxt = line[j + 1]
                    if nxt in ("'", "\\"):
                        chars.append(nxt)
                        j += 2
                        continue
                    # unknown escapes are kept verbatim so arbitrary text survives
                    chars.append(ch)
                    j += 1
                    continue
                if ch == "'":
                    break
                chars.append(ch)
                j += 1
            else:
                raise ProgramSyntaxError("unterminated text literal", col, ("'",))
            tokens.append(_Token("STRING", "".join(chars), col))
            i = j + 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and line[i + 1].isdigit()):
            j = i
            seen_dot = seen_exp = False
            while j < n:
                ch = line[j]
                if ch.isdigit():
                    j += 1
                elif ch == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif ch in "eE" and not seen_exp and j > i:
                    # exponent needs at least one digit, optionally signed
                    k = j + 1
                    if k < n and line[k] in "+-":
                        k += 1
                    if k < n and line[k].isdigit():
                        seen_exp = True
                        j = k + 1
                        while j < n and line[j].isdigit():
                            j += 1
                    else:
                        break
                else:
                    break
            tokens.append(_Token("NUMBER", line[i:j], col))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (line[j].isalnum() or line[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", line[i:j], col))
            i = j
            continue
        raise ProgramSyntaxError(f"unexpected character {c!r}", col)
    tokens.append(_Token("EOL", "", n + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_MODNAME_OK = lambda s: s[0].isalpha() and all(ch.isalnum() or ch == "_" for ch in s)


class _StepParser:
    def __init__(self, line: str):
        self.tokens = _tokenize(line)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            got = "end of line" if tok.kind == "EOL" else repr(tok.text)
            raise ProgramSyntaxError(f"unexpected {got}", tok.column, expected)
        return self.take()

    def parse(self) -> ProgramStep:
        out_tok = self.expect("IDENT", ("output variable",))
        if not is_var_name(out_tok.text):
            raise ProgramSyntaxError(
                f"output variable {out_tok.text!r} must match [A-Z][A-Z0-9_]*",
                out_tok.column, ("output variable",))
        self.expect("EQUALS", ("'='",))
        mod_tok = self.expect("IDENT", ("module name",))
        if not _MODNAME_OK(mod_tok.text):
            raise ProgramSyntaxError(
                f"invalid module name {mod_tok.text!r}", mod_tok.column,
                ("module name",))
        self.expect("LPAREN", ("'('",))
        args: list[tuple[str, ArgValue]] = []
        seen: set[str] = set()
        if self.peek().kind != "RPAREN":
            while True:
                name_tok = self.expect("IDENT", ("argument name", "')'"))
                if name_tok.text in seen:
                    raise ProgramSyntaxError(
                        f"duplicate argument {name_tok.text!r}", name_tok.column,
                        ("unique argument name",))
                seen.add(name_tok.text)
                self.expect("EQUALS", ("'='",))
                args.append((name_tok.text, self.parse_value()))
                tok = self.peek()
                if tok.kind == "COMMA":
                    self.take()
                    continue
                if tok.kind == "RPAREN":
                    break
                got = "end of line" if tok.kind == "EOL" else repr(tok.text)
                raise ProgramSyntaxError(
                    f"unexpected {got}", tok.column, ("')'", "','"))
        self.expect("RPAREN", ("')'",))
        trailing = self.peek()
        if trailing.kind != "EOL":
            raise ProgramSyntaxError(
                f"unexpected {trailing.text!r} after step", trailing.column,
                ("end of line",))
        return ProgramStep(out_tok.text, mod_tok.text, tuple(args))

    def parse_value(self) -> ArgValue:
        tok = self.peek()
        if tok.kind == "STRING":
            self.take()
            return TextLiteral(tok.text)
        if tok.kind == "MINUS":
            self.take()
            num = self.expect("NUMBER", ("number",))
            return NumberLiteral(-float(num.text))
        if tok.kind == "NUMBER":
            self.take()
            return NumberLiteral(float(tok.text))
        if tok.kind == "IDENT":
            self.take()
            if tok.text == "True":
                return BooleanLiteral(True)
            if tok.text == "False":
                return BooleanLiteral(False)
            if tok.text == "None":
                return NoneLiteral()
            if is_var_name(tok.text):
                return VarRef(tok.text)
            raise ProgramSyntaxError(
                f"{tok.text!r} is neither a literal nor a variable", tok.column,
                ("quoted text", "number", "True", "False", "None", "variable"))
        got = "end of line" if tok.kind == "EOL" else repr(tok.text)
        raise ProgramSyntaxError(
            f"unexpected {got}", tok.column,
            ("quoted text", "number", "True", "False", "None", "variable"))


def parse_step(line: str) -> ProgramStep:
    """Parse one logical line into a ProgramStep."""
    if "\n" in line:
        raise ProgramSyntaxError("step must be a single line", line.index("\n") + 1)
    return _StepParser(line).parse()


def parse_program(src: str) -> Program:
    """Parse a program: one step per non-blank line, ``#`` lines skipped."""
    steps: list[ProgramStep] = []
    errors: list[ProgramSyntaxError] = []
    for lineno, raw in enumerate(src.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            steps.append(parse_step(line))
        except ProgramSyntaxError as e:
            errors.append(ProgramSyntaxError(
                e.raw_message, e.column, e.expected, line=lineno))
    if errors:
        raise ProgramParseError(errors)
    if not steps:
        raise EmptyProgramError("program has no steps")
    return Program(tuple(steps), source=src)


# ---------------------------------------------------------------------------
# Rendering (canonical form: no spaces)


def render_arg_value(value: ArgValue) -> str:
    if isinstance(value, TextLiteral):
        escaped = value.value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    if isinstance(value, NumberLiteral):
        return format_number(value.value)
    if isinstance(value, BooleanLiteral):
        return "True" if value.value else "False"
    if isinstance(value, NoneLiteral):
        return "None"
    if isinstance(value, VarRef):
        return value.name
    raise AssertionError(value)


def render_step(step: ProgramStep) -> str:
    args = ",".join(f"{name}={render_arg_value(v)}" for name, v in step.args)
    return f"{step.output}={step.module}({args})"


def render_program(program: Program) -> str:
    return "\n".join(render_step(s) for s in program.steps)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    step_index: Optional[int] = None

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message,
                "step_index": self.step_index}


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str, step_index: Optional[int] = None):
        self.issues.append(ValidationIssue(code, message, step_index))

    def to_json(self) -> dict:
        return {"ok": self.ok, "issues": [i.to_json() for i in self.issues]}


_LITERAL_KINDS = {
    TextLiteral: ValueKind.TEXT,
    NumberLiteral: ValueKind.NUMBER,
    BooleanLiteral: ValueKind.BOOLEAN,
    NoneLiteral: ValueKind.NULL,
}


def validate(program: Program, registry, inputs: Sequence[str]) -> ValidationReport:
    """Static checks against a module registry and the declared input names.

    Reports unknown modules, unknown/missing/duplicate argument names, VarRefs
    to variables no earlier step (or input) defines, output-name collisions,
    and literal/output argument kinds that contradict the signature.  Kinds of
    input variables are unknown and never flagged.
    """
    report = ValidationReport()
    defined: dict[str, Optional[ValueKind]] = {name: None for name in inputs}
    for idx, step in enumerate(program.steps):
        try:
            impl = registry.resolve(step.module)
        except Exception:
            report.add("unknown-module", f"unknown module {step.module!r}", idx)
            impl = None

        seen: set[str] = set()
        for name, argv in step.args:
            if name in seen:
                report.add("duplicate-arg",
                           f"argument {name!r} given more than once", idx)
            seen.add(name)
            if isinstance(argv, VarRef):
                if argv.name not in defined:
                    report.add("undefined-variable",
                               f"variable {argv.name!r} is not defined at step {idx}",
                               idx)

        if impl is not None:
            sig = impl.signature
            declared = {a.name: a for a in sig.args}
            for name, argv in step.args:
                spec = declared.get(name)
                if spec is None:
                    report.add("unknown-arg",
                               f"module {sig.name} has no argument {name!r}", idx)
                    continue
                actual: Optional[ValueKind]
                if isinstance(argv, VarRef):
                    actual = defined.get(argv.name)
                else:
                    actual = _LITERAL_KINDS[type(argv)]
                if actual is not None and not spec.accepts(actual):
                    report.add("type-mismatch",
                               f"argument {name!r} of {sig.name} expects "
                               f"{spec.kinds_text()}, got {actual.value}", idx)
            for spec in sig.args:
                if spec.required and spec.name not in seen:
                    report.add("missing-arg",
                               f"module {sig.name} requires argument {spec.name!r}",
                               idx)

        if step.output in defined:
            report.add("duplicate-output",
                       f"output {step.output!r} collides with an earlier "
                       "binding (state is append-only)", idx)
        defined[step.output] = impl.signature.output_kind if impl is not None else None
    return report
