"""Restricted infix expression evaluator backing the EVAL module.

Supports number/text/boolean literals, unary ``not``/``-``, binary
``+ - * / == != < <= > >= and or xor``, the conditional ``A if C else B``,
and parentheses.  Deliberately not a general-purpose evaluator: no names, no
calls, no attribute access, no loops.

Semantics:
- precedence, lowest first: conditional, ``or``, ``xor``, ``and``, ``not``,
  comparisons, ``+ -``, ``* /``, unary minus;
- arithmetic on numbers only; division by zero raises;
- ``and``/``or``/``xor`` take booleans and evaluate both operands (no
  short-circuit, so ill-typed operands always surface);
- comparisons take like types: ordering on numbers or text (code-point
  order), equality additionally on booleans; comparisons do not chain
  (``a < b < c`` associates left and then fails the type check);
- the conditional requires a boolean condition and evaluates only the chosen
  branch.

Templates for EVAL may contain ``{VAR}`` placeholders; `substitute` splices
the bound values in as literals (text re-quoted, numbers canonical, booleans
``True``/``False``) before parsing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import (
    DivisionByZero,
    ExprSyntaxError,
    ExprTypeError,
    UnboundVariable,
    UnsupportedValueKind,
)
from .values import ProgramState, Value, ValueKind, format_number

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[Lit, Unary, Binary, Cond]

_KEYWORDS = {"and", "or", "xor", "not", "if", "else", "True", "False"}
_PUNCT_OPS = ("==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "(", ")")


@dataclass(frozen=True)
class _Tok:
    kind: str  # NUMBER STRING NAME OP END
    text: str
    column: int


def _lex(src: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        col = i + 1
        if c in " \t\r\n":
            i += 1
            continue
        if c == "'":
            j = i + 1
            chars: list[str] = []
            while j < n:
                ch = src[j]
                if ch == "\\" and j + 1 < n and src[j + 1] in ("'", "\\"):
                    chars.append(src[j + 1])
                    j += 2
                    continue
                if ch == "'":
                    break
                chars.append(ch)
                j += 1
            else:
                raise ExprSyntaxError("unterminated text literal", col)
            tokens.append(_Tok("STRING", "".join(chars), col))
            i = j + 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            m = re.match(r"\d*\.?\d+(?:[eE][+-]?\d+)?", src[i:])
            assert m is not None
            tokens.append(_Tok("NUMBER", m.group(0), col))
            i += m.end()
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Tok("NAME", src[i:j], col))
            i = j
            continue
        for op in _PUNCT_OPS:
            if src.startswith(op, i):
                tokens.append(_Tok("OP", op, col))
                i += len(op)
                break
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", col)
    tokens.append(_Tok("END", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _lex(src)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.tokens[self.pos]

    def take(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind: str, text: str) -> bool:
        tok = self.peek()
        if tok.kind == kind and tok.text == text:
            self.pos += 1
            return True
        return False

    def parse(self) -> Expr:
        expr = self.conditional()
        tok = self.peek()
        if tok.kind != "END":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.column)
        return expr

    # precedence ladder, lowest binds first
    def conditional(self) -> Expr:
        value = self.or_expr()
        if self.accept("NAME", "if"):
            cond = self.or_expr()
            tok = self.peek()
            if not self.accept("NAME", "else"):
                raise ExprSyntaxError("conditional needs 'else'", tok.column)
            other = self.conditional()
            return Cond(cond, value, other)
        return value

    def or_expr(self) -> Expr:
        left = self.xor_expr()
        while self.accept("NAME", "or"):
            left = Binary("or", left, self.xor_expr())
        return left

    def xor_expr(self) -> Expr:
        left = self.and_expr()
        while self.accept("NAME", "xor"):
            left = Binary("xor", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while self.accept("NAME", "and"):
            left = Binary("and", left, self.not_expr())
        return left

    def not_expr(self) -> Expr:
        if self.accept("NAME", "not"):
            return Unary("not", self.not_expr())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.additive()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("==", "!=", "<", "<=", ">", ">="):
                self.take()
                left = Binary(tok.text, left, self.additive())
            else:
                return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("+", "-"):
                self.take()
                left = Binary(tok.text, left, self.multiplicative())
            else:
                return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("*", "/"):
                self.take()
                left = Binary(tok.text, left, self.unary())
            else:
                return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.take()
            return Unary("-", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "NUMBER":
            return Lit(Value.number(float(tok.text)))
        if tok.kind == "STRING":
            return Lit(Value.text(tok.text))
        if tok.kind == "NAME":
            if tok.text == "True":
                return Lit(Value.boolean(True))
            if tok.text == "False":
                return Lit(Value.boolean(False))
            raise ExprSyntaxError(f"unexpected name {tok.text!r}", tok.column)
        if tok.kind == "OP" and tok.text == "(":
            inner = self.conditional()
            closing = self.peek()
            if not self.accept("OP", ")"):
                raise ExprSyntaxError("expected ')'", closing.column)
            return inner
        got = "end of expression" if tok.kind == "END" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {got}", tok.column)


def parse_expr(src: str) -> Expr:
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Evaluation


def _need(value: Value, kind: ValueKind, what: str) -> object:
    if value.kind is not kind:
        raise ExprTypeError(f"{what} needs {kind.value}, got {value.kind.value}")
    return value.data


def eval_tree(expr: Expr) -> Value:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Unary):
        if expr.op == "not":
            b = _need(eval_tree(expr.operand), ValueKind.BOOLEAN, "'not'")
            return Value.boolean(not b)
        operand = _need(eval_tree(expr.operand), ValueKind.NUMBER, "unary '-'")
        return Value.number(-operand)  # type: ignore[operator]
    if isinstance(expr, Cond):
        cond = _need(eval_tree(expr.cond), ValueKind.BOOLEAN, "conditional test")
        return eval_tree(expr.then if cond else expr.other)
    assert isinstance(expr, Binary)
    op = expr.op
    left = eval_tree(expr.left)
    right = eval_tree(expr.right)
    if op in ("and", "or", "xor"):
        lb = _need(left, ValueKind.BOOLEAN, f"'{op}'")
        rb = _need(right, ValueKind.BOOLEAN, f"'{op}'")
        if op == "and":
            return Value.boolean(lb and rb)  # type: ignore[operator]
        if op == "or":
            return Value.boolean(lb or rb)  # type: ignore[operator]
        return Value.boolean(lb != rb)
    if op in ("+", "-", "*", "/"):
        ln = _need(left, ValueKind.NUMBER, f"'{op}'")
        rn = _need(right, ValueKind.NUMBER, f"'{op}'")
        if op == "+":
            return Value.number(ln + rn)  # type: ignore[operator]
        if op == "-":
            return Value.number(ln - rn)  # type: ignore[operator]
        if op == "*":
            return Value.number(ln * rn)  # type: ignore[operator]
        if rn == 0.0:
            raise DivisionByZero("division by zero")
        return Value.number(ln / rn)  # type: ignore[operator]
    # comparisons
    if left.kind is not right.kind:
        raise ExprTypeError(
            f"'{op}' compares like types, got {left.kind.value} and {right.kind.value}")
    if op in ("==", "!="):
        if left.kind not in (ValueKind.NUMBER, ValueKind.TEXT, ValueKind.BOOLEAN):
            raise ExprTypeError(f"'{op}' not defined on {left.kind.value}")
        eq = left.data == right.data
        return Value.boolean(eq if op == "==" else not eq)
    if left.kind not in (ValueKind.NUMBER, ValueKind.TEXT):
        raise ExprTypeError(f"'{op}' not defined on {left.kind.value}")
    a, b = left.data, right.data
    if op == "<":
        return Value.boolean(a < b)  # type: ignore[operator]
    if op == "<=":
        return Value.boolean(a <= b)  # type: ignore[operator]
    if op == ">":
        return Value.boolean(a > b)  # type: ignore[operator]
    return Value.boolean(a >= b)  # type: ignore[operator]


def eval_expr(src: str) -> Value:
    """Parse and evaluate one expression."""
    return eval_tree(parse_expr(src))


# ---------------------------------------------------------------------------
# Placeholder substitution

_PLACEHOLDER_RE = re.compile(r"\{([A-Z][A-Z0-9_]*)\}")

_SPLICEABLE = (ValueKind.TEXT, ValueKind.NUMBER, ValueKind.BOOLEAN)


def render_literal(value: Value) -> str:
    """The literal source text a bound value splices in as."""
    if value.kind is ValueKind.TEXT:
        escaped = value.data.replace("\\", "\\\\").replace("'", "\\'")  # type: ignore[union-attr]
        return f"'{escaped}'"
    if value.kind is ValueKind.NUMBER:
        return format_number(value.data)  # type: ignore[arg-type]
    if value.kind is ValueKind.BOOLEAN:
        return "True" if value.data else "False"
    raise UnsupportedValueKind(
        f"cannot splice a {value.kind.value} value into an expression")


def substitute(template: str, state: ProgramState) -> str:
    """Replace each ``{VAR}`` placeholder with the bound value's literal."""
    def repl(m: re.Match) -> str:
        value = state.lookup(m.group(1))
        if value.kind not in _SPLICEABLE:
            raise UnsupportedValueKind(
                f"variable {m.group(1)!r} holds a {value.kind.value} value, "
                "which has no expression literal")
        return render_literal(value)

    return _PLACEHOLDER_RE.sub(repl, template)
