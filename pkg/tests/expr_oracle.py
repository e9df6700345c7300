"""Independent expression oracle.

A second implementation of the documented expression semantics, written with
a different algorithm family on purpose: shunting-yard parsing over token
lists into tuple trees, then a walker over native Python values.  The
production evaluator never touches this code.

Trees: ("num", x) | ("text", s) | ("bool", b) | ("un", op, t)
     | ("bin", op, l, r) | ("cond", c, a, b)

Errors are reported as short kind strings so tests can compare failure modes:
"type", "div0", "syntax".
"""

from __future__ import annotations

from typing import Optional, Union

Tree = tuple


class OracleError(Exception):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(kind)


_BIN_PREC = {
    "or": 1, "xor": 2, "and": 3,
    "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "*": 7, "/": 7,
}
_UNARY_PREC = {"not": 4, "u-": 8}


def _atom(token: str) -> Optional[Tree]:
    if token == "True":
        return ("bool", True)
    if token == "False":
        return ("bool", False)
    if token.startswith("'") and token.endswith("'") and len(token) >= 2:
        return ("text", token[1:-1])
    try:
        return ("num", float(token))
    except ValueError:
        return None


def parse_tokens(tokens: list[str]) -> Tree:
    """Shunting-yard over binary/unary operators, parens, and atoms."""
    out: list[Tree] = []
    ops: list[str] = []

    def reduce_top():
        op = ops.pop()
        if op in _UNARY_PREC:
            if not out:
                raise OracleError("syntax")
            operand = out.pop()
            out.append(("un", "-" if op == "u-" else "not", operand))
        else:
            if len(out) < 2:
                raise OracleError("syntax")
            right = out.pop()
            left = out.pop()
            out.append(("bin", op, left, right))

    expect_operand = True
    for token in tokens:
        if expect_operand:
            if token == "(":
                ops.append("(")
            elif token == "-":
                ops.append("u-")
            elif token == "not":
                ops.append("not")
            else:
                atom = _atom(token)
                if atom is None:
                    raise OracleError("syntax")
                out.append(atom)
                expect_operand = False
        else:
            if token == ")":
                while ops and ops[-1] != "(":
                    reduce_top()
                if not ops:
                    raise OracleError("syntax")
                ops.pop()
            elif token in _BIN_PREC:
                # left-assoc: reduce while the stack top binds at least as hard
                while ops and ops[-1] != "(" and (
                        _UNARY_PREC.get(ops[-1], _BIN_PREC.get(ops[-1], 0))
                        >= _BIN_PREC[token]):
                    reduce_top()
                ops.append(token)
                expect_operand = True
            else:
                raise OracleError("syntax")
    if expect_operand:
        raise OracleError("syntax")
    while ops:
        if ops[-1] == "(":
            raise OracleError("syntax")
        reduce_top()
    if len(out) != 1:
        raise OracleError("syntax")
    return out[0]


def _as_bool(value, what: str = "") -> bool:
    if type(value) is not bool:
        raise OracleError("type")
    return value


def _as_num(value) -> float:
    if type(value) is not float:
        raise OracleError("type")
    return value


def eval_tree(tree: Tree) -> Union[float, str, bool]:
    tag = tree[0]
    if tag == "num":
        return float(tree[1])
    if tag == "text":
        return str(tree[1])
    if tag == "bool":
        return bool(tree[1])
    if tag == "un":
        _, op, operand = tree
        value = eval_tree(operand)
        if op == "not":
            return not _as_bool(value)
        return -_as_num(value)
    if tag == "cond":
        _, cond, then, other = tree
        # only the chosen branch is evaluated
        return eval_tree(then) if _as_bool(eval_tree(cond)) else eval_tree(other)
    _, op, left_t, right_t = tree
    left = eval_tree(left_t)
    right = eval_tree(right_t)
    if op in ("and", "or", "xor"):
        lb, rb = _as_bool(left), _as_bool(right)
        return {"and": lb and rb, "or": lb or rb, "xor": lb != rb}[op]
    if op in ("+", "-", "*", "/"):
        ln, rn = _as_num(left), _as_num(right)
        if op == "+":
            return ln + rn
        if op == "-":
            return ln - rn
        if op == "*":
            return ln * rn
        if rn == 0.0:
            raise OracleError("div0")
        return ln / rn
    # comparisons on like types only; booleans compare for equality alone
    if type(left) is not type(right):
        raise OracleError("type")
    if op in ("==", "!="):
        return (left == right) if op == "==" else (left != right)
    if type(left) is bool:
        raise OracleError("type")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise OracleError("syntax")


def eval_tokens(tokens: list[str]) -> Union[float, str, bool]:
    return eval_tree(parse_tokens(tokens))
