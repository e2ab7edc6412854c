"""Small expression language for cost integrands and symmetry generators.

Expressions are trees over a fixed seven-variable alphabet

    x   - independent variable
    ql, qu - lower/upper state endpoints
    vl, vu - lower/upper velocity endpoints
    wl, wu - lower/upper delayed velocity endpoints

with functions ln, exp, sin, cos, sqrt and operators + - * / ^ (power, with
a constant exponent).  The module supplies parsing with character-precise
error reporting, scalar evaluation, exact symbolic differentiation with
constant folding, a printer that round-trips through the parser, and
compilation to flat postfix programs for fast vectorised evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

from . import _accel

VARIABLES = ("x", "ql", "qu", "vl", "vu", "wl", "wu")
_VAR_SLOT = {name: i for i, name in enumerate(VARIABLES)}
FUNCTIONS = ("ln", "exp", "sin", "cos", "sqrt")


class ExprError(ValueError):
    """Base class for expression-language failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ExprDomainError(ExprError):
    """Evaluation hit an invalid operand (ln/sqrt domain, zero divisor)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # neg | ln | exp | sin | cos | sqrt
    child: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # add | sub | mul | div | pow
    left: "Expression"
    right: "Expression"


Expression = Union[Const, Var, Unary, Binary]

ZERO = Const(0.0)
ONE = Const(1.0)


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_OPERATOR_CHARS = set("+-*/^()")


def _tokenize(text: str):
    """Yield (kind, value, position) triples; kinds: num, ident, op, end."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPERATOR_CHARS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            # optional exponent part: 1e-3, 2.5E+4
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExprSyntaxError(f"malformed number {text[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    """Recursive descent with the precedence ladder pow > neg > mul/div > add/sub."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value, position = self.peek()
        if kind != "op" or value != symbol:
            raise ExprSyntaxError(f"expected {symbol!r}", position)
        return self.advance()

    def parse(self) -> Expression:
        kind, _, position = self.peek()
        if kind == "end":
            raise ExprSyntaxError("empty input", position)
        expr = self.expression()
        kind, value, position = self.peek()
        if kind != "end":
            if kind == "op" and value == ")":
                raise ExprSyntaxError("unbalanced parentheses", position)
            raise ExprSyntaxError(f"unexpected trailing {value!r}", position)
        return expr

    def expression(self) -> Expression:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = Binary("add" if value == "+" else "sub", node, rhs)
            else:
                return node

    def term(self) -> Expression:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.unary()
                node = Binary("mul" if value == "*" else "div", node, rhs)
            else:
                return node

    def unary(self) -> Expression:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            child = self.unary()
            # negative literals are Const nodes, matching the folding
            # constructors, so printed trees re-parse to equal trees
            if isinstance(child, Const):
                return Const(-child.value)
            return Unary("neg", child)
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            _, _, exp_position = self.peek()
            exponent = self.unary()  # right associative: a^-b, a^b^c
            folded = fold(exponent)
            if not isinstance(folded, Const):
                raise ExprSyntaxError("power exponent must be a constant", exp_position)
            return Binary("pow", base, folded)
        return base

    def atom(self) -> Expression:
        kind, value, position = self.advance()
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            nxt_kind, nxt_value, _ = self.peek()
            if nxt_kind == "op" and nxt_value == "(":
                if value not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {value!r}", position)
                self.advance()
                arg = self.expression()
                kind, _, position = self.peek()
                if kind != "op" or self.peek()[1] != ")":
                    raise ExprSyntaxError("unbalanced parentheses", position)
                self.advance()
                return Unary(value, arg)
            if value in VARIABLES:
                return Var(value)
            raise ExprSyntaxError(f"unknown identifier {value!r}", position)
        if kind == "op" and value == "(":
            node = self.expression()
            kind, _, position = self.peek()
            if kind != "op" or self.peek()[1] != ")":
                raise ExprSyntaxError("unbalanced parentheses", position)
            self.advance()
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", position)
        raise ExprSyntaxError(f"unexpected {value!r}", position)


def parse(text: str) -> Expression:
    """Parse expression text; raises ExprSyntaxError with a character position."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# folding constructors
# ---------------------------------------------------------------------------

_UNARY_FN = {
    "neg": lambda v: -v,
    "ln": math.log,
    "exp": math.exp,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
}


def _is_const(e: Expression, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("add", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Binary("sub", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Binary("mul", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Binary("div", a, b)


def power(base: Expression, exponent: Expression) -> Expression:
    if not isinstance(exponent, Const):
        raise ExprError("power exponent must be a constant")
    if exponent.value == 0.0:
        return ONE
    if exponent.value == 1.0:
        return base
    if _is_const(base):
        try:
            return Const(math.pow(base.value, exponent.value))
        except (ValueError, OverflowError):
            pass
    return Binary("pow", base, exponent)


def neg(a: Expression) -> Expression:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.child
    return Unary("neg", a)


def unary(op: str, child: Expression) -> Expression:
    if op == "neg":
        return neg(child)
    if _is_const(child):
        try:
            return Const(_UNARY_FN[op](child.value))
        except (ValueError, OverflowError):
            pass  # leave domain errors for evaluation time
    return Unary(op, child)


def fold(e: Expression) -> Expression:
    """Bottom-up constant folding; preserves value at every environment."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Unary):
        return unary(e.op, fold(e.child))
    left = fold(e.left)
    right = fold(e.right)
    if e.op == "add":
        return add(left, right)
    if e.op == "sub":
        return sub(left, right)
    if e.op == "mul":
        return mul(left, right)
    if e.op == "div":
        return div(left, right)
    return power(left, right)


# ---------------------------------------------------------------------------
# evaluation / inspection
# ---------------------------------------------------------------------------


def variables_of(e: Expression) -> set[str]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return variables_of(e.child)
    return variables_of(e.left) | variables_of(e.right)


def evaluate(e: Expression, env: Mapping[str, float]) -> float:
    """Exact recursive scalar evaluation with domain checking."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise ExprError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Unary):
        v = evaluate(e.child, env)
        if e.op == "neg":
            return -v
        if e.op == "ln":
            if v <= 0.0:
                raise ExprDomainError(f"ln of non-positive value {v!r} in ln({to_text(e.child)})")
            return math.log(v)
        if e.op == "exp":
            return math.exp(v)
        if e.op == "sin":
            return math.sin(v)
        if e.op == "cos":
            return math.cos(v)
        if v < 0.0:
            raise ExprDomainError(f"sqrt of negative value {v!r} in sqrt({to_text(e.child)})")
        return math.sqrt(v)
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if e.op == "add":
        return a + b
    if e.op == "sub":
        return a - b
    if e.op == "mul":
        return a * b
    if e.op == "div":
        if b == 0.0:
            raise ExprDomainError(f"division by zero in {to_text(e)}")
        return a / b
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError) as exc:
        raise ExprDomainError(f"invalid power in {to_text(e)}: {exc}") from None


# ---------------------------------------------------------------------------
# symbolic differentiation
# ---------------------------------------------------------------------------


def differentiate(e: Expression, var: str) -> Expression:
    """Exact partial derivative with respect to one alphabet variable."""
    if var not in VARIABLES:
        raise ExprError(f"unknown variable {var!r}")
    return _diff(e, var)


def _diff(e: Expression, var: str) -> Expression:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Unary):
        du = _diff(e.child, var)
        if e.op == "neg":
            return neg(du)
        if e.op == "ln":
            return div(du, e.child)
        if e.op == "exp":
            return mul(unary("exp", e.child), du)
        if e.op == "sin":
            return mul(unary("cos", e.child), du)
        if e.op == "cos":
            return neg(mul(unary("sin", e.child), du))
        return div(du, mul(Const(2.0), unary("sqrt", e.child)))
    da = _diff(e.left, var)
    db = _diff(e.right, var)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, e.right), mul(e.left, db))
    if e.op == "div":
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, Const(2.0)))
    # pow with constant exponent c: c * u^(c-1) * u'
    c = e.right.value
    return mul(mul(Const(c), power(e.left, Const(c - 1.0))), da)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _fmt_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_text(e: Expression) -> str:
    """Render with minimal parentheses; parse(to_text(e)) == e for folded trees."""
    return _print(e, 0)


def _print(e: Expression, parent_prec: int) -> str:
    if isinstance(e, Const):
        if e.value < 0:
            text = f"-{_fmt_const(-e.value)}"
            return f"({text})" if parent_prec > _PREC["neg"] else text
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            text = f"-{_print(e.child, _PREC['neg'])}"
            return f"({text})" if parent_prec > _PREC["neg"] else text
        return f"{e.op}({_print(e.child, 0)})"
    prec = _PREC[e.op]
    if e.op in ("add", "sub"):
        left = _print(e.left, prec)
        right = _print(e.right, prec + 1)  # left associative
        symbol = "+" if e.op == "add" else "-"
    elif e.op in ("mul", "div"):
        left = _print(e.left, prec)
        right = _print(e.right, prec + 1)
        symbol = "*" if e.op == "mul" else "/"
    else:
        left = _print(e.left, prec + 1)  # pow binds tighter than unary minus
        right = _print(e.right, prec)
        symbol = "^"
    text = f"{left}{symbol}{right}"
    return f"({text})" if prec < parent_prec else text


# ---------------------------------------------------------------------------
# compilation to postfix programs
# ---------------------------------------------------------------------------

_UNARY_OPCODE = {
    "neg": _accel.OP_NEG,
    "ln": _accel.OP_LN,
    "exp": _accel.OP_EXP,
    "sin": _accel.OP_SIN,
    "cos": _accel.OP_COS,
    "sqrt": _accel.OP_SQRT,
}
_BINARY_OPCODE = {
    "add": _accel.OP_ADD,
    "sub": _accel.OP_SUB,
    "mul": _accel.OP_MUL,
    "div": _accel.OP_DIV,
}


@dataclass(frozen=True, eq=False)
class Program:
    """Flat postfix form of an expression, ready for the array VMs."""

    codes: np.ndarray
    payload: np.ndarray
    depth: int
    source: Expression

    def __call__(self, variables: np.ndarray) -> np.ndarray:
        """Evaluate over a (7, n) float64 binding matrix."""
        return _accel.eval_program(self.codes, self.payload, self.depth, variables)


@lru_cache(maxsize=None)
def compile_program(e: Expression) -> Program:
    codes: list[int] = []
    payload: list[float] = []

    def emit(node: Expression) -> None:
        if isinstance(node, Const):
            codes.append(_accel.OP_CONST)
            payload.append(node.value)
        elif isinstance(node, Var):
            codes.append(_accel.OP_VAR)
            payload.append(float(_VAR_SLOT[node.name]))
        elif isinstance(node, Unary):
            emit(node.child)
            codes.append(_UNARY_OPCODE[node.op])
            payload.append(0.0)
        elif node.op == "pow":
            if not isinstance(node.right, Const):
                raise ExprError("power exponent must be a constant")
            emit(node.left)
            codes.append(_accel.OP_POWC)
            payload.append(node.right.value)
        else:
            emit(node.left)
            emit(node.right)
            codes.append(_BINARY_OPCODE[node.op])
            payload.append(0.0)

    emit(e)
    depth = 0
    height = 0
    for code in codes:
        if code in (_accel.OP_CONST, _accel.OP_VAR):
            height += 1
        elif _accel.OP_ADD <= code <= _accel.OP_DIV:
            height -= 1
        depth = max(depth, height)
    return Program(
        codes=np.asarray(codes, dtype=np.int64),
        payload=np.asarray(payload, dtype=np.float64),
        depth=depth,
        source=e,
    )


def bindings(n: int, **named: np.ndarray | float) -> np.ndarray:
    """Assemble a (7, n) binding matrix from per-variable arrays or scalars."""
    out = np.zeros((len(VARIABLES), n))
    for name, value in named.items():
        if name not in _VAR_SLOT:
            raise ExprError(f"unknown variable {name!r}")
        out[_VAR_SLOT[name]] = value
    return out
