"""Scalar expressions over (x, y, z): parsing, printing, evaluation and exact gradients.

Grammar (highest precedence first)::

    atom    := number | x | y | z | func '(' expr ')' | '(' expr ')'
    power   := atom ('^' ['-'|'+'] integer)*
    unary   := '-' unary | '+' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Functions are ``exp``, ``cosh`` and ``sinh``.  Exponents must be integer literals.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .dual import Dual

VARIABLES = ("x", "y", "z")
FUNCTIONS = ("exp", "cosh", "sinh")


class ParseError(ValueError):
    """Syntax or identifier error at a byte offset of the source string."""

    def __init__(self, message: str, offset: int, source: str = ""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class EvaluationError(ArithmeticError):
    """A node produced a non-finite value (overflow, division by zero, ...)."""

    def __init__(self, node: "Expression", detail: str = "non-finite value"):
        self.node = node
        super().__init__(f"{detail} while evaluating '{node}'")


# ---------------------------------------------------------------------------
# nodes

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expression:
    """Base class of expression-tree nodes.

    Nodes are immutable.  Arithmetic operators build new trees, so derived
    fields can be composed from simpler ones (``u + x * y * v``).
    """

    __slots__ = ()

    # composition ------------------------------------------------------------
    def __add__(self, other):
        return BinOp("+", self, as_expression(other))

    def __radd__(self, other):
        return BinOp("+", as_expression(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expression(other))

    def __rsub__(self, other):
        return BinOp("-", as_expression(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expression(other))

    def __rmul__(self, other):
        return BinOp("*", as_expression(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expression(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expression(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return Pow(self, int(n))

    # evaluation -------------------------------------------------------------
    def __call__(self, x=0.0, y=0.0, z=0.0):
        """Evaluate at a point; arguments may be floats or broadcastable arrays."""
        with np.errstate(all="ignore"):
            return self._eval({"x": x, "y": y, "z": z})

    def at(self, p):
        return self(p[0], p[1], p[2])

    def dual(self, x, y, z) -> Dual:
        env = {
            "x": Dual.variable(x, 0),
            "y": Dual.variable(y, 1),
            "z": Dual.variable(z, 2),
        }
        with np.errstate(all="ignore"):
            return self._dual(env)

    def value_and_grad(self, p):
        """Value and exact gradient (dual numbers) at point ``p``."""
        d = self.dual(float(p[0]), float(p[1]), float(p[2]))
        return d.val, d.grad

    def grad(self, p) -> np.ndarray:
        return self.value_and_grad(p)[1]

    def dz(self, z):
        """Derivative in z, for fields that depend on z alone (arrays allowed)."""
        zero = np.zeros_like(z) if isinstance(z, np.ndarray) else 0.0
        return self.dual(zero, zero, z).d[2]

    def variables(self) -> set[str]:
        return set()

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Expression({self.to_string()!r})"

    def to_string(self) -> str:
        raise NotImplementedError

    _prec = _PREC_ATOM

    def _eval(self, env):
        raise NotImplementedError

    def _dual(self, env):
        raise NotImplementedError


def _check(node, value):
    if isinstance(value, np.ndarray):
        if not np.all(np.isfinite(value)):
            raise EvaluationError(node)
    elif not math.isfinite(value):
        raise EvaluationError(node)
    return value


def _check_dual(node, d: Dual):
    _check(node, d.val)
    for c in d.d:
        _check(node, c)
    return d


def _fmt_number(v: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(v))


@dataclass(frozen=True, eq=True, slots=True)
class Const(Expression):
    value: float

    @property
    def _prec(self):
        return _PREC_NEG if math.copysign(1.0, self.value) < 0 else _PREC_ATOM

    def to_string(self):
        return _fmt_number(self.value)

    def _eval(self, env):
        return self.value

    def _dual(self, env):
        return Dual.constant(self.value)


@dataclass(frozen=True, eq=True, slots=True)
class Var(Expression):
    name: str

    def to_string(self):
        return self.name

    def variables(self):
        return {self.name}

    def _eval(self, env):
        return env[self.name]

    def _dual(self, env):
        return env[self.name]


@dataclass(frozen=True, eq=True, slots=True)
class Neg(Expression):
    arg: Expression

    _prec = _PREC_NEG

    def to_string(self):
        return "-" + _wrap(self.arg, _PREC_NEG)

    def variables(self):
        return self.arg.variables()

    def _eval(self, env):
        return -self.arg._eval(env)

    def _dual(self, env):
        return -self.arg._dual(env)


@dataclass(frozen=True, eq=True, slots=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    @property
    def _prec(self):
        return _PREC_ADD if self.op in "+-" else _PREC_MUL

    def to_string(self):
        p = self._prec
        lhs = _wrap(self.left, p)
        # left-associative: a right operand of equal precedence needs parentheses
        rhs = _wrap(self.right, p + 1) if self.op in "-/" else _wrap(self.right, p)
        if self.op in "+-" and isinstance(self.right, (Neg, Const)) and rhs.startswith("-"):
            rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}" if p == _PREC_ADD else f"{lhs}{self.op}{rhs}"

    def variables(self):
        return self.left.variables() | self.right.variables()

    def _eval(self, env):
        a = self.left._eval(env)
        b = self.right._eval(env)
        try:
            if self.op == "+":
                r = a + b
            elif self.op == "-":
                r = a - b
            elif self.op == "*":
                r = a * b
            else:
                r = a / b
        except ZeroDivisionError:
            raise EvaluationError(self, "division by zero") from None
        return _check(self, r)

    def _dual(self, env):
        a = self.left._dual(env)
        b = self.right._dual(env)
        try:
            if self.op == "+":
                r = a + b
            elif self.op == "-":
                r = a - b
            elif self.op == "*":
                r = a * b
            else:
                r = a / b
        except ZeroDivisionError:
            raise EvaluationError(self, "division by zero") from None
        return _check_dual(self, r)


@dataclass(frozen=True, eq=True, slots=True)
class Pow(Expression):
    base: Expression
    exponent: int

    _prec = _PREC_POW

    def to_string(self):
        return f"{_wrap(self.base, _PREC_ATOM)}^{self.exponent}"

    def variables(self):
        return self.base.variables()

    def _eval(self, env):
        b = self.base._eval(env)
        try:
            if isinstance(b, np.ndarray):
                r = np.power(b, float(self.exponent))
            else:
                r = float(b) ** self.exponent
        except (ZeroDivisionError, OverflowError):
            raise EvaluationError(self) from None
        return _check(self, r)

    def _dual(self, env):
        try:
            r = self.base._dual(env).ipow(self.exponent)
        except (ZeroDivisionError, OverflowError):
            raise EvaluationError(self) from None
        return _check_dual(self, r)


@dataclass(frozen=True, eq=True, slots=True)
class Call(Expression):
    func: str
    arg: Expression

    def to_string(self):
        return f"{self.func}({self.arg.to_string()})"

    def variables(self):
        return self.arg.variables()

    def _eval(self, env):
        a = self.arg._eval(env)
        try:
            if isinstance(a, np.ndarray):
                r = getattr(np, self.func)(a)
            else:
                r = getattr(math, self.func)(a)
        except OverflowError:
            raise EvaluationError(self, "overflow") from None
        return _check(self, r)

    def _dual(self, env):
        try:
            r = getattr(self.arg._dual(env), self.func)()
        except OverflowError:
            raise EvaluationError(self, "overflow") from None
        return _check_dual(self, r)


def _wrap(node: Expression, min_prec: int) -> str:
    s = node.to_string()
    return f"({s})" if node._prec < min_prec else s


def as_expression(v) -> Expression:
    if isinstance(v, Expression):
        return v
    if isinstance(v, (int, float, np.integer, np.floating)):
        return Const(float(v))
    if isinstance(v, str):
        return parse_expression(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expression")


X, Y, Z = Var("x"), Var("y"), Var("z")


def exp(e) -> Expression:
    return Call("exp", as_expression(e))


def cosh(e) -> Expression:
    return Call("cosh", as_expression(e))


def sinh(e) -> Expression:
    return Call("sinh", as_expression(e))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok):
        return ParseError(msg, _byte_offset(self.src, tok[2]), self.src)

    def expect(self, text):
        tok = self.take()
        if tok[1] != text:
            found = tok[1] or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}", tok)
        return tok

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected token {tok[1]!r}", tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
                sign = -1 if self.take()[1] == "-" else 1
            tok = self.take()
            if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
                raise self.error("exponent must be an integer literal", tok)
            node = Pow(node, sign * int(tok[1]))
        return node

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise self.error(f"unknown identifier {text!r}", tok)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = text or "end of input"
        raise self.error(f"unexpected {found!r}", tok)


def parse_expression(src: str) -> Expression:
    """Parse ``src`` into an expression tree over x, y, z."""
    return _Parser(src).parse()
