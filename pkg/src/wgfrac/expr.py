"""A small single-variable expression language.

Grammar (whitespace ignored)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right-associative, binds tighter than unary minus
    atom    := NUMBER | CONSTANT | VARIABLE | FUNCTION "(" expr ")" | "(" expr ")"

``FUNCTION`` is one of exp, log, sin, cos, sqrt, abs; ``CONSTANT`` is pi or e.
Any other identifier is the free variable; an expression may use only one.
So ``-x^2`` means ``-(x^2)`` and ``2^-x`` is accepted.

Evaluation works on floats and on numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import EvalError, MultipleVariablesError, ParseError, UnsupportedError

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float
    label: str | None = field(default=None, compare=False)
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str = "x"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = field(default=-1, compare=False)


Expr = Union[Num, Var, Neg, BinOp, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def Pow(a, b):
    return BinOp("^", a, b)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(_Token(kind, m.group(kind), _byte_offset(text, start)))
        i = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


_ATOM_START = frozenset({"NUMBER", "IDENTIFIER", "(", "-"})


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variable: str | None = None

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "end":
            raise ParseError(self._found(), self.tok.pos, frozenset({text}))
        return self.take()

    def _found(self) -> str:
        return "unexpected end of input" if self.tok.kind == "end" else f"unexpected {self.tok.text!r}"

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(self._found(), self.tok.pos, frozenset({"+", "-", "*", "/", "^", "end"}))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take()
            node = BinOp(op.text, node, self.term(), op.pos)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.take()
            node = BinOp(op.text, node, self.unary(), op.pos)
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            op = self.take()
            return Neg(self.unary(), op.pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            op = self.take()
            return BinOp("^", base, self.unary(), op.pos)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(float(t.text), pos=t.pos)
        if t.kind == "id":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg, t.pos)
            if t.text in CONSTANTS:
                return Num(CONSTANTS[t.text], label=t.text, pos=t.pos)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise ParseError(f"unknown function {t.text!r}", t.pos, frozenset(FUNCTIONS))
            if self.variable is None:
                self.variable = t.text
            elif self.variable != t.text:
                raise MultipleVariablesError(
                    f"second variable {t.text!r} (already using {self.variable!r})", t.pos
                )
            return Var(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(self._found(), t.pos, _ATOM_START)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    return _Parser(text).parse()


def variable_of(e: Expr) -> str | None:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Num):
        return None
    if isinstance(e, (Neg, Call)):
        return variable_of(e.arg)
    return variable_of(e.left) or variable_of(e.right)


def is_constant(e: Expr) -> bool:
    return variable_of(e) is None


# ------------------------------------------------------------- evaluation


def _fail(node, message):
    raise EvalError(f"{message} (expression offset {node.pos})", node.pos)


def _scalar_or_array(y):
    if isinstance(y, np.ndarray) and y.ndim == 0:
        return float(y)
    return y


def evaluate(e: Expr, x):
    """Evaluate ``e`` at ``x`` (float or numpy array)."""
    with np.errstate(all="ignore"):
        y = _eval(e, np.asarray(x, dtype=float) if not np.isscalar(x) else float(x))
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(y)
    return np.broadcast_to(y, np.shape(x)).astype(float)


def _check(node, y):
    if not np.all(np.isfinite(y)):
        _fail(node, "non-finite result")
    return y


def _eval(e, x):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Call):
        u = _eval(e.arg, x)
        if e.func == "log":
            if np.any(np.asarray(u) <= 0):
                _fail(e, "log of a non-positive value")
            return np.log(u)
        if e.func == "sqrt":
            if np.any(np.asarray(u) < 0):
                _fail(e, "sqrt of a negative value")
            return np.sqrt(u)
        if e.func == "exp":
            return _check(e, np.exp(u))
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[e.func](u)
    u = _eval(e.left, x)
    v = _eval(e.right, x)
    if e.op == "+":
        return u + v
    if e.op == "-":
        return u - v
    if e.op == "*":
        return _check(e, u * v)
    if e.op == "/":
        if np.any(np.asarray(v) == 0):
            _fail(e, "division by zero")
        return _check(e, u / v)
    # power: real-valued only for integral exponents or positive bases
    if not is_constant(e.right) and np.any(np.asarray(u) <= 0):
        _fail(e, "non-constant exponent needs a positive base")
    if np.any((np.asarray(u) < 0) & (np.asarray(v) != np.round(v))):
        _fail(e, "negative base with non-integer exponent")
    if np.any((np.asarray(u) == 0) & (np.asarray(v) < 0)):
        _fail(e, "zero to a negative power")
    return _check(e, np.power(u, v))


def _make_callable(cls):
    cls.__call__ = lambda self, x: evaluate(self, x)
    return cls


for _cls in (Num, Var, Neg, BinOp, Call):
    _make_callable(_cls)


# ---------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _num_text(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


def to_text(e: Expr) -> str:
    """Render ``e`` in the grammar accepted by :func:`parse`."""
    if isinstance(e, Num):
        return e.label or _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return f"-{inner}" if isinstance(e.arg, (Num, Var, Call)) else f"-({inner})"
    p = _PREC[e.op]
    left = to_text(e.left)
    right = to_text(e.right)
    if _needs_parens(e.left, p, right_side=False, op=e.op):
        left = f"({left})"
    if _needs_parens(e.right, p, right_side=True, op=e.op):
        right = f"({right})"
    return f"{left}{e.op}{right}" if e.op == "^" else f"{left} {e.op} {right}"


def _needs_parens(child, p, right_side, op):
    if isinstance(child, Neg):
        return True
    if not isinstance(child, BinOp):
        return False
    cp = _PREC[child.op]
    if op == "^":
        # right-associative
        return cp < p or (cp == p and not right_side)
    return cp < p or (cp == p and right_side)


# ------------------------------------------------------- differentiation

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(e, v):
    return isinstance(e, Num) and e.value == v


def _add(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def _sub(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return Sub(a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(b, Num):
        a, b = b, a
    return Mul(a, b)


def _div(a, b):
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Div(a, b)


def _pow(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value**b.value)
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return Pow(a, b)


def differentiate(e: Expr) -> Expr:
    """Symbolic derivative with respect to the free variable.

    Only constant folding and 0/1 identities are applied to the result.
    ``abs`` is not differentiable here and raises UnsupportedError.
    """
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, Call):
        u = e.arg
        du = differentiate(u)
        if e.func == "abs":
            raise UnsupportedError("abs() cannot be differentiated")
        if e.func == "exp":
            outer = Call("exp", u)
        elif e.func == "log":
            return _div(du, u)
        elif e.func == "sin":
            outer = Call("cos", u)
        elif e.func == "cos":
            outer = _neg(Call("sin", u))
        else:  # sqrt
            return _div(du, _mul(Num(2.0), Call("sqrt", u)))
        return _mul(du, outer)
    u, v = e.left, e.right
    du, dv = differentiate(u), differentiate(v)
    if e.op == "+":
        return _add(du, dv)
    if e.op == "-":
        return _sub(du, dv)
    if e.op == "*":
        return _add(_mul(du, v), _mul(u, dv))
    if e.op == "/":
        return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, Num(2.0)))
    if is_constant(v):
        # d(u^c) = c * u^(c-1) * u'
        return _mul(_mul(v, _pow(u, _sub(v, ONE))), du)
    # d(u^v) = u^v * (v' log u + v u'/u), valid for u > 0
    return _mul(e, _add(_mul(dv, Call("log", u)), _div(_mul(v, du), u)))
