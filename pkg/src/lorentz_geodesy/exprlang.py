"""Scalar expression language used to specify metric coefficients.

Grammar (highest precedence first)::

    atom    := number | identifier | identifier '(' expr ')' | '(' expr ')'
    power   := atom ['^' unary]          (right associative)
    unary   := '-' unary | '+' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Identifiers are free-form; ``pi`` and ``e`` are constants unless bound
explicitly. Function names: sin cos tan sinh cosh tanh exp ln (alias log)
sqrt abs atan.

Expressions are immutable trees. They can be evaluated directly, or
compiled into plain Python functions for the hot loops of the integrator
and the variational solvers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .exceptions import (
    ExprDomainError,
    ExprSyntaxError,
    NotDifferentiableError,
    UnboundVariableError,
)

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary",
    "parse", "as_expr", "evaluate", "diff", "to_source", "variables",
    "compile_scalar", "compile_vector", "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "ln",
             "sqrt", "abs", "atan")
_ALIASES = {"log": "ln"}
CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    """Base class of expression nodes. Supports ``+ - * / **`` with numbers."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_source(self)

    def __call__(self, **bindings):
        return evaluate(self, bindings)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str   # 'neg' or a function name
    arg: Expr


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str   # one of + - * / ^
    left: Expr
    right: Expr


ExprLike = Union[Expr, str, float, int]


def as_expr(value: ExprLike) -> Expr:
    """Coerce a number, source string or expression to an :class:`Expr`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot interpret {value!r} as an expression")


# -- constructors with constant folding ---------------------------------------

def _is(e, v):
    return isinstance(e, Const) and e.value == v


def add(a, b):
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Binary("+", a, b)


def sub(a, b):
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return Binary("-", a, b)


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return Const(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return Binary("*", a, b)


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return Const(0.0)
    return Binary("/", a, b)


def power(a, b):
    a, b = as_expr(a), as_expr(b)
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(_pow(a.value, b.value))
        except ExprDomainError:
            return Binary("^", a, b)
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return Const(1.0)
    return Binary("^", a, b)


def neg(a):
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def func(name, a):
    a = as_expr(a)
    name = _ALIASES.get(name, name)
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if isinstance(a, Const):
        try:
            return Const(_SCALAR_FUNCS[name](a.value))
        except ExprDomainError:
            pass
    return Unary(name, a)


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        text = m.group(kind)
        if text == "**":
            text = "^"
        tokens.append((kind, text, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, t, off = self.take()
        if t != text:
            raise ExprSyntaxError(f"expected {text!r}, got {t or 'end of input'!r}",
                                  self.source, off)

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.term()
            left = Binary(op, left, right)
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.unary()
            left = Binary(op, left, right)
        return left

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            exponent = self.unary()
            return Binary("^", base, exponent)
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                name = _ALIASES.get(text, text)
                if name not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", self.source, off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(name, arg)
            return Var(text)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", self.source, off)


def parse(source: str) -> Expr:
    """Parse infix source text into an expression tree.

    >>> parse("1+x^2")
    Binary(op='+', left=Const(value=1.0), right=Binary(op='^', left=Var(name='x'), right=Const(value=2.0)))
    """
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", source if isinstance(source, str) else "", 0)
    p = _Parser(source)
    tree = p.expr()
    kind, text, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {text!r}", source, off)
    return tree


# -- printing -----------------------------------------------------------------

def to_source(e: Expr) -> str:
    """Fully parenthesised source text; ``parse(to_source(e))`` evaluates like ``e``."""
    if isinstance(e, Const):
        r = repr(e.value)
        if r in ("inf", "-inf", "nan"):
            raise ValueError("non-finite constants cannot be printed")
        return f"({r})" if e.value < 0 or r.startswith("-") else r
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_source(e.arg)})"
        return f"{e.op}({to_source(e.arg)})"
    return f"({to_source(e.left)}{e.op}{to_source(e.right)})"


def variables(e: Expr) -> frozenset:
    """Free identifiers of ``e`` (constants ``pi``/``e`` included if used)."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return frozenset()


# -- scalar semantics -----------------------------------------------------------

def _ln(x):
    if x <= 0.0:
        raise ExprDomainError(f"ln of nonpositive value {x!r}")
    return math.log(x)


def _sqrt(x):
    if x < 0.0:
        raise ExprDomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def _div(a, b):
    if b == 0.0:
        raise ExprDomainError("division by zero")
    return a / b


def _pow(a, b):
    if a < 0.0 and b != math.floor(b):
        raise ExprDomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    if a == 0.0 and b < 0.0:
        raise ExprDomainError("zero raised to a negative power")
    try:
        return math.pow(a, b)
    except OverflowError as exc:
        raise ExprDomainError(f"overflow in {a!r}^{b!r}") from exc


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError as exc:
        raise ExprDomainError(f"overflow in exp({x!r})") from exc


def _wrap(fn, name):
    def inner(x):
        try:
            return fn(x)
        except (OverflowError, ValueError) as exc:
            raise ExprDomainError(f"{name}({x!r}): {exc}") from exc
    return inner


_SCALAR_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": _wrap(math.sinh, "sinh"), "cosh": _wrap(math.cosh, "cosh"),
    "tanh": math.tanh, "exp": _exp, "ln": _ln, "sqrt": _sqrt,
    "abs": abs, "atan": math.atan,
}


def evaluate(e: ExprLike, bindings: Mapping[str, float] | None = None, **kw) -> float:
    """Evaluate ``e`` in IEEE double precision.

    Raises :class:`UnboundVariableError` for free identifiers without a
    binding and :class:`ExprDomainError` instead of returning NaN/inf.
    """
    env = dict(bindings or {})
    env.update(kw)
    value = _eval(as_expr(e), env)
    if not math.isfinite(value):
        raise ExprDomainError(f"non-finite result {value!r}")
    return value


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.name in env:
            return float(env[e.name])
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        raise UnboundVariableError(f"variable {e.name!r} is not bound")
    if isinstance(e, Unary):
        x = _eval(e.arg, env)
        if e.op == "neg":
            return -x
        return _SCALAR_FUNCS[e.op](x)
    a = _eval(e.left, env)
    b = _eval(e.right, env)
    op = e.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return _div(a, b)
    return _pow(a, b)


# -- symbolic differentiation ---------------------------------------------------

def diff(e: ExprLike, v: str) -> Expr:
    """Symbolic derivative of ``e`` with respect to the variable named ``v``.

    ``abs`` has no symbolic derivative and raises :class:`NotDifferentiableError`.
    """
    return _diff(as_expr(e), v)


def _diff(e, v):
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == v else 0.0)
    if isinstance(e, Unary):
        u = e.arg
        if e.op == "abs":
            if v in variables(u):
                raise NotDifferentiableError("abs() is not symbolically differentiable")
            return Const(0.0)
        du = _diff(u, v)
        if _is(du, 0.0):
            return Const(0.0)
        op = e.op
        if op == "neg":
            return neg(du)
        if op == "sin":
            outer = func("cos", u)
        elif op == "cos":
            outer = neg(func("sin", u))
        elif op == "tan":
            outer = div(Const(1.0), power(func("cos", u), Const(2.0)))
        elif op == "sinh":
            outer = func("cosh", u)
        elif op == "cosh":
            outer = func("sinh", u)
        elif op == "tanh":
            outer = div(Const(1.0), power(func("cosh", u), Const(2.0)))
        elif op == "exp":
            outer = e
        elif op == "ln":
            outer = div(Const(1.0), u)
        elif op == "sqrt":
            outer = div(Const(0.5), e)
        elif op == "atan":
            outer = div(Const(1.0), add(Const(1.0), power(u, Const(2.0))))
        else:  # pragma: no cover
            raise NotDifferentiableError(op)
        return mul(outer, du)
    a, b = e.left, e.right
    da, db = _diff(a, v), _diff(b, v)
    if e.op == "+":
        return add(da, db)
    if e.op == "-":
        return sub(da, db)
    if e.op == "*":
        return add(mul(da, b), mul(a, db))
    if e.op == "/":
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    # power
    if isinstance(b, Const) or v not in variables(b):
        if _is(da, 0.0):
            return Const(0.0)
        return mul(mul(b, power(a, sub(b, Const(1.0)))), da)
    # general a^b = exp(b ln a)
    return mul(e, add(mul(db, func("ln", a)), div(mul(b, da), a)))


# -- compilation -----------------------------------------------------------------

def _codegen(e, names, ns):
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        if e.name in names:
            return names[e.name]
        if e.name in CONSTANTS:
            return repr(CONSTANTS[e.name])
        raise UnboundVariableError(f"variable {e.name!r} is not bound")
    if isinstance(e, Unary):
        inner = _codegen(e.arg, names, ns)
        if e.op == "neg":
            return f"(-{inner})"
        return f"{ns}{e.op}({inner})"
    a = _codegen(e.left, names, ns)
    b = _codegen(e.right, names, ns)
    if e.op in "+-*":
        return f"({a}{e.op}{b})"
    if e.op == "/":
        return f"{ns}div({a},{b})"
    if isinstance(e.right, Const) and e.right.value == 2.0:
        return f"({a}*{a})" if isinstance(e.left, (Var, Const)) else f"{ns}sq({a})"
    return f"{ns}pow({a},{b})"


def _scalar_namespace():
    ns = {f"S_{k}": v for k, v in _SCALAR_FUNCS.items()}
    ns["S_div"] = _div
    ns["S_pow"] = _pow
    ns["S_sq"] = lambda a: a * a
    return ns


def compile_scalar(exprs: Sequence[ExprLike], argnames: Sequence[str]):
    """Compile expressions into ``f(*args) -> tuple`` of floats.

    The returned function raises :class:`ExprDomainError` on domain
    violations (including overflow).
    """
    exprs = [as_expr(x) for x in exprs]
    names = {n: f"a{i}" for i, n in enumerate(argnames)}
    body = ", ".join(_codegen(x, names, "S_") for x in exprs)
    args = ", ".join(names[n] for n in argnames)
    src = (f"def _f({args}):\n"
           f"    try:\n"
           f"        return ({body},)\n"
           f"    except (OverflowError, ZeroDivisionError, ValueError) as exc:\n"
           f"        raise ExprDomainError(str(exc)) from exc\n")
    ns = _scalar_namespace()
    ns["ExprDomainError"] = ExprDomainError
    exec(compile(src, "<exprlang>", "exec"), ns)
    return ns["_f"]


def _np_div(a, b):
    return np.divide(a, b)


def _np_pow(a, b):
    return np.power(a, b)


_VECTOR_FUNCS = {
    "V_sin": np.sin, "V_cos": np.cos, "V_tan": np.tan, "V_sinh": np.sinh,
    "V_cosh": np.cosh, "V_tanh": np.tanh, "V_exp": np.exp, "V_ln": np.log,
    "V_sqrt": np.sqrt, "V_abs": np.abs, "V_atan": np.arctan,
    "V_div": _np_div, "V_pow": _np_pow, "V_sq": np.square,
}


def compile_vector(exprs: Sequence[ExprLike], argnames: Sequence[str]):
    """Compile expressions into a numpy-vectorised ``f(*arrays) -> ndarray``.

    The result has shape ``(len(exprs),) + broadcast_shape(arrays)``.
    Floating point faults (other than underflow) raise
    :class:`ExprDomainError`.
    """
    exprs = [as_expr(x) for x in exprs]
    names = {n: f"a{i}" for i, n in enumerate(argnames)}
    parts = [_codegen(x, names, "V_") for x in exprs]
    args = ", ".join(names[n] for n in argnames)
    src = (f"def _f({args}):\n"
           f"    shape = np.broadcast_shapes({''.join(names[n] + '.shape, ' for n in argnames)})\n"
           f"    with np.errstate(all='raise', under='ignore'):\n"
           f"        try:\n"
           f"            vals = ({', '.join(parts)},)\n"
           f"        except FloatingPointError as exc:\n"
           f"            raise ExprDomainError(str(exc)) from exc\n"
           f"    out = np.empty(({len(parts)},) + shape)\n"
           f"    for i, v in enumerate(vals):\n"
           f"        out[i] = v\n"
           f"    return out\n")
    ns = dict(_VECTOR_FUNCS)
    ns["np"] = np
    ns["ExprDomainError"] = ExprDomainError
    exec(compile(src, "<exprlang-vec>", "exec"), ns)
    fn = ns["_f"]

    def wrapped(*arrays):
        return fn(*(np.asarray(a, dtype=float) for a in arrays))

    return wrapped
