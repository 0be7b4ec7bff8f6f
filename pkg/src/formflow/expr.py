"""Scalar expressions: parsing, evaluation and symbolic differentiation.

Grammar (no implicit multiplication)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``; it is
right associative. Known functions are ``sin, cos, exp, ln, sqrt``.

Simplification is deliberately conservative: constant folding plus
elimination of additive zeros and multiplicative ones/zeros.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "Expression",
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownFunctionError",
    "UnboundVariableError",
    "SingularEvaluationError",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Func",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "evaluate_array",
    "differentiate",
    "substitute",
    "as_expression",
]


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownFunctionError(ExpressionSyntaxError):
    pass


class UnboundVariableError(ExpressionError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class SingularEvaluationError(ExpressionError, ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# scalar kernels shared by evaluation and constant folding


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise SingularEvaluationError("division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    try:
        r = math.pow(a, b)
    except (ValueError, ZeroDivisionError):
        raise SingularEvaluationError(f"invalid power {a!r}^{b!r}") from None
    except OverflowError:
        raise SingularEvaluationError(f"overflow in {a!r}^{b!r}") from None
    return r


def _ln(a: float) -> float:
    if not a > 0.0:
        raise SingularEvaluationError(f"ln of non-positive value {a!r}")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise SingularEvaluationError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise SingularEvaluationError(f"overflow in exp({a!r})") from None


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "ln": _ln,
    "sqrt": _sqrt,
}

_NP_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
}


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise SingularEvaluationError(f"non-finite result {value!r}")
    return value


# ---------------------------------------------------------------------------
# AST nodes


class Node:
    __slots__ = ()
    precedence = 5

    def variables(self) -> set[str]:
        out: set[str] = set()
        self._collect(out)
        return out

    def _collect(self, out: set[str]) -> None:
        for child in self.children():
            child._collect(out)

    def children(self) -> tuple["Node", ...]:
        return ()

    def _key(self) -> tuple:
        return (type(self).__name__,) + tuple(c._key() for c in self.children())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Node) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        args = ", ".join(repr(c) for c in self.children())
        return f"{type(self).__name__}({args})"


class Const(Node):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)

    def _key(self) -> tuple:
        return ("Const", self.value)

    def __repr__(self) -> str:
        return f"Const({self.value!r})"

    def eval(self, env: Mapping[str, float]) -> float:
        return self.value

    def diff(self, var: str) -> Node:
        return ZERO


class Var(Node):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def _key(self) -> tuple:
        return ("Var", self.name)

    def __repr__(self) -> str:
        return f"Var({self.name!r})"

    def _collect(self, out: set[str]) -> None:
        out.add(self.name)

    def eval(self, env: Mapping[str, float]) -> float:
        try:
            return env[self.name]
        except KeyError:
            raise UnboundVariableError(self.name) from None

    def diff(self, var: str) -> Node:
        return ONE if self.name == var else ZERO


class _Binary(Node):
    __slots__ = ("left", "right")
    symbol = "?"

    def __init__(self, left: Node, right: Node):
        self.left = left
        self.right = right

    def children(self) -> tuple[Node, ...]:
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()
    symbol = "+"
    precedence = 1

    def eval(self, env):
        return self.left.eval(env) + self.right.eval(env)

    def diff(self, var):
        return add(self.left.diff(var), self.right.diff(var))


class Sub(_Binary):
    __slots__ = ()
    symbol = "-"
    precedence = 1

    def eval(self, env):
        return self.left.eval(env) - self.right.eval(env)

    def diff(self, var):
        return sub(self.left.diff(var), self.right.diff(var))


class Mul(_Binary):
    __slots__ = ()
    symbol = "*"
    precedence = 2

    def eval(self, env):
        return self.left.eval(env) * self.right.eval(env)

    def diff(self, var):
        a, b = self.left, self.right
        return add(mul(a.diff(var), b), mul(a, b.diff(var)))


class Div(_Binary):
    __slots__ = ()
    symbol = "/"
    precedence = 2

    def eval(self, env):
        return _div(self.left.eval(env), self.right.eval(env))

    def diff(self, var):
        a, b = self.left, self.right
        da, db = a.diff(var), b.diff(var)
        if _is_zero(db):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))


class Pow(_Binary):
    __slots__ = ()
    symbol = "^"
    precedence = 4

    def eval(self, env):
        return _pow(self.left.eval(env), self.right.eval(env))

    def diff(self, var):
        base, ex = self.left, self.right
        if var not in ex.variables():
            # c * f^(c-1) * f'
            db = base.diff(var)
            if _is_zero(db):
                return ZERO
            return mul(mul(ex, power(base, sub(ex, ONE))), db)
        if var not in base.variables():
            # f^g * ln(f) * g'
            return mul(mul(self, func("ln", base)), ex.diff(var))
        # f^g * (g' ln f + g f' / f)
        term = add(
            mul(ex.diff(var), func("ln", base)),
            div(mul(ex, base.diff(var)), base),
        )
        return mul(self, term)


class Neg(Node):
    __slots__ = ("arg",)
    precedence = 3

    def __init__(self, arg: Node):
        self.arg = arg

    def children(self):
        return (self.arg,)

    def eval(self, env):
        return -self.arg.eval(env)

    def diff(self, var):
        return neg(self.arg.diff(var))


class Func(Node):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Node):
        if name not in FUNCTIONS:
            raise ExpressionError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _key(self):
        return ("Func", self.name, self.arg._key())

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"

    def eval(self, env):
        return FUNCTIONS[self.name](self.arg.eval(env))

    def diff(self, var):
        f = self.arg
        df = f.diff(var)
        if _is_zero(df):
            return ZERO
        if self.name == "sin":
            outer = func("cos", f)
        elif self.name == "cos":
            outer = neg(func("sin", f))
        elif self.name == "exp":
            outer = self
        elif self.name == "ln":
            return div(df, f)
        else:  # sqrt
            return div(df, mul(Const(2.0), self))
        return mul(outer, df)


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_zero(n: Node) -> bool:
    return isinstance(n, Const) and n.value == 0.0


def _is_one(n: Node) -> bool:
    return isinstance(n, Const) and n.value == 1.0


def _fold(fn: Callable[[], float]) -> Const | None:
    """Fold to a constant when the result is a finite, non-singular float."""
    try:
        value = fn()
    except (SingularEvaluationError, OverflowError, ValueError):
        return None
    if not math.isfinite(value):
        return None
    return Const(value)


# smart constructors (conservative simplification)


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda: a.value + b.value) or Add(a, b)
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda: a.value - b.value) or Sub(a, b)
    if _is_zero(b):
        return a
    if _is_zero(a):
        return neg(b)
    return Sub(a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda: a.value * b.value) or Mul(a, b)
    if _is_zero(a) or _is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    if isinstance(a, Const) and a.value == -1.0:
        return neg(b)
    if isinstance(b, Const) and b.value == -1.0:
        return neg(a)
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda: _div(a.value, b.value)) or Div(a, b)
    if _is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    return Div(a, b)


def power(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda: _pow(a.value, b.value)) or Pow(a, b)
    if _is_zero(b):
        return ONE
    if _is_one(b):
        return a
    if _is_one(a):
        return ONE
    return Pow(a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name: str, a: Node) -> Node:
    if isinstance(a, Const):
        return _fold(lambda: FUNCTIONS[name](a.value)) or Func(name, a)
    return Func(name, a)


# ---------------------------------------------------------------------------
# printing


def _format_const(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_string(n: Node) -> str:
    if isinstance(n, Const):
        return _format_const(n.value)
    if isinstance(n, Var):
        return n.name
    if isinstance(n, Func):
        return f"{n.name}({to_string(n.arg)})"
    if isinstance(n, Neg):
        inner = to_string(n.arg)
        if n.arg.precedence < Neg.precedence:
            inner = f"({inner})"
        return f"-{inner}"
    assert isinstance(n, _Binary)
    left, right = to_string(n.left), to_string(n.right)
    if isinstance(n, Pow):
        # right associative: parenthesize an equal-precedence left operand
        if n.left.precedence <= n.precedence:
            left = f"({left})"
        if n.right.precedence < Neg.precedence:
            right = f"({right})"
        return f"{left}^{right}"
    if n.left.precedence < n.precedence:
        left = f"({left})"
    if n.right.precedence <= n.precedence or isinstance(n.right, Neg):
        right = f"({right})"
    return f"{left} {n.symbol} {right}"


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(
                f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok, what: str = None):
        kind, value, offset = tok
        if what is None:
            what = "unexpected end of input" if kind == "end" else f"unexpected {value!r}"
        raise ExpressionSyntaxError(what, offset, self.text)

    def expect(self, value: str):
        tok = self.advance()
        if tok[1] != value or tok[0] != "op":
            self.error(tok, f"expected {value!r}, got {tok[1]!r}" if tok[0] != "end" else None)
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(self.peek())
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            operand = self.unary()
            # negating a literal is exact, keep it a constant so printed
            # negative constants parse back to the same tree
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return Pow(base, self.unary())
        return base

    def primary(self) -> Node:
        tok = self.advance()
        kind, value, offset = tok
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {value!r}", offset, self.text
                    )
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value in FUNCTIONS:
                self.error(nxt, f"expected '(' after function {value!r}")
            return Var(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.error(tok)


# ---------------------------------------------------------------------------
# public wrapper


class Expression:
    """Immutable scalar expression over named variables.

    ``free_variables`` is the sorted tuple of variable names in the tree.
    Arithmetic operators build new expressions with conservative simplification.
    """

    __slots__ = ("ast", "free_variables")

    def __init__(self, ast: Node):
        object.__setattr__(self, "ast", ast)
        object.__setattr__(self, "free_variables", tuple(sorted(ast.variables())))

    def __setattr__(self, name, value):
        raise AttributeError("Expression is immutable")

    @classmethod
    def constant(cls, value: float) -> "Expression":
        return cls(Const(value))

    @classmethod
    def variable(cls, name: str) -> "Expression":
        return cls(Var(name))

    @property
    def is_zero(self) -> bool:
        return _is_zero(self.ast)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.ast, Const)

    def __call__(self, **point: float) -> float:
        return evaluate(self, point)

    def __str__(self) -> str:
        return to_string(self.ast)

    def __repr__(self) -> str:
        return f"Expression({str(self)!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Expression) and self.ast == other.ast

    def __hash__(self) -> int:
        return hash(self.ast)

    # arithmetic
    def __add__(self, other):
        return Expression(add(self.ast, as_expression(other).ast))

    def __radd__(self, other):
        return Expression(add(as_expression(other).ast, self.ast))

    def __sub__(self, other):
        return Expression(sub(self.ast, as_expression(other).ast))

    def __rsub__(self, other):
        return Expression(sub(as_expression(other).ast, self.ast))

    def __mul__(self, other):
        return Expression(mul(self.ast, as_expression(other).ast))

    def __rmul__(self, other):
        return Expression(mul(as_expression(other).ast, self.ast))

    def __truediv__(self, other):
        return Expression(div(self.ast, as_expression(other).ast))

    def __rtruediv__(self, other):
        return Expression(div(as_expression(other).ast, self.ast))

    def __pow__(self, other):
        return Expression(power(self.ast, as_expression(other).ast))

    def __rpow__(self, other):
        return Expression(power(as_expression(other).ast, self.ast))

    def __neg__(self):
        return Expression(neg(self.ast))

    def __pos__(self):
        return self

    def apply(self, name: str) -> "Expression":
        """Wrap in one of the known functions, e.g. ``e.apply("sin")``."""
        return Expression(func(name, self.ast))


def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, Node):
        return Expression(value)
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return Expression.constant(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expression")


def parse(text: str) -> Expression:
    """Parse infix text into an :class:`Expression`.

    Raises :class:`ExpressionSyntaxError` (with a byte ``offset``) on malformed
    input and :class:`UnknownFunctionError` for calls to unknown functions.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return Expression(_Parser(text).parse())


def evaluate(e: Expression, point: Mapping[str, float]) -> float:
    try:
        value = e.ast.eval(point)
    except OverflowError:
        raise SingularEvaluationError("floating point overflow") from None
    return _finite(float(value))


def evaluate_array(e: Expression, arrays: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation; all arrays broadcast together.

    Singular or non-finite values anywhere raise :class:`SingularEvaluationError`.
    """
    arrays = {k: np.asarray(v, dtype=float) for k, v in arrays.items()}
    shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
    with np.errstate(all="raise"):
        try:
            out = _eval_np(e.ast, arrays)
        except FloatingPointError as exc:
            raise SingularEvaluationError(str(exc)) from None
    out = np.broadcast_to(np.asarray(out, dtype=float), shape).copy()
    if not np.all(np.isfinite(out)):
        raise SingularEvaluationError("non-finite value in array evaluation")
    return out


def _eval_np(n: Node, env):
    if isinstance(n, Const):
        return n.value
    if isinstance(n, Var):
        try:
            return env[n.name]
        except KeyError:
            raise UnboundVariableError(n.name) from None
    if isinstance(n, Neg):
        return -_eval_np(n.arg, env)
    if isinstance(n, Func):
        arg = _eval_np(n.arg, env)
        if n.name == "ln" and np.any(np.asarray(arg) <= 0):
            raise SingularEvaluationError("ln of non-positive value")
        if n.name == "sqrt" and np.any(np.asarray(arg) < 0):
            raise SingularEvaluationError("sqrt of negative value")
        return _NP_FUNCTIONS[n.name](arg)
    a = _eval_np(n.left, env)
    b = _eval_np(n.right, env)
    if isinstance(n, Add):
        return np.add(a, b)
    if isinstance(n, Sub):
        return np.subtract(a, b)
    if isinstance(n, Mul):
        return np.multiply(a, b)
    if isinstance(n, Div):
        if np.any(np.asarray(b) == 0):
            raise SingularEvaluationError("division by zero")
        return np.divide(a, b)
    return np.power(a, b)


def differentiate(e: Expression, var: str) -> Expression:
    """Exact symbolic partial derivative with respect to ``var``."""
    return Expression(e.ast.diff(var))


def _subst(n: Node, mapping: Mapping[str, Node]) -> Node:
    if isinstance(n, Const):
        return n
    if isinstance(n, Var):
        return mapping.get(n.name, n)
    if isinstance(n, Neg):
        return neg(_subst(n.arg, mapping))
    if isinstance(n, Func):
        return func(n.name, _subst(n.arg, mapping))
    a, b = _subst(n.left, mapping), _subst(n.right, mapping)
    return {Add: add, Sub: sub, Mul: mul, Div: div, Pow: power}[type(n)](a, b)


def substitute(e: Expression, mapping: Mapping[str, object]) -> Expression:
    """Replace variables by expressions (or numbers / expression strings)."""
    nodes = {k: as_expression(v).ast for k, v in mapping.items()}
    return Expression(_subst(e.ast, nodes))
