"""
The coordinate-expression language.

Scalar fields on a chart (metric entries, structure tensors, Lee forms, the
function ``f`` of a conformal deformation) are written as closed-form
expressions in the coordinates ``x1 .. xn``:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' rational)?
    base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
    func   := exp | log | sin | cos | sqrt

Exponents are rational literals: ``x1^2``, ``x1^-2`` or ``x1^(1/2)``. There
are no user functions; compound fields are inlined by the author. Parsed
expressions are evaluated over second-order jets (:class:`Jet2`) so a single
pass returns the value, gradient and Hessian at a point.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from torsionlab.errors import (
    CoordinateRangeError,
    DomainViolationError,
    ExprSyntaxError,
    UnknownIdentifierError,
)

log = logging.getLogger(__name__)

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")

_TOKEN_TABLE = [
    ("number", re.compile(r"(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")),
    ("ident", re.compile(r"[A-Za-z_][A-Za-z_0-9]*")),
    ("op", re.compile(r"[-+*/^()]")),
    ("space", re.compile(r"\s+")),
]
_COORD_REGEX = re.compile(r"x(\d+)$")


# ----------------------------------------------------------------------------
# Expression tree
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: Fraction


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


Node = Union[Const, Coord, Param, Neg, BinOp, Pow, Func]


@dataclass(frozen=True)
class ScalarExpr:
    """A parsed expression together with the coordinates it reads."""

    ast: Node
    free_coords: FrozenSet[int] = field(default=frozenset())

    @property
    def text(self) -> str:
        return to_text(self.ast)

    def is_constant(self) -> bool:
        return isinstance(self.ast, Const)

    def __str__(self) -> str:
        return self.text


def constant(value: float) -> ScalarExpr:
    return ScalarExpr(Const(float(value)), frozenset())


def coordinate(index: int) -> ScalarExpr:
    return ScalarExpr(Coord(index), frozenset({index}))


def to_text(node: Node) -> str:
    """
    Pretty-print a tree. The output is fully parenthesised so that parsing it
    again gives back an equal tree.
    """
    if isinstance(node, Const):
        return f"({node.value!r})" if node.value < 0 else repr(node.value)
    if isinstance(node, Coord):
        return f"x{node.index}"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        exp = node.exponent
        if exp.denominator == 1 and exp >= 0:
            exp_text = str(exp.numerator)
        else:
            exp_text = f"({exp})"
        return f"({to_text(node.base)})^{exp_text}"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        for kind, regex in _TOKEN_TABLE:
            match = regex.match(text, pos)
            if match:
                if kind != "space":
                    # offsets are reported in bytes
                    offset = len(text[:pos].encode("utf-8"))
                    tokens.append((kind, match.group(0), offset))
                pos = match.end()
                break
        else:
            offset = len(text[:pos].encode("utf-8"))
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", offset, text)
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int, params: Mapping[str, Optional[float]]):
        self.text = text
        self.dim = dim
        self.params = params
        self.tokens = _tokenize(text)
        self.pos = 0
        self.coords: set = set()

    # token helpers

    def _peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _offset(self) -> int:
        tok = self._peek()
        return tok[2] if tok else len(self.text.encode("utf-8"))

    def _is_op(self, symbol: str) -> bool:
        tok = self._peek()
        return tok is not None and tok[0] == "op" and tok[1] == symbol

    def _expect_op(self, symbol: str) -> None:
        if not self._is_op(symbol):
            raise ExprSyntaxError(f"expected {symbol!r}", self._offset(), self.text)
        self.pos += 1

    # grammar

    def parse(self) -> Node:
        if not self.tokens:
            raise ExprSyntaxError("empty expression", 0, self.text)
        node = self.expr()
        if self._peek() is not None:
            raise ExprSyntaxError("unexpected trailing input", self._offset(), self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self._is_op("+") or self._is_op("-"):
            op = self.tokens[self.pos][1]
            self.pos += 1
            node = _fold(BinOp(op, node, self.term()))
        return node

    def term(self) -> Node:
        node = self.factor()
        while self._is_op("*") or self._is_op("/"):
            op = self.tokens[self.pos][1]
            self.pos += 1
            node = _fold(BinOp(op, node, self.factor()))
        return node

    def factor(self) -> Node:
        node = self.base()
        if self._is_op("^"):
            self.pos += 1
            node = _fold(Pow(node, self.rational()))
        return node

    def rational(self) -> Fraction:
        parenthesised = self._is_op("(")
        if parenthesised:
            self.pos += 1
        sign = 1
        if self._is_op("-"):
            sign = -1
            self.pos += 1
        numerator = self._integer()
        denominator = 1
        if parenthesised and self._is_op("/"):
            self.pos += 1
            denominator = self._integer()
            if denominator == 0:
                raise ExprSyntaxError("zero denominator in exponent", self._offset(), self.text)
        if parenthesised:
            self._expect_op(")")
        return Fraction(sign * numerator, denominator)

    def _integer(self) -> int:
        tok = self._peek()
        if tok is None or tok[0] != "number" or not tok[1].isdigit():
            raise ExprSyntaxError("expected an integer exponent", self._offset(), self.text)
        self.pos += 1
        return int(tok[1])

    def base(self) -> Node:
        tok = self._peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of input", self._offset(), self.text)
        kind, value, offset = tok
        if kind == "number":
            if not math.isfinite(float(value)):
                raise ExprSyntaxError(f"number {value} out of range", offset, self.text)
            self.pos += 1
            return Const(float(value))
        if kind == "op" and value == "(":
            self.pos += 1
            node = self.expr()
            self._expect_op(")")
            return node
        if kind == "op" and value == "-":
            self.pos += 1
            return _fold(Neg(self.base()))
        if kind == "ident":
            self.pos += 1
            return self._identifier(value, offset)
        raise ExprSyntaxError(f"unexpected {value!r}", offset, self.text)

    def _identifier(self, name: str, offset: int) -> Node:
        if name in FUNCTIONS:
            self._expect_op("(")
            arg = self.expr()
            self._expect_op(")")
            return _fold(Func(name, arg))
        if self._is_op("("):
            # calls are only allowed for the built-in functions
            raise UnknownIdentifierError(name, offset)
        coord = _COORD_REGEX.match(name)
        if coord:
            index = int(coord.group(1))
            if not 1 <= index <= self.dim:
                raise CoordinateRangeError(index, self.dim)
            self.coords.add(index)
            return Coord(index)
        if name in self.params:
            bound = self.params[name]
            return Param(name) if bound is None else Const(float(bound))
        raise UnknownIdentifierError(name, offset)


def parse_expr(
    text: str, n: int, params: Optional[Mapping[str, Optional[float]]] = None
) -> ScalarExpr:
    """
    Parse an expression over the coordinates ``x1 .. xn``.

    :param text: The expression source.
    :param n: The chart dimension.
    :param params: Declared parameter names. A name bound to a number is
        substituted and folded; a name bound to ``None`` stays symbolic and
        must be supplied to :func:`eval_jet2`.
    :return: The parsed expression.
    """
    parser = _Parser(text, n, params or {})
    node = parser.parse()
    log.debug("Parsed %r as %s", text, to_text(node))
    return ScalarExpr(node, frozenset(parser.coords))


_CONST_FUNCS = {
    "exp": math.exp,
    "log": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
}


def _const_or(node: Node, value: float) -> Node:
    """A folded constant, or ``node`` itself when the value overflowed."""
    return Const(value) if math.isfinite(value) else node


def _fold(node: Node) -> Node:
    """Collapse a node whose operands are all constants."""
    try:
        if isinstance(node, Neg) and isinstance(node.arg, Const):
            return _const_or(node, -node.arg.value)
        if isinstance(node, BinOp) and isinstance(node.left, Const) and isinstance(node.right, Const):
            a, b = node.left.value, node.right.value
            if node.op == "+":
                return _const_or(node, a + b)
            if node.op == "-":
                return _const_or(node, a - b)
            if node.op == "*":
                return _const_or(node, a * b)
            if b != 0.0:
                return _const_or(node, a / b)
        if isinstance(node, Pow) and isinstance(node.base, Const):
            base = node.base.value
            if base > 0 or (node.exponent.denominator == 1 and (base != 0 or node.exponent > 0)):
                return _const_or(node, base ** float(node.exponent))
        if isinstance(node, Func) and isinstance(node.arg, Const):
            return _const_or(node, _CONST_FUNCS[node.name](node.arg.value))
    except (ValueError, OverflowError):
        # left for eval_jet2 to report with the point attached
        pass
    return node


# ----------------------------------------------------------------------------
# Second-order jets
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    """A value with its gradient and (symmetric) Hessian at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @staticmethod
    def constant(value: float, n: int) -> "Jet2":
        return Jet2(float(value), np.zeros(n), np.zeros((n, n)))

    @staticmethod
    def variable(value: float, index: int, n: int) -> "Jet2":
        grad = np.zeros(n)
        grad[index] = 1.0
        return Jet2(float(value), grad, np.zeros((n, n)))

    def _lift(self, other: Union["Jet2", float]) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.grad.shape[0])

    def __add__(self, other: Union["Jet2", float]) -> "Jet2":
        other = self._lift(other)
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other: Union["Jet2", float]) -> "Jet2":
        return self + (-self._lift(other))

    def __rsub__(self, other: float) -> "Jet2":
        return self._lift(other) - self

    def __mul__(self, other: Union["Jet2", float]) -> "Jet2":
        other = self._lift(other)
        a, b = self, other
        # grouped so that a*b and b*a agree bit for bit
        grad = a.value * b.grad + b.value * a.grad
        cross = np.outer(a.grad, b.grad) + np.outer(b.grad, a.grad)
        hess = (a.value * b.hess + b.value * a.hess) + cross
        return Jet2(a.value * b.value, grad, hess)

    __rmul__ = __mul__

    def chain(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Compose with a scalar function whose derivatives at ``value`` are f0, f1, f2."""
        return Jet2(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def reciprocal(self) -> "Jet2":
        u = self.value
        return self.chain(1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def __truediv__(self, other: Union["Jet2", float]) -> "Jet2":
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other: float) -> "Jet2":
        return self._lift(other) * self.reciprocal()

    def power(self, exponent: Fraction) -> "Jet2":
        u, r = self.value, float(exponent)
        if exponent == 0:
            return Jet2.constant(1.0, self.grad.shape[0])
        if exponent == 1:
            return self
        if exponent.denominator == 1 and exponent > 0:
            # integer powers stay exact at u = 0
            k = exponent.numerator
            f1 = k * u ** (k - 1)
            f2 = k * (k - 1) * u ** (k - 2) if k >= 2 else 0.0
            return self.chain(u**k, f1, f2)
        return self.chain(u**r, r * u ** (r - 1), r * (r - 1) * u ** (r - 2))


Jet2Like = Union[Jet2, float]


def eval_jet2(
    expr: ScalarExpr, point: Sequence[float], params: Optional[Mapping[str, float]] = None
) -> Jet2:
    """
    Evaluate an expression with its first and second partial derivatives.

    :param expr: The parsed expression.
    :param point: Chart coordinates; its length fixes the jet dimension.
    :param params: Values of parameters left symbolic at parse time.
    :return: The jet at ``point``.
    """
    pt = np.asarray(point, dtype=float)
    return _Evaluator(pt, params or {}).visit(expr.ast)


class _Evaluator:
    def __init__(self, point: np.ndarray, params: Mapping[str, float]):
        self.point = point
        self.params = params
        self.n = point.shape[0]

    def _fail(self, node: Node, reason: str) -> DomainViolationError:
        return DomainViolationError(to_text(node), self.point.tolist(), reason)

    def visit(self, node: Node) -> Jet2:
        result = self._visit(node)
        finite = np.isfinite(result.value) and np.all(np.isfinite(result.grad))
        if not (finite and np.all(np.isfinite(result.hess))):
            raise self._fail(node, "non-finite value")
        return result

    def _visit(self, node: Node) -> Jet2:
        if isinstance(node, Const):
            return Jet2.constant(node.value, self.n)
        if isinstance(node, Coord):
            if node.index > self.n:
                raise CoordinateRangeError(node.index, self.n)
            return Jet2.variable(self.point[node.index - 1], node.index - 1, self.n)
        if isinstance(node, Param):
            if node.name not in self.params:
                raise UnknownIdentifierError(node.name, -1)
            return Jet2.constant(self.params[node.name], self.n)
        if isinstance(node, Neg):
            return -self.visit(node.arg)
        if isinstance(node, BinOp):
            left, right = self.visit(node.left), self.visit(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if right.value == 0.0:
                raise self._fail(node, "division by zero")
            return left / right
        if isinstance(node, Pow):
            base = self.visit(node.base)
            exp = node.exponent
            if exp.denominator != 1 and base.value <= 0.0:
                raise self._fail(node, "non-integer power of a non-positive value")
            if exp < 0 and base.value == 0.0:
                raise self._fail(node, "negative power of zero")
            try:
                return base.power(exp)
            except OverflowError:
                raise self._fail(node, "power overflow") from None
        if isinstance(node, Func):
            return self._func(node, self.visit(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    def _func(self, node: Func, u: Jet2) -> Jet2:
        x = u.value
        if node.name == "exp":
            if x > 709.0:
                raise self._fail(node, "exponential overflow")
            e = math.exp(x)
            return u.chain(e, e, e)
        if node.name == "log":
            if x <= 0.0:
                raise self._fail(node, "log of a non-positive value")
            return u.chain(math.log(x), 1.0 / x, -1.0 / x**2)
        if node.name == "sin":
            s, c = math.sin(x), math.cos(x)
            return u.chain(s, c, -s)
        if node.name == "cos":
            s, c = math.sin(x), math.cos(x)
            return u.chain(c, -s, -c)
        if x <= 0.0:
            raise self._fail(node, "sqrt of a non-positive value")
        r = math.sqrt(x)
        return u.chain(r, 0.5 / r, -0.25 / (r * x))


def eval_jet2_array(
    exprs: Iterable, point: Sequence[float], params: Optional[Mapping[str, float]] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluate a (nested) array of expressions.

    :return: ``(value, grad, hess)`` with shapes ``S``, ``S + (n,)`` and ``S + (n, n)``
        where ``S`` is the array shape and ``n`` the point dimension.
    """
    arr = np.asarray(exprs, dtype=object)
    n = len(point)
    value = np.zeros(arr.shape)
    grad = np.zeros(arr.shape + (n,))
    hess = np.zeros(arr.shape + (n, n))
    cache: Dict[ScalarExpr, Jet2] = {}
    for idx in np.ndindex(arr.shape):
        expr = arr[idx]
        jet = cache.get(expr)
        if jet is None:
            jet = eval_jet2(expr, point, params)
            cache[expr] = jet
        value[idx] = jet.value
        grad[idx] = jet.grad
        hess[idx] = jet.hess
    return value, grad, hess
