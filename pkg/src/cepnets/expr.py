"""Expression language for gauge nets g(lambda) and function nets u(lambda, x1..xd).

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' exponent)?
    exponent:= INT | '-' INT | '(' '-'? NUMBER ('/' INT)? ')'
    primary := NUMBER | 'lambda' | 'x' INT | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin | cos | exp | log | abs

Two literal constants joined by ``/`` are read as one rational constant, and
unary minus on a constant negates the constant itself; otherwise ``-t`` is
``(-1) * t``.  With that convention the printed form of any parsed tree parses
back to the same tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "abs")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvalDomainError(ArithmeticError):
    """Raised when an expression is evaluated outside its domain.

    ``node`` is the offending subtree and ``index`` the first offending point
    of the evaluation batch (0 for scalar evaluation).
    """

    def __init__(self, message: str, node: "Expr", index: int = 0):
        super().__init__(f"{message} in {to_text(node)}")
        self.node = node
        self.index = index


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Lam(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr

    def __post_init__(self):
        if isinstance(self.right, Const) and self.right.value == 0:
            raise ExprError("quotient with literal zero denominator")


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction

    def __post_init__(self):
        if not isinstance(self.exponent, Fraction):
            object.__setattr__(self, "exponent", Fraction(self.exponent))


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))
LAMBDA = Lam()


@dataclass(frozen=True)
class NetExpr:
    """A net of smooth functions on R^d, written in lambda and x1..xd."""

    expr: Expr
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ExprError("net dimension must be positive")
        bad = [i for i in variables(self.expr) if i > self.dimension]
        if bad:
            raise ExprError(f"x{max(bad)} used in a net of dimension {self.dimension}")

    @classmethod
    def parse(cls, text: str, dimension: int) -> "NetExpr":
        return cls(parse_expr(text, dimension), dimension)

    def __str__(self) -> str:
        return to_text(self.expr)


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Func):
        return (e.arg,)
    return ()


def walk(e: Expr) -> Iterable[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def variables(e: Expr) -> set[int]:
    return {n.index for n in walk(e) if isinstance(n, Var)}


def depends_on_lambda(e: Expr) -> bool:
    return any(isinstance(n, Lam) for n in walk(e))


# ---------------------------------------------------------------- printing

def _fraction_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _exponent_text(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    return f"({_fraction_text(q)})"


def to_text(e: Expr) -> str:
    if isinstance(e, Const):
        if e.value.denominator == 1 and e.value >= 0:
            return str(e.value.numerator)
        return f"({_fraction_text(e.value)})"
    if isinstance(e, Lam):
        return "lambda"
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if not isinstance(e.base, (Lam, Var, Func, Const)):
            base = f"({base})"
        return f"{base}^{_exponent_text(e.exponent)}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    return f"({to_text(e.left)} {op} {to_text(e.right)})"


# ----------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.dimension = dimension
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        raise ExprSyntaxError(message, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def number(self) -> Fraction:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "."):
            self.pos += 1
        literal = self.text[start:self.pos]
        if not literal:
            self.error("expected a number")
        try:
            return Fraction(literal)
        except ValueError:
            self.error(f"malformed number {literal!r}", start)

    def integer(self) -> int:
        start = self.pos
        value = self.number()
        if value.denominator != 1:
            self.error("expected an integer", start)
        return value.numerator

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.peek()
            self.pos += 1
            at = self.pos
            rhs = self.unary()
            if op == "*":
                node = Mul(node, rhs)
            elif isinstance(rhs, Const) and rhs.value == 0:
                self.error("division by literal zero", at)
            elif isinstance(node, Const) and isinstance(rhs, Const):
                node = Const(node.value / rhs.value)
            else:
                node = Div(node, rhs)
        return node

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Mul(MINUS_ONE, operand)
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek() == "^":
            self.pos += 1
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        ch = self.peek()
        if ch == "-":
            self.pos += 1
            return Fraction(-self.integer())
        if ch == "(":
            self.pos += 1
            sign = 1
            if self.peek() == "-":
                self.pos += 1
                sign = -1
            value = self.number()
            if self.peek() == "/":
                self.pos += 1
                at = self.pos
                den = self.integer()
                if den == 0:
                    self.error("zero denominator in exponent", at)
                value = value / den
            self.expect(")")
            return sign * value
        if ch.isdigit():
            return Fraction(self.integer())
        self.error("expected a rational exponent")

    def primary(self) -> Expr:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch.isdigit() or ch == ".":
            return Const(self.number())
        if ch == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "lambda":
                return LAMBDA
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(name, arg)
            if name[0] == "x" and name[1:].isdigit() and name[1] != "0":
                index = int(name[1:])
                if index > self.dimension:
                    raise UnknownIdentifierError(
                        f"variable {name} exceeds dimension {self.dimension}", start)
                return Var(index)
            raise UnknownIdentifierError(f"unknown identifier {name!r}", start)
        self.error(f"unexpected {ch!r}")


def parse_expr(text: str, dimension: int = 0) -> Expr:
    """Parse ``text`` into an expression tree.

    ``dimension`` bounds the admissible ``x_i``; 0 means a gauge expression
    in ``lambda`` only.
    """
    if dimension < 0:
        raise ValueError("dimension must be >= 0")
    return _Parser(text, dimension).parse()


# ---------------------------------------------------------- differentiation

def _is_const(e: Expr, value) -> bool:
    return isinstance(e, Const) and e.value == value


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(a, 0):
        return mul(MINUS_ONE, b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    return Div(a, b)


def power(base: Expr, q: Fraction) -> Expr:
    if q == 0:
        return ONE
    if q == 1:
        return base
    return Pow(base, Fraction(q))


def differentiate(e: Expr, axis: int) -> Expr:
    """Exact partial derivative with respect to ``x_axis``, constants folded."""
    if axis < 1:
        raise ValueError("axis is 1-based")
    return _diff(e, axis, {})


def _diff(e: Expr, i: int, memo: dict) -> Expr:
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    result = _diff_node(e, i, memo)
    memo[key] = (e, result)  # keep e alive so its id stays unique
    return result


def _diff_node(e: Expr, i: int, memo: dict) -> Expr:
    if isinstance(e, (Const, Lam)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return add(_diff(e.left, i, memo), _diff(e.right, i, memo))
    if isinstance(e, Sub):
        return sub(_diff(e.left, i, memo), _diff(e.right, i, memo))
    if isinstance(e, Mul):
        da, db = _diff(e.left, i, memo), _diff(e.right, i, memo)
        return add(mul(da, e.right), mul(e.left, db))
    if isinstance(e, Div):
        da, db = _diff(e.left, i, memo), _diff(e.right, i, memo)
        if _is_const(db, 0):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, Fraction(2)))
    if isinstance(e, Pow):
        db = _diff(e.base, i, memo)
        if _is_const(db, 0):
            return ZERO
        q = e.exponent
        return mul(mul(Const(q), power(e.base, q - 1)), db)
    if isinstance(e, Func):
        da = _diff(e.arg, i, memo)
        if _is_const(da, 0):
            return ZERO
        a = e.arg
        if e.name == "sin":
            return mul(da, Func("cos", a))
        if e.name == "cos":
            return mul(da, mul(MINUS_ONE, Func("sin", a)))
        if e.name == "exp":
            return mul(da, e)
        if e.name == "log":
            return div(da, a)
        return mul(da, div(a, e))  # abs: sign(a), undefined at a = 0
    raise TypeError(f"not an expression node: {e!r}")


def partial(e: Expr, alpha: Sequence[int]) -> Expr:
    """Apply the multi-index derivative d^alpha, alpha[k] counting x_{k+1}."""
    for axis, count in enumerate(alpha, start=1):
        for _ in range(count):
            e = differentiate(e, axis)
    return e


# -------------------------------------------------------------- evaluation

def evaluate_many(exprs: Sequence[Expr], lam: float, points: np.ndarray) -> list[np.ndarray]:
    """Evaluate several trees at one lambda over a batch of points.

    ``points`` has shape (n, d).  Shared subtrees are computed once.  Results
    are float64 arrays of shape (n,) (x-free trees are broadcast).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    cache: dict[int, tuple[Expr, np.ndarray]] = {}
    lam = np.float64(lam)
    n = points.shape[0]
    out = []
    with np.errstate(all="ignore"):
        for e in exprs:
            value = _eval(e, lam, points, cache)
            out.append(np.broadcast_to(value, (n,)).astype(np.float64, copy=True))
    return out


def evaluate_points(e: Expr, lam: float, points: np.ndarray) -> np.ndarray:
    return evaluate_many([e], lam, points)[0]


def evaluate(e: Expr, lam: float, x: Sequence[float] = ()) -> float:
    """Value of ``e`` at (lambda, x) in double precision."""
    point = np.asarray([list(x)], dtype=np.float64).reshape(1, -1)
    return float(evaluate_points(e, lam, point)[0])


def _first_bad(mask) -> int:
    mask = np.atleast_1d(mask)
    return int(np.argmax(mask))


def _eval(e: Expr, lam, points, cache):
    key = id(e)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    value = _eval_node(e, lam, points, cache)
    bad = np.isnan(value)
    if np.any(bad):
        raise EvalDomainError("undefined (NaN) value", e, _first_bad(bad))
    cache[key] = (e, value)
    return value


def _eval_node(e: Expr, lam, points, cache):
    if isinstance(e, Const):
        return np.float64(float(e.value))
    if isinstance(e, Lam):
        return lam
    if isinstance(e, Var):
        if e.index > points.shape[1]:
            raise EvalDomainError(f"no coordinate for x{e.index}", e)
        return points[:, e.index - 1]
    if isinstance(e, Func):
        a = _eval(e.arg, lam, points, cache)
        if e.name == "log":
            bad = a <= 0
            if np.any(bad):
                raise EvalDomainError("log of non-positive value", e, _first_bad(bad))
            return np.log(a)
        return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[e.name](a)
    if isinstance(e, Pow):
        a = _eval(e.base, lam, points, cache)
        q = e.exponent
        if q.denominator != 1:
            bad = a < 0
            if np.any(bad):
                raise EvalDomainError("fractional power of negative value", e, _first_bad(bad))
        if q < 0:
            bad = a == 0
            if np.any(bad):
                raise EvalDomainError("division by zero", e, _first_bad(bad))
        if q.denominator == 1:
            return np.power(a, np.float64(q.numerator))
        return np.power(a, np.float64(q.numerator) / np.float64(q.denominator))
    a = _eval(e.left, lam, points, cache)
    b = _eval(e.right, lam, points, cache)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    bad = b == 0
    if np.any(bad):
        raise EvalDomainError("division by zero", e, _first_bad(bad))
    return a / b
