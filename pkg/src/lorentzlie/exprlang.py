"""Real-valued expressions in chart coordinates.

Expressions are small immutable trees.  They are parsed from text with a
Pratt parser, evaluated with IEEE double arithmetic and differentiated
exactly by structural recursion, so every derivative used by the geometry
code is symbolic rather than a finite difference.

    >>> scope = Scope(("t", "r"), constants={"M": 1.0})
    >>> e = parse_expr("1 - 2*M/r", scope)
    >>> evaluate(e, [0.0, 4.0])
    0.5
    >>> to_string(simplify(differentiate(e, 1)))
    '(2.0 / (x1 ^ 2.0))'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "LexError", "ParseError", "UnknownIdentifier", "DomainError",
    "Token", "Expr", "Const", "Coord", "Neg", "Add", "Sub", "Mul", "Div",
    "Pow", "Call", "FUNCTIONS", "Scope", "tokenize", "parse", "parse_expr",
    "evaluate", "differentiate", "simplify", "to_string", "CompiledField",
]


class LexError(ValueError):
    def __init__(self, position: int, char: str = ""):
        self.position = position
        super().__init__(f"unexpected character {char!r} at offset {position}")


class ParseError(ValueError):
    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"expected {expected} at offset {position}")


class UnknownIdentifier(ParseError):
    def __init__(self, position: int, name: str):
        self.name = name
        ValueError.__init__(self, f"unknown identifier {name!r} at offset {position}")
        self.position = position
        self.expected = "bound identifier"


class DomainError(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# Tokens

@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | comma | end
    lexeme: str
    position: int


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<identifier>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<operator>[-+*/^])"
    r"|(?P<paren>[()])"
    r"|(?P<comma>,)"
)


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens; whitespace is dropped."""
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(pos, source[pos])
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


# --------------------------------------------------------------------------
# Expression nodes

class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Sub(self, _lift(other))

    def __rsub__(self, other):
        return Sub(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __truediv__(self, other):
        return Div(self, _lift(other))

    def __rtruediv__(self, other):
        return Div(_lift(other), self)

    def __pow__(self, other):
        return Pow(self, _lift(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return to_string(self)


def _lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Coord(Expr):
    index: int


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    fn: str
    arg: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def _checked_log(x):
    if x <= 0.0:
        raise DomainError(f"log of non-positive argument {x!r}")
    return math.log(x)


def _checked_sqrt(x):
    if x < 0.0:
        raise DomainError(f"sqrt of negative argument {x!r}")
    return math.sqrt(x)


def _checked_exp(x):
    try:
        return math.exp(x)
    except OverflowError as exc:
        raise DomainError(f"exp overflow at {x!r}") from exc


def _checked_tan(x):
    if math.cos(x) == 0.0:
        raise DomainError(f"tan pole at {x!r}")
    return math.tan(x)


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": _checked_tan,
    "exp": _checked_exp,
    "log": _checked_log,
    "sqrt": _checked_sqrt,
    "abs": abs,
}


# --------------------------------------------------------------------------
# Parsing

@dataclass(frozen=True)
class Scope:
    """Name bindings for parsing.

    ``x0 .. x{m-1}`` are always bound to the coordinates; ``aliases`` adds
    per-chart names (``t``, ``r``, ...).  Constants are substituted as
    numbers at parse time, and ``pi`` is always available.
    """

    aliases: Sequence[str] = ()
    constants: Mapping[str, float] = field(default_factory=dict)
    dim: int | None = None

    @property
    def m(self) -> int:
        return self.dim if self.dim is not None else len(self.aliases)

    def lookup(self, name: str):
        if name in self.constants:
            return Const(float(self.constants[name]))
        if name in self.aliases:
            return Coord(list(self.aliases).index(name))
        m = re.fullmatch(r"x(\d+)", name)
        if m and (self.m == 0 or int(m.group(1)) < self.m):
            return Coord(int(m.group(1)))
        if name == "pi":
            return Const(math.pi)
        return None


# binding powers; unary minus sits between ^ and * / (so -x^2 == -(x^2))
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, tokens: Sequence[Token], scope: Scope, source_len: int):
        self.tokens = list(tokens)
        end = self.tokens[-1].position + len(self.tokens[-1].lexeme) if self.tokens else source_len
        self.tokens.append(Token("end", "", max(end, source_len)))
        self.i = 0
        self.scope = scope

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, lexeme: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind or tok.lexeme != lexeme:
            raise ParseError(tok.position, what)
        return self.advance()

    def expression(self, rbp: int = 0) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind == "operator":
                lbp = _INFIX[tok.lexeme]
            elif tok.kind == "identifier" and self._juxtaposed():
                # "8M" style number-identifier product
                lbp = 20
            else:
                break
            if lbp <= rbp:
                break
            if tok.kind == "identifier":
                left = Mul(left, self.expression(20))
                continue
            self.advance()
            if tok.lexeme == "^":
                # right associative; exponent may carry its own unary minus
                right = self.expression(lbp - 1)
                left = Pow(left, right)
            else:
                right = self.expression(lbp)
                left = {"+": Add, "-": Sub, "*": Mul, "/": Div}[tok.lexeme](left, right)
        return left

    def _juxtaposed(self) -> bool:
        prev = self.tokens[self.i - 1]
        tok = self.peek()
        return prev.kind == "number" and prev.position + len(prev.lexeme) == tok.position

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Const(float(tok.lexeme))
        if tok.kind == "operator" and tok.lexeme == "-":
            return Neg(self.expression(_UNARY_BP))
        if tok.kind == "operator" and tok.lexeme == "+":
            return self.expression(_UNARY_BP)
        if tok.kind == "paren" and tok.lexeme == "(":
            inner = self.expression(0)
            self.expect("paren", ")", "')'")
            return inner
        if tok.kind == "identifier":
            if tok.lexeme in FUNCTIONS and self.peek().lexeme == "(":
                self.advance()
                if self.peek().lexeme == ")":
                    raise ParseError(self.peek().position, "expression")
                arg = self.expression(0)
                self.expect("paren", ")", "')'")
                return Call(tok.lexeme, arg)
            bound = self.scope.lookup(tok.lexeme)
            if bound is None:
                raise UnknownIdentifier(tok.position, tok.lexeme)
            return bound
        raise ParseError(tok.position, "expression")


def parse(tokens: Sequence[Token], scope: Scope | None = None, source_len: int = 0) -> Expr:
    """Parse a token stream into a closed expression."""
    parser = _Parser(tokens, scope or Scope(), source_len)
    result = parser.expression(0)
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(tail.position, "end of input")
    return result


def parse_expr(source: str, scope: Scope | None = None) -> Expr:
    return parse(tokenize(source), scope, len(source))


# --------------------------------------------------------------------------
# Evaluation

def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise DomainError("division by zero in pow")
    if a < 0.0 and not float(b).is_integer():
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    try:
        return math.pow(a, b)
    except OverflowError as exc:
        raise DomainError("pow overflow") from exc


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _compile(e: Expr) -> Callable[[Sequence[float]], float]:
    """Turn a tree into nested closures; same semantics as a recursive walk."""
    if isinstance(e, Const):
        v = e.value
        return lambda p: v
    if isinstance(e, Coord):
        i = e.index
        return lambda p: p[i]
    if isinstance(e, Neg):
        f = _compile(e.arg)
        return lambda p: -f(p)
    if isinstance(e, Call):
        f = _compile(e.arg)
        fn = FUNCTIONS[e.fn]
        return lambda p: fn(f(p))
    if isinstance(e, Pow):
        fa, fb = _compile(e.base), _compile(e.exponent)
        if isinstance(e.exponent, Const) and e.exponent.value == 2.0:
            def square(p):
                v = fa(p)
                return v * v
            return square
        return lambda p: _pow(fa(p), fb(p))
    fl, fr = _compile(e.left), _compile(e.right)
    if isinstance(e, Add):
        return lambda p: fl(p) + fr(p)
    if isinstance(e, Sub):
        return lambda p: fl(p) - fr(p)
    if isinstance(e, Mul):
        return lambda p: fl(p) * fr(p)
    if isinstance(e, Div):
        return lambda p: _div(fl(p), fr(p))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Evaluate ``e`` at chart point ``p``; raises DomainError off-domain."""
    return float(_compile(e)(p))


# --------------------------------------------------------------------------
# Differentiation and simplification

def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative with respect to coordinate ``i`` (unsimplified)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Coord):
        return ONE if e.index == i else ZERO
    if isinstance(e, Neg):
        return Neg(differentiate(e.arg, i))
    if isinstance(e, Add):
        return Add(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Sub):
        return Sub(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Mul):
        return Add(Mul(differentiate(e.left, i), e.right), Mul(e.left, differentiate(e.right, i)))
    if isinstance(e, Div):
        num = Sub(Mul(differentiate(e.left, i), e.right), Mul(e.left, differentiate(e.right, i)))
        return Div(num, Pow(e.right, Const(2.0)))
    if isinstance(e, Pow):
        a, b = e.base, e.exponent
        da = differentiate(a, i)
        if isinstance(b, Const):
            return Mul(Mul(b, Pow(a, Const(b.value - 1.0))), da)
        # a^b = exp(b log a), valid for a > 0
        db = differentiate(b, i)
        return Mul(e, Add(Mul(db, Call("log", a)), Div(Mul(b, da), a)))
    if isinstance(e, Call):
        u = e.arg
        du = differentiate(u, i)
        if e.fn == "sin":
            outer = Call("cos", u)
        elif e.fn == "cos":
            outer = Neg(Call("sin", u))
        elif e.fn == "tan":
            outer = Div(ONE, Pow(Call("cos", u), Const(2.0)))
        elif e.fn == "exp":
            outer = e
        elif e.fn == "log":
            outer = Div(ONE, u)
        elif e.fn == "sqrt":
            outer = Div(Const(0.5), e)
        elif e.fn == "abs":
            outer = Div(u, e)
        else:
            raise ValueError(f"unknown function {e.fn!r}")
        return Mul(outer, du)
    raise TypeError(f"not an expression node: {e!r}")


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


def _fold(e: Expr) -> Expr:
    try:
        return Const(evaluate(e, ()))
    except DomainError:
        return e


def _simplify_once(e: Expr) -> Expr:
    if isinstance(e, (Const, Coord)):
        return e
    if isinstance(e, Neg):
        a = _simplify_once(e.arg)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.arg
        if isinstance(a, (Mul, Div)) and isinstance(a.left, Const):
            return type(a)(Const(-a.left.value), a.right)
        return Neg(a)
    if isinstance(e, Call):
        a = _simplify_once(e.arg)
        out = Call(e.fn, a)
        return _fold(out) if isinstance(a, Const) else out
    if isinstance(e, Pow):
        b, x = _simplify_once(e.base), _simplify_once(e.exponent)
        if _is(x, 1.0):
            return b
        if _is(x, 0.0):
            return ONE
        out = Pow(b, x)
        return _fold(out) if isinstance(b, Const) and isinstance(x, Const) else out
    left, right = _simplify_once(e.left), _simplify_once(e.right)
    if isinstance(e, Add):
        if _is(left, 0.0):
            return right
        if _is(right, 0.0):
            return left
        out = Add(left, right)
    elif isinstance(e, Sub):
        if _is(right, 0.0):
            return left
        if _is(left, 0.0):
            return Neg(right)
        out = Sub(left, right)
    elif isinstance(e, Mul):
        if _is(left, 0.0) or _is(right, 0.0):
            return ZERO
        if _is(left, 1.0):
            return right
        if _is(right, 1.0):
            return left
        if _is(left, -1.0):
            return Neg(right)
        if _is(right, -1.0):
            return Neg(left)
        out = Mul(left, right)
    elif isinstance(e, Div):
        if _is(right, 1.0):
            return left
        if _is(left, 0.0) and not _is(right, 0.0):
            return ZERO
        out = Div(left, right)
    else:
        raise TypeError(f"not an expression node: {e!r}")
    return _fold(out) if isinstance(left, Const) and isinstance(right, Const) else out


def simplify(e: Expr) -> Expr:
    """Constant folding plus the neutral/absorbing-element rules, to fixpoint."""
    while True:
        s = _simplify_once(e)
        if s == e:
            return s
        e = s


# --------------------------------------------------------------------------
# Printing

_OPS = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}


def to_string(e: Expr) -> str:
    """Fully parenthesized infix; coordinates print as ``x<i>``."""
    if isinstance(e, Const):
        return repr(e.value) if e.value >= 0 else f"(-{repr(-e.value)})"
    if isinstance(e, Coord):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Pow):
        return f"({to_string(e.base)} ^ {to_string(e.exponent)})"
    return f"({to_string(e.left)} {_OPS[type(e)]} {to_string(e.right)})"


# --------------------------------------------------------------------------
# Compiled fields

class CompiledField:
    """An expression together with lazily built partial derivatives.

    Derivatives are keyed by sorted multi-indices, so mixed partials are
    built once and the Hessian is symmetric by construction.
    """

    def __init__(self, expr: Expr, dim: int):
        self.expr = simplify(expr)
        self.dim = dim
        self._derivs: dict[tuple[int, ...], Expr] = {(): self.expr}
        self._funcs: dict[tuple[int, ...], Callable] = {}

    def derivative(self, multi: Sequence[int]) -> Expr:
        key = tuple(sorted(multi))
        if key not in self._derivs:
            parent = self.derivative(key[:-1])
            self._derivs[key] = simplify(differentiate(parent, key[-1]))
        return self._derivs[key]

    @property
    def gradient(self) -> list[Expr]:
        return [self.derivative((i,)) for i in range(self.dim)]

    @property
    def hessian(self) -> list[list[Expr]]:
        return [[self.derivative((i, j)) for j in range(self.dim)] for i in range(self.dim)]

    def _func(self, key):
        f = self._funcs.get(key)
        if f is None:
            f = self._funcs[key] = _compile(self.derivative(key))
        return f

    def __call__(self, p: Sequence[float]) -> float:
        return float(self._func(())(p))

    def taylor(self, p: Sequence[float], order: int) -> list[np.ndarray]:
        """Derivative tensors of orders ``0..order`` at ``p`` (symmetric arrays)."""
        m = self.dim
        p = [float(x) for x in p]
        out = [np.array(self._func(())(p), dtype=float)]
        for k in range(1, order + 1):
            arr = np.empty((m,) * k)
            cache: dict[tuple[int, ...], float] = {}
            for idx in np.ndindex(*arr.shape):
                key = tuple(sorted(idx))
                if key not in cache:
                    deriv = self.derivative(key)
                    cache[key] = deriv.value if isinstance(deriv, Const) else self._func(key)(p)
                arr[idx] = cache[key]
            out.append(arr)
        return out

    def __repr__(self):
        return f"CompiledField({to_string(self.expr)!r}, dim={self.dim})"
