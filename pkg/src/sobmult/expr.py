"""Symbol expressions: tokenizer, recursive-descent parser, exact derivatives.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary [ "^" exponent ] ;
    exponent = [ "-" | "+" ] INTEGER | "(" [ "-" | "+" ] INTEGER ")" ;
    primary = NUMBER | "x" | FUNC "(" expr ")" | "(" expr ")" ;
    FUNC    = "sin" | "cos" | "exp" | "sqrt" | "log" ;
    NUMBER  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;

``-x^2`` parses as ``-(x^2)``; binary operators are left-associative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import mpmath

from . import _xcore_py as ops

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r}", position)
        self.name = name


class DomainError(ArithmeticError):
    """Evaluation hit a singular point (division by zero, sqrt/log of a negative)."""


# -- tokens -----------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | end
    lexeme: str
    position: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(Token("number", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("identifier", text[i:j], i))
            i = j
        elif ch in "+-*/^":
            tokens.append(Token("operator", ch, i))
            i += 1
        elif ch in "()":
            tokens.append(Token("paren", ch, i))
            i += 1
        else:
            raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(Token("end", "", n))
    return tokens


# -- tree -------------------------------------------------------------------


class Expr:
    """Base node.  Subclasses are frozen dataclasses, so equality is structural."""

    __slots__ = ()

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    # float, or an mpmath.mpf for values outside binary64 range
    value: object


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def children(self):
        return (self.arg,)


X = Var()


def const(v) -> Const:
    return Const(v if isinstance(v, mpmath.mpf) else float(v))


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, lexeme: str) -> Token:
        if self.tok.lexeme != lexeme or self.tok.kind == "end":
            found = self.tok.lexeme or "end of input"
            raise ExprSyntaxError(f"expected {lexeme!r}, found {found!r}", self.tok.position)
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.lexeme!r}", self.tok.position)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "operator" and self.tok.lexeme in "+-":
            op = self.take().lexeme
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "operator" and self.tok.lexeme in "*/":
            op = self.take().lexeme
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "operator" and self.tok.lexeme == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "operator" and self.tok.lexeme == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        wrapped = self.tok.lexeme == "("
        if wrapped:
            self.take()
        sign = 1
        if self.tok.kind == "operator" and self.tok.lexeme in "+-":
            sign = -1 if self.take().lexeme == "-" else 1
        t = self.tok
        if t.kind != "number" or not t.lexeme.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", t.position)
        self.take()
        if wrapped:
            self.expect(")")
        return sign * int(t.lexeme)

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.take()
            return Const(float(t.lexeme))
        if t.kind == "identifier":
            self.take()
            if t.lexeme == "x":
                return X
            if t.lexeme in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(t.lexeme, arg)
            raise UnknownIdentifierError(t.lexeme, t.position)
        if t.kind == "paren" and t.lexeme == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        found = t.lexeme or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", t.position)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# -- printing ---------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_const(v) -> str:
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, 17)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    def go(e: Expr, prec: int) -> str:
        if isinstance(e, Const):
            s = _fmt_const(e.value)
            return f"({s})" if s.startswith("-") else s
        if isinstance(e, Var):
            return "x"
        if isinstance(e, Func):
            return f"{e.name}({go(e.arg, 0)})"
        p = _PREC[type(e)]
        if isinstance(e, Neg):
            s = "-" + go(e.arg, p)
        elif isinstance(e, Pow):
            s = f"{go(e.base, p + 1)}^{e.exponent}" if e.exponent >= 0 else f"{go(e.base, p + 1)}^({e.exponent})"
        else:
            sym = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
            s = f"{go(e.left, p)}{sym}{go(e.right, p + 1)}"
        return f"({s})" if p < prec else s

    return go(e, 0)


# -- differentiation --------------------------------------------------------


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return Sub(a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Neg(a)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return Const(0.0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is(a, 0):
        return Const(0.0)
    if _is(b, 1):
        return a
    return Div(a, b)


def _pow(a, n):
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    return Pow(a, n)


def differentiate(e: Expr) -> Expr:
    """d/dx of ``e`` by the product, quotient and chain rules (unsimplified)."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, Add):
        return _add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Mul):
        u, v = e.left, e.right
        return _add(_mul(differentiate(u), v), _mul(u, differentiate(v)))
    if isinstance(e, Div):
        u, v = e.left, e.right
        du, dv = differentiate(u), differentiate(v)
        if _is(dv, 0):
            return _div(du, v)
        return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, 2))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return Const(0.0)
        return _mul(_mul(Const(float(n)), _pow(e.base, n - 1)), differentiate(e.base))
    if isinstance(e, Func):
        u = e.arg
        du = differentiate(u)
        if e.name == "sin":
            outer = Func("cos", u)
        elif e.name == "cos":
            outer = _neg(Func("sin", u))
        elif e.name == "exp":
            outer = e
        elif e.name == "sqrt":
            return _div(du, _mul(Const(2.0), e))
        elif e.name == "log":
            return _div(du, u)
        else:
            raise ValueError(f"unknown function {e.name}")
        return _mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


# -- evaluation -------------------------------------------------------------


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at ``x`` in binary64.

    Raises DomainError at singular points; exp overflow yields ``inf``.
    """
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, Add):
        return evaluate(e.left, x) + evaluate(e.right, x)
    if isinstance(e, Sub):
        return evaluate(e.left, x) - evaluate(e.right, x)
    if isinstance(e, Mul):
        return evaluate(e.left, x) * evaluate(e.right, x)
    if isinstance(e, Div):
        den = evaluate(e.right, x)
        if den == 0.0:
            raise DomainError(f"division by zero at x={x!r}")
        return evaluate(e.left, x) / den
    if isinstance(e, Pow):
        b = evaluate(e.base, x)
        if e.exponent < 0 and b == 0.0:
            raise DomainError(f"negative power of zero at x={x!r}")
        try:
            return b ** e.exponent
        except OverflowError:
            return math.copysign(math.inf, b) if e.exponent % 2 else math.inf
    u = evaluate(e.arg, x)
    if e.name == "sin":
        return math.sin(u)
    if e.name == "cos":
        return math.cos(u)
    if e.name == "exp":
        try:
            return math.exp(u)
        except OverflowError:
            return math.inf
    if e.name == "sqrt":
        if u < 0:
            raise DomainError(f"sqrt of negative argument at x={x!r}")
        return math.sqrt(u)
    if e.name == "log":
        if u <= 0:
            raise DomainError(f"log of non-positive argument at x={x!r}")
        return math.log(u)
    raise ValueError(f"unknown function {e.name}")


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in e.children():
        yield from walk(c)


# -- compilation to stack programs -------------------------------------------

_BIN = {Add: ops.OP_ADD, Sub: ops.OP_SUB, Mul: ops.OP_MUL, Div: ops.OP_DIV}
_UN = {"sin": ops.OP_SIN, "cos": ops.OP_COS, "exp": ops.OP_EXP, "sqrt": ops.OP_SQRT, "log": ops.OP_LOG}


def wide_parts(v) -> tuple[float, int]:
    """Split a float or mpf into a normalized ``(mantissa, exponent)`` pair."""
    if isinstance(v, mpmath.mpf):
        if not mpmath.isfinite(v):
            return (float(v), 0)
        if v == 0:
            return (0.0, 0)
        m, e = mpmath.frexp(v)
        return (float(m), int(e))
    return ops.from_double(float(v))


def compile_expr(e: Expr) -> tuple[tuple[int, ...], tuple[int, ...], tuple[float, ...], tuple[int, ...]]:
    """Flatten ``e`` into a postfix program ``(ops, args, const_mantissas, const_exponents)``."""
    code: list[int] = []
    args: list[int] = []
    cm: list[float] = []
    ce: list[int] = []
    index: dict = {}

    def emit(e: Expr):
        if isinstance(e, Const):
            m, x = wide_parts(e.value)
            key = (m, x)
            if key not in index:
                index[key] = len(cm)
                cm.append(m)
                ce.append(x)
            code.append(ops.OP_CONST)
            args.append(index[key])
        elif isinstance(e, Var):
            code.append(ops.OP_X)
            args.append(0)
        elif isinstance(e, Neg):
            emit(e.arg)
            code.append(ops.OP_NEG)
            args.append(0)
        elif isinstance(e, Pow):
            emit(e.base)
            code.append(ops.OP_POW)
            args.append(e.exponent)
        elif isinstance(e, Func):
            emit(e.arg)
            code.append(_UN[e.name])
            args.append(0)
        else:
            emit(e.left)
            emit(e.right)
            code.append(_BIN[type(e)])
            args.append(0)

    emit(e)
    return (tuple(code), tuple(args), tuple(cm), tuple(ce))


# -- interval enclosure -----------------------------------------------------


def enclose(e: Expr, lo: float, hi: float):
    """Outward-rounded enclosure of ``e`` over ``[lo, hi]`` as an ``mpmath.iv`` interval.

    A domain violation anywhere in the box yields ``[-inf, inf]``.
    """
    iv = mpmath.iv
    box = iv.mpf([lo, hi])
    whole = iv.mpf([-mpmath.inf, mpmath.inf])

    def go(e):
        if isinstance(e, Const):
            return iv.mpf(e.value)
        if isinstance(e, Var):
            return box
        if isinstance(e, Neg):
            return -go(e.arg)
        if isinstance(e, Add):
            return go(e.left) + go(e.right)
        if isinstance(e, Sub):
            return go(e.left) - go(e.right)
        if isinstance(e, Mul):
            a, b = go(e.left), go(e.right)
            return a * a if e.left == e.right else a * b
        if isinstance(e, Div):
            return go(e.left) / go(e.right)
        if isinstance(e, Pow):
            return go(e.base) ** e.exponent
        u = go(e.arg)
        return getattr(iv, e.name)(u)

    try:
        return go(e)
    except (ValueError, ZeroDivisionError):
        return whole
