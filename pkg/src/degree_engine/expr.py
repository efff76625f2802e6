"""Arithmetic expressions over named real variables.

Grammar (the canonical printer emits exactly this)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-x^2`` is
``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``. Juxtaposition (``2x``) is rejected.
Constants are stored non-negative; a negative literal is a ``Neg`` node.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ArityMismatch, DomainError, ParseError, UnknownSymbol

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

BINARY_OPS = ("+", "-", "*", "/", "^")


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    def __str__(self) -> str:
        return to_text(self)

    # operator sugar used when building maps programmatically
    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __neg__(self):
        return Neg(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"Const must be finite and non-negative, got {self.value!r}")
        object.__setattr__(self, "value", v)

    __str__ = Expr.__str__


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str

    __str__ = Expr.__str__


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown operator {self.op!r}")

    __str__ = Expr.__str__


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")

    __str__ = Expr.__str__


def const(value: float) -> Expr:
    """Literal for any finite real; negative values become ``Neg(Const(-v))``."""
    value = float(value)
    if value < 0 or (value == 0 and math.copysign(1.0, value) < 0):
        return Neg(Const(-value))
    return Const(value)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return const(value)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int


def tokenize(text: str, offset: int = 0) -> list[Token]:
    tokens = []
    i = 0
    n = len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        m = _TOKEN_RE.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", offset + i)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), offset + m.start(kind)))
        i = m.end()
    tokens.append(Token("end", "", offset + n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], allowed: set[str] | None):
        self.tokens = tokens
        self.i = 0
        self.allowed = allowed

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text:
            got = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, got {got!r}", self.tok.pos)
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected token {self.tok.text!r}", self.tok.pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            node: Expr = Const(float(t.text))
        elif t.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownSymbol(f"unknown function {t.text!r}", t.pos)
                self.advance()
                arg = self.expr()
                if self.tok.text == ",":  # pragma: no cover - ',' is not tokenized
                    raise ArityMismatch(f"{t.text} takes one argument", self.tok.pos)
                self.expect(")")
                node = Call(t.text, arg)
            else:
                if t.text in FUNCTIONS:
                    raise ParseError(f"function {t.text!r} needs an argument", self.tok.pos)
                if self.allowed is not None and t.text not in self.allowed:
                    raise UnknownSymbol(f"unknown symbol {t.text!r}", t.pos)
                node = Var(t.text)
        elif t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
        else:
            got = t.text or "end of input"
            raise ParseError(f"unexpected {got!r}", t.pos)
        if self.tok.kind in ("num", "name") or (self.tok.kind == "op" and self.tok.text == "("):
            raise ParseError("implicit multiplication is not allowed", self.tok.pos)
        return node


def parse_expr(text: str, allowed: set[str] | None = None, offset: int = 0) -> Expr:
    """Parse one expression. ``allowed`` restricts free variable names."""
    return _Parser(tokenize(text, offset), allowed).parse()


# ---------------------------------------------------------------------------
# canonical printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and v < 1e16:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        if _prec(e.operand) < 3 or isinstance(e.operand, Neg):
            inner = f"({inner})"
        return "-" + inner
    assert isinstance(e, BinOp)
    p = _PREC[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if e.op == "^":
        if _prec(e.left) <= 4:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    if p == 1:
        return f"{left} {e.op} {right}"
    return f"{left}{e.op}{right}"


# ---------------------------------------------------------------------------
# analysis and evaluation


def free_symbols(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Neg):
        return free_symbols(e.operand)
    if isinstance(e, Call):
        return free_symbols(e.arg)
    return free_symbols(e.left) | free_symbols(e.right)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (no simplification)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


def _binary(op: str) -> Callable:
    return {
        "+": np.add,
        "-": np.subtract,
        "*": np.multiply,
        "/": np.divide,
        "^": np.power,
    }[op]


def compile_expr(e: Expr) -> Callable[[Mapping[str, np.ndarray]], np.ndarray]:
    """Turn ``e`` into a closure evaluating it on an environment of arrays.

    Out-of-domain entries come back as nan/inf; callers decide whether that is
    an error (see ``evaluate``) or a rejected Newton iterate.
    """
    if isinstance(e, Const):
        v = e.value
        return lambda env: v
    if isinstance(e, Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, Neg):
        f = compile_expr(e.operand)
        return lambda env: np.negative(f(env))
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        g = compile_expr(e.arg)
        return lambda env: fn(g(env))
    op = _binary(e.op)
    fl, fr = compile_expr(e.left), compile_expr(e.right)
    if e.op == "^" and isinstance(e.right, Const) and e.right.value == 2.0:
        return lambda env: np.square(fl(env))
    return lambda env: op(fl(env), fr(env))


def _locate_domain_error(e: Expr, env: Mapping[str, np.ndarray]) -> str | None:
    """Describe the innermost node turning finite inputs into non-finite output."""
    children: list[Expr] = []
    if isinstance(e, Neg):
        children = [e.operand]
    elif isinstance(e, Call):
        children = [e.arg]
    elif isinstance(e, BinOp):
        children = [e.left, e.right]
    for c in children:
        msg = _locate_domain_error(c, env)
        if msg is not None:
            return msg
    with np.errstate(all="ignore"):
        val = np.asarray(compile_expr(e)(env), dtype=float)
    if not np.all(np.isfinite(val)):
        return f"{to_text(e)} is not finite"
    return None


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate at a single point; raises DomainError instead of returning nan."""
    with np.errstate(all="ignore"):
        val = float(compile_expr(e)(env))
    if not math.isfinite(val):
        msg = _locate_domain_error(e, env) or f"{to_text(e)} is not finite"
        raise DomainError(msg)
    return val
