"""Operator expressions: AST, tokenizer, evaluation and printing.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := factor ("*" factor)*
    factor := "I" | "X" | "Y" | "Z" | "diag" "(" real ("," real)* ")"
            | number | "i" | "kron" "(" expr "," expr ")" | "(" expr ")"
            | "-" factor

``*`` is the matrix product (or scalar scaling); ``+``/``-`` require equal
shapes.  Source positions are kept on nodes but ignored by equality.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..errors import SpecError
from ..opalg import pauli

Pos = tuple  # (line, column)


@dataclass(frozen=True)
class Pauli:
    name: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Diag:
    values: tuple[float, ...]
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Num:
    value: float
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Imag:
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    left: "Expr"
    right: "Expr"
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Kron:
    left: "Expr"
    right: "Expr"
    pos: Pos | None = field(default=None, compare=False, repr=False)


Expr = Union[Pauli, Diag, Num, Imag, Neg, BinOp, Kron]


# --- tokens ---------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "punct", "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self) -> Pos:
        return (self.line, self.col)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[{}()\[\],;=+\-*@])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise SpecError(
                f"unexpected character {text[i]!r}", line, i - line_start + 1, text[i]
            )
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("num", "ident", "punct"):
            tokens.append(Token(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> SpecError:
        tok = tok or self.peek()
        return SpecError(message, tok.line, tok.col, tok.text or "<end of input>")

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "ident") and tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False


# --- parsing ----------------------------------------------------------------

def parse_expr(ts: TokenStream) -> Expr:
    node = parse_term(ts)
    while ts.at("+") or ts.at("-"):
        tok = ts.next()
        node = BinOp(tok.text, node, parse_term(ts), pos=tok.pos)
    return node


def parse_term(ts: TokenStream) -> Expr:
    node = parse_factor(ts)
    while ts.at("*"):
        tok = ts.next()
        node = BinOp("*", node, parse_factor(ts), pos=tok.pos)
    return node


def parse_real(ts: TokenStream) -> float:
    sign = -1.0 if ts.accept("-") else 1.0
    tok = ts.peek()
    if tok.kind != "num":
        raise ts.error("expected a real number")
    ts.next()
    return sign * float(tok.text)


def parse_factor(ts: TokenStream) -> Expr:
    tok = ts.peek()
    if tok.kind == "num":
        ts.next()
        return Num(float(tok.text), pos=tok.pos)
    if tok.kind == "punct":
        if tok.text == "-":
            ts.next()
            return Neg(parse_factor(ts), pos=tok.pos)
        if tok.text == "(":
            ts.next()
            node = parse_expr(ts)
            ts.expect(")")
            return node
        raise ts.error("expected an operator expression")
    if tok.kind == "ident":
        if tok.text in ("I", "X", "Y", "Z"):
            ts.next()
            return Pauli(tok.text, pos=tok.pos)
        if tok.text == "i":
            ts.next()
            return Imag(pos=tok.pos)
        if tok.text == "diag":
            ts.next()
            ts.expect("(")
            values = [parse_real(ts)]
            while ts.accept(","):
                values.append(parse_real(ts))
            ts.expect(")")
            return Diag(tuple(values), pos=tok.pos)
        if tok.text == "kron":
            ts.next()
            ts.expect("(")
            left = parse_expr(ts)
            ts.expect(",")
            right = parse_expr(ts)
            ts.expect(")")
            return Kron(left, right, pos=tok.pos)
        raise ts.error(f"unknown operator {tok.text!r}")
    raise ts.error("expected an operator expression")


def parse_expression(text: str) -> Expr:
    ts = TokenStream(tokenize(text))
    node = parse_expr(ts)
    if ts.peek().kind != "eof":
        raise ts.error("unexpected trailing input")
    return node


# --- evaluation -------------------------------------------------------------

def _err(node, message: str) -> SpecError:
    if node.pos is None:
        return SpecError(message)
    return SpecError(message, node.pos[0], node.pos[1], format_expr(node))


def evaluate(node: Expr) -> complex | np.ndarray:
    """Evaluate to a complex scalar or a square complex matrix."""
    if isinstance(node, Pauli):
        return pauli(node.name)
    if isinstance(node, Diag):
        return np.diag(np.array(node.values, dtype=complex))
    if isinstance(node, Num):
        return complex(node.value)
    if isinstance(node, Imag):
        return 1j
    if isinstance(node, Neg):
        return -evaluate(node.operand)
    if isinstance(node, Kron):
        a, b = evaluate(node.left), evaluate(node.right)
        if np.isscalar(a) or np.isscalar(b):
            raise _err(node, "kron needs two operators, got a scalar")
        return np.kron(a, b)
    if isinstance(node, BinOp):
        a, b = evaluate(node.left), evaluate(node.right)
        a_s, b_s = np.isscalar(a), np.isscalar(b)
        if node.op == "*":
            if a_s or b_s:
                return a * b
            if a.shape != b.shape:
                raise _err(node, f"dimension mismatch in product: {a.shape[0]} vs {b.shape[0]}")
            return a @ b
        if a_s != b_s:
            raise _err(node, f"cannot {'add' if node.op == '+' else 'subtract'} a scalar and an operator")
        if not a_s and a.shape != b.shape:
            raise _err(node, f"dimension mismatch in sum: {a.shape[0]} vs {b.shape[0]}")
        return a + b if node.op == "+" else a - b
    raise TypeError(f"not an expression node: {node!r}")


# --- printing ---------------------------------------------------------------

def format_real(x: float) -> str:
    return repr(float(x))


def format_expr(node: Expr) -> str:
    """Fully parenthesized source text that reparses to an equal tree."""
    if isinstance(node, Pauli):
        return node.name
    if isinstance(node, Diag):
        return "diag(" + ", ".join(format_real(v) for v in node.values) + ")"
    if isinstance(node, Num):
        return format_real(node.value)
    if isinstance(node, Imag):
        return "i"
    if isinstance(node, Neg):
        return "-" + _format_factor(node.operand)
    if isinstance(node, Kron):
        return f"kron({format_expr(node.left)}, {format_expr(node.right)})"
    if isinstance(node, BinOp):
        left = format_expr(node.left)
        right = _format_factor(node.right) if node.op == "*" else format_expr(node.right)
        if node.op == "*":
            left = _format_factor(node.left) if not _is_product(node.left) else left
        else:
            right = f"({right})" if isinstance(node.right, BinOp) and node.right.op != "*" else right
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


def _is_product(node: Expr) -> bool:
    return isinstance(node, BinOp) and node.op == "*"


def _format_factor(node: Expr) -> str:
    if isinstance(node, BinOp):
        return f"({format_expr(node)})"
    return format_expr(node)


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return format_real(z.real)
    if z.real == 0:
        return f"{format_real(z.imag)}*i"
    sign = "+" if z.imag >= 0 else "-"
    return f"({format_real(z.real)} {sign} {format_real(abs(z.imag))}*i)"
