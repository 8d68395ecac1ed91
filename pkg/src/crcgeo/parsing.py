"""Recursive-descent parser for the scalar expression grammar.

Grammar (precedence low to high): ``+ -`` < ``* /`` < unary minus < ``^``,
with ``^`` right-associative.  Primaries are rational and decimal literals,
the imaginary unit ``i``, ``sqrt(x)`` (sugar for ``x^(1/2)``), identifiers
declared in the supplied variable table, and parenthesized expressions.
Exponents must fold to rational constants.  Errors carry byte offsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .scalars import (
    Add,
    Const,
    Expr,
    I,
    Mul,
    MINUS_ONE,
    ParseError,
    Pow,
    QC,
    UndeclaredIdentifierError,
    Var,
    VariableTable,
    normalize,
)

_OPERATORS = "+-*/^(),@"


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "op" | "end"
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(Token("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], i))
            i = j
            continue
        if ch in _OPERATORS:
            tokens.append(Token("op", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(Token("end", "", n))
    return tokens


def _number_to_expr(text: str, offset: int) -> Expr:
    try:
        if "." in text:
            return Const(QC.of(Fraction(text)))
        return Const(QC.of(int(text)))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad numeric literal {text!r}", offset)


class _Parser:
    def __init__(self, tokens: list[Token], table: VariableTable):
        self.tokens = tokens
        self.pos = 0
        self.table = table

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}", tok.offset)
        return self.advance()

    def parse_expression(self) -> Expr:
        node = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                rhs = self.parse_term()
                if tok.text == "+":
                    node = Add((node, rhs))
                else:
                    node = Add((node, Mul((MINUS_ONE, rhs))))
            else:
                return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.advance()
                rhs = self.parse_unary()
                if tok.text == "*":
                    node = Mul((node, rhs))
                else:
                    node = Mul((node, Pow(rhs, Fraction(-1))))
            else:
                return node

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Mul((MINUS_ONE, self.parse_unary()))
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_primary()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exp_offset = self.peek().offset
            exponent = self.parse_exponent_operand()
            return Pow(base, self._fold_rational(exponent, exp_offset))
        return base

    def parse_exponent_operand(self) -> Expr:
        # right-associative, and a leading minus binds to the exponent
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Mul((MINUS_ONE, self.parse_exponent_operand()))
        base = self.parse_primary()
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "^":
            self.advance()
            off = self.peek().offset
            inner = self.parse_exponent_operand()
            return Pow(base, self._fold_rational(inner, off))
        return base

    def _fold_rational(self, e: Expr, offset: int) -> Fraction:
        n = normalize(e)
        if isinstance(n, Const) and n.value.im == 0:
            return n.value.re
        raise ParseError("exponent must be a rational constant", offset)

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return _number_to_expr(tok.text, tok.offset)
        if tok.kind == "ident":
            self.advance()
            if tok.text == "i":
                return I
            if tok.text == "sqrt":
                self.expect_op("(")
                inner = self.parse_expression()
                self.expect_op(")")
                return Pow(inner, Fraction(1, 2))
            v = self.table.get(tok.text)
            if v is None:
                raise UndeclaredIdentifierError(tok.text, tok.offset)
            return Var(v)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_expression()
            self.expect_op(")")
            return inner
        raise ParseError("expected a number, identifier or '('", tok.offset)


def parse(text: str, table: VariableTable) -> Expr:
    """Parse an expression string over the declared variables."""
    parser = _Parser(tokenize(text), table)
    node = parser.parse_expression()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.offset)
    return node
