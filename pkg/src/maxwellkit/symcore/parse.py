"""Tokenizer and recursive-descent parser for the plain-text expression syntax.

Grammar (see docs/grammar.md)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | NAME "'"* "(" expr ")" | "(" expr ")"

``x``, ``y`` and ``t`` are variables; ``f``, ``g``, ``f_1`` ... ``g_22`` are
the abstract state functions and their partials; ``ln``/``log``, ``exp`` and
``sqrt`` are built in; any other name applied to an argument is an abstract
one-variable function, and any other bare name is a parameter.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Mapping

from ..errors import ParseError
from .expr import Exp, Expr, Field, Fn, Ln, Num, Param, Power, Product, Sum, Var

__all__ = ["Token", "tokenize", "ExprParser", "parse_expr", "make_product", "negate", "reciprocal"]

_UNICODE = {
    "−": "-", "·": "*", "×": "*", "²": "^2", "³": "^3", "′": "'",
    "γ": "gamma", "φ": "phi", "ψ": "psi", "α": "alpha", "β": "beta",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<op>==|\*\*|[-+*/^(),;|=\[\]∂])
""", re.VERBOSE)

_FIELD_RE = re.compile(r"^(f|g)(?:_([12]+))?$")


class Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value: str, pos: int):
        self.kind, self.value, self.pos = kind, value, pos

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r}, {self.pos})"


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in _UNICODE:
            rep = _UNICODE[ch]
            if rep.startswith("^"):
                out.append(Token("op", "^", pos))
                out.append(Token("num", rep[1:], pos))
            elif rep == "'":
                if out and out[-1].kind == "name":
                    out[-1].value += "'"
                else:
                    raise ParseError("unexpected prime", text, pos)
            elif rep.isalpha():
                out.append(Token("name", rep, pos))
            else:
                out.append(Token("op", rep, pos))
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {ch!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if value == "**":
                value = "^"
            out.append(Token(kind, value, pos))
        pos = m.end()
    out.append(Token("end", "", n))
    return out


def make_product(factors: list[Expr]) -> Expr:
    """Product with numeric factors folded into one leading coefficient."""
    coeff = Fraction(1)
    rest = []
    for f in factors:
        parts = f.factors if isinstance(f, Product) else (f,)
        for p in parts:
            if isinstance(p, Num):
                coeff *= p.value
            else:
                rest.append(p)
    if not rest:
        return Num(coeff)
    if coeff == 1:
        return rest[0] if len(rest) == 1 else Product(rest)
    return Product([Num(coeff)] + rest)


def negate(e: Expr) -> Expr:
    return make_product([Num(-1), e])


def reciprocal(e: Expr) -> Expr:
    if isinstance(e, Num):
        if e.value == 0:
            return Power(e, Num(-1))
        return Num(1 / e.value)
    if isinstance(e, Product):
        return make_product([reciprocal(f) for f in e.factors])
    if isinstance(e, Power) and isinstance(e.exponent, Num):
        return Power(e.base, Num(-e.exponent.value))
    return Power(e, Num(-1))


class ExprParser:
    """Recursive-descent parser; subclasses extend :meth:`primary`."""

    def __init__(self, text: str, functions: Mapping[str, Expr | None] | None = None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.functions = dict(functions or {})

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, value: str) -> bool:
        return self.tok.kind == "op" and self.tok.value == value

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(f"expected {value!r}", [repr(value)])
        return self.advance()

    def fail(self, message: str, expected=()):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.value)
        raise ParseError(f"{message}, found {what}", self.text, t.pos, expected)

    def finish(self):
        if self.tok.kind != "end":
            self.fail("unexpected trailing input", ["end of input"])

    # grammar
    def parse(self) -> Expr:
        e = self.expr()
        self.finish()
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            op = self.advance().value
            t = self.term()
            terms.append(t if op == "+" else negate(t))
        return terms[0] if len(terms) == 1 else Sum(terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.at("*") or self.at("/"):
            op = self.advance().value
            f = self.unary()
            factors.append(f if op == "*" else reciprocal(f))
        return factors[0] if len(factors) == 1 else make_product(factors)

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return negate(self.unary())
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at("^"):
            self.advance()
            return Power(base, self.unary())
        return base

    _PRIMARY_EXPECTED = ("number", "name", "'('", "'-'")

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(Fraction(t.value))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            return self.name()
        self.fail("expected an operand", self._PRIMARY_EXPECTED)

    def call_arg(self) -> Expr:
        self.expect("(")
        e = self.expr()
        self.expect(")")
        return e

    def name(self) -> Expr:
        t = self.advance()
        raw = t.value
        base = raw.rstrip("'")
        primes = len(raw) - len(base)
        if self.at("("):
            if base in ("ln", "log") and not primes:
                return Ln(self.call_arg())
            if base == "exp" and not primes:
                return Exp(self.call_arg())
            if base == "sqrt" and not primes:
                return Power(self.call_arg(), Num(Fraction(1, 2)))
            return Fn(base, primes, self.call_arg(), self.functions.get(base))
        if primes:
            self.i -= 1
            self.fail("a primed function name needs an argument", ["'('"])
        return self.symbol(base, t)

    def symbol(self, name: str, tok: Token) -> Expr:
        if name in ("x", "y", "t"):
            return Var(name)
        m = _FIELD_RE.match(name)
        if m:
            idx = m.group(2) or ""
            return Field(m.group(1), idx.count("1"), idx.count("2"))
        if name in ("ln", "log", "exp", "sqrt"):
            self.i -= 1
            self.fail(f"{name} needs an argument", ["'('"])
        return Param(name)


def parse_expr(text: str, functions: Mapping[str, Expr | None] | None = None) -> Expr:
    """Parse plain-text syntax into an :class:`Expr`.

    ``functions`` maps abstract function names to their derivative rules
    (an expression in ``t``), so parsed applications carry the rule.
    """
    return ExprParser(text, functions).parse()
