"""Identities between thermodynamic quantities.

An identity is ``lhs == rhs`` (``=`` also accepted; a lone expression means
``expr == 0``).  Besides ordinary arithmetic the terms may use

* ``D(a;b|c)``: the partial of ``a`` with respect to ``b`` at constant ``c``,
  with ``(∂a/∂b)_c`` as an alias;
* ``DD(a;b|c; d|e)``: the partial of ``D(a;b|c)`` with respect to ``d`` at
  constant ``e``;
* quantity symbols ``p V T S G H F E`` (or ``x y u v E13 E14 E23 E24``, or
  codes ``1``..``8`` inside D/DD);
* primitives ``x y f g f_1 ... g_22``, derived quantities such as ``c_p``,
  and any other bare name as a parameter.

See docs/grammar.md for the EBNF.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .bracket import (
    ENERGY_NAMES, SYMBOLS, PrimitiveTable, code_of, primitive_table, second_reduce, triple_reduce,
)
from .errors import InvalidTriple, ParseError
from .models import GasModel, catalog
from .symcore import (
    DEFAULT_SEED, Exp, Expr, Field, Fn, Ln, Num, Param, Power, Sum, Verdict, X, Y,
    equivalent, is_zero, normalize, raw_diff, substitute_many,
)
from .symcore.equivalence import INCONCLUSIVE, PROVED, REFUTED
from .symcore.parse import ExprParser, make_product, negate, reciprocal

__all__ = [
    "IdentityAst", "Lit", "Sym", "Neg", "Bin", "Call", "D", "DD", "parse_identity",
    "parse_term", "to_source", "DerivedQuantity", "DERIVED", "compile_identity",
    "compile_term", "verify", "derived", "GENERIC",
]

GENERIC = "generic"

_QUANTITY_VALUE = {"p": "x", "V": "y", "T": "f", "S": "g", "u": "f", "v": "g"}
_QUANTITY_NAMES = set(SYMBOLS.values()) | set(ENERGY_NAMES.values()) | {"u", "v"}
_PRIMITIVE_RE = re.compile(r"^(x|y|f|g|f_[12]{1,2}|g_[12]{1,2})$")


# ------------------------------------------------------------------ the AST

@dataclass(frozen=True)
class Lit:
    text: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Sym:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Term"


@dataclass(frozen=True)
class D:
    """(∂a/∂b)_c with quantity codes."""
    a: int
    b: int
    c: int
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DD:
    """∂/∂d at constant e of (∂a/∂b)_c."""
    inner: D
    d: int
    e: int
    pos: int = field(default=0, compare=False)


Term = Union[Lit, Sym, Neg, Bin, Call, D, DD]


@dataclass(frozen=True)
class IdentityAst:
    lhs: Term
    rhs: Term | None = None
    text: str = field(default="", compare=False)

    def __str__(self) -> str:
        return to_source(self)


# ------------------------------------------------------------------- parser

class _IdentityParser(ExprParser):
    """Same arithmetic as the expression syntax, building AST nodes instead of Exprs."""

    def identity(self) -> IdentityAst:
        lhs = self.expr()
        rhs = None
        if self.at("==") or self.at("="):
            self.advance()
            rhs = self.expr()
        self.finish()
        return IdentityAst(lhs, rhs, self.text)

    def term_only(self) -> Term:
        e = self.expr()
        self.finish()
        return e

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().value
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().value
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.at("^"):
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Lit(t.value, t.pos)
        if self.at("("):
            if self.peek().kind == "op" and self.peek().value == "∂":
                return self.partial()
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            return self.name()
        self.fail("expected an operand", self._PRIMARY_EXPECTED)

    def name(self):
        t = self.advance()
        if t.value in ("D", "DD") and self.at("("):
            return self.derivative(t)
        if self.at("("):
            if t.value.endswith("'"):
                self.i -= 1
                self.fail("primed functions are not allowed in identities", ["name"])
            self.advance()
            arg = self.expr()
            self.expect(")")
            return Call(t.value, arg)
        if t.value.endswith("'"):
            self.i -= 1
            self.fail("a primed function name needs an argument", ["'('"])
        return Sym(t.value, t.pos)

    def code(self) -> int:
        t = self.tok
        if t.kind in ("num", "name"):
            try:
                c = code_of(t.value)
            except InvalidTriple:
                self.fail("expected a quantity", ["p", "V", "T", "S", "G", "H", "F", "E", "1..8"])
            self.advance()
            return c
        self.fail("expected a quantity", ["p", "V", "T", "S", "G", "H", "F", "E", "1..8"])

    def derivative(self, head) -> D | DD:
        self.expect("(")
        a = self.code()
        self.expect(";")
        b = self.code()
        self.expect("|")
        c = self.code()
        inner = D(a, b, c, head.pos)
        if head.value == "D":
            self.expect(")")
            self._check(inner, head)
            return inner
        self.expect(";")
        d = self.code()
        self.expect("|")
        e = self.code()
        self.expect(")")
        self._check(inner, head)
        if d == e:
            raise ParseError(f"outer pair ({d},{e}) repeats a quantity", self.text, head.pos)
        return DD(inner, d, e, head.pos)

    def _check(self, node: D, head):
        if node.b == node.c:
            raise ParseError(f"derivative ({node.a},{node.b},{node.c}) holds its own variable "
                             "constant", self.text, head.pos)

    def partial(self) -> D:
        """(∂a/∂b)_c"""
        start = self.advance().pos
        self.expect("∂")
        a = self.code()
        self.expect("/")
        self.expect("∂")
        b = self.code()
        self.expect(")")
        t = self.tok
        if t.kind != "name" or not t.value.startswith("_") or len(t.value) < 2:
            self.fail("expected a subscript such as _V after (∂a/∂b)", ["'_'"])
        try:
            c = code_of(t.value[1:])
        except InvalidTriple:
            self.fail("expected a quantity subscript", ["_p", "_V", "_T", "_S"])
        self.advance()
        node = D(a, b, c, start)
        self._check(node, t)
        return node


def parse_identity(text: str) -> IdentityAst:
    """Parse ``lhs == rhs`` (or a lone term) into an :class:`IdentityAst`."""
    return _IdentityParser(text).identity()


def parse_term(text: str) -> Term:
    return _IdentityParser(text).term_only()


# ------------------------------------------------------------------ printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM = 5


def _prec(n: Term) -> int:
    if isinstance(n, Bin):
        return _PREC[n.op]
    if isinstance(n, Neg):
        return _NEG_PREC
    return _ATOM


def _wrap(n: Term, ok: bool) -> str:
    s = _src(n)
    return s if ok else f"({s})"


def _src(n: Term) -> str:
    if isinstance(n, Lit):
        return n.text
    if isinstance(n, Sym):
        return n.name
    if isinstance(n, Neg):
        return "-" + _wrap(n.arg, _prec(n.arg) >= _NEG_PREC)
    if isinstance(n, Call):
        return f"{n.name}({_src(n.arg)})"
    if isinstance(n, D):
        return f"D({SYMBOLS[n.a]};{SYMBOLS[n.b]}|{SYMBOLS[n.c]})"
    if isinstance(n, DD):
        i = n.inner
        return f"DD({SYMBOLS[i.a]};{SYMBOLS[i.b]}|{SYMBOLS[i.c]}; {SYMBOLS[n.d]}|{SYMBOLS[n.e]})"
    p = _PREC[n.op]
    if n.op == "^":
        return f"{_wrap(n.left, _prec(n.left) == _ATOM)}^{_wrap(n.right, _prec(n.right) >= _NEG_PREC)}"
    sep = f" {n.op} " if p == 1 else n.op
    return _wrap(n.left, _prec(n.left) >= p) + sep + _wrap(n.right, _prec(n.right) > p)


def to_source(ast: IdentityAst | Term) -> str:
    """Canonical text; parsing it gives back a structurally equal AST."""
    if isinstance(ast, IdentityAst):
        if ast.rhs is None:
            return _src(ast.lhs)
        return f"{_src(ast.lhs)} == {_src(ast.rhs)}"
    return _src(ast)


# --------------------------------------------------------- derived quantities

@dataclass(frozen=True)
class DerivedQuantity:
    name: str
    definition: str
    meaning: str
    note: str = ""


DERIVED = {q.name: q for q in (
    DerivedQuantity("c_V", "T*D(S;T|V)", "heat capacity at constant volume"),
    DerivedQuantity("c_p", "T*D(S;T|p)", "heat capacity at constant pressure"),
    DerivedQuantity("gamma_ratio", "c_p/c_V", "ratio of the heat capacities"),
    DerivedQuantity("c_diff", "c_p - c_V", "difference of the heat capacities"),
    DerivedQuantity("l_V", "D(S;V|T)", "latent heat of volume increase",
                    "sign taken from the reduction of (dS/dV)_T, i.e. +(4,2,3)"),
    DerivedQuantity("l_p", "D(S;p|T)", "latent heat of pressure increase"),
    DerivedQuantity("m_V", "D(S;V|p)", "entropy change with volume at constant pressure"),
    DerivedQuantity("m_p", "-D(S;p|V)", "entropy change with pressure at constant volume",
                    "stored as -(4,1,2); the partial (dS/dp)_V itself is +(4,1,2)"),
    DerivedQuantity("alpha_p", "1/V*D(V;T|p)", "coefficient of volume expansion at constant pressure"),
    DerivedQuantity("B_T", "-V*D(p;V|T)", "isothermal bulk modulus"),
    DerivedQuantity("K_T", "1/B_T", "isothermal compressibility"),
)}


# ----------------------------------------------------------------- compiler

def _field_value(t: PrimitiveTable, fld: Field) -> Expr:
    if t.name.startswith("generic"):
        return fld
    key = ("field", fld.name, fld.nx, fld.ny)
    if key not in t.cache:
        e = t.f if fld.name == "f" else t.g
        for _ in range(fld.nx):
            e = raw_diff(e, X)
        for _ in range(fld.ny):
            e = raw_diff(e, Y)
        t.cache[key] = normalize(e, t.positive)
    return t.cache[key]


def _primitive(name: str, t: PrimitiveTable) -> Expr:
    if name == "x":
        return X
    if name == "y":
        return Y
    head, _, idx = name.partition("_")
    return _field_value(t, Field(head, idx.count("1"), idx.count("2")))


class _Compiler:
    def __init__(self, t: PrimitiveTable, functions=None):
        self.t = t
        self.functions = functions or {}
        self.active: list[str] = []

    def __call__(self, n: Term) -> Expr:
        if isinstance(n, Lit):
            return Num(Fraction(n.text))
        if isinstance(n, Sym):
            return self.symbol(n)
        if isinstance(n, Neg):
            return negate(self(n.arg))
        if isinstance(n, Bin):
            a, b = self(n.left), self(n.right)
            if n.op == "+":
                return Sum((a, b))
            if n.op == "-":
                return Sum((a, negate(b)))
            if n.op == "*":
                return make_product([a, b])
            if n.op == "/":
                return make_product([a, reciprocal(b)])
            return Power(a, b)
        if isinstance(n, Call):
            arg = self(n.arg)
            if n.name in ("ln", "log"):
                return Ln(arg)
            if n.name == "exp":
                return Exp(arg)
            if n.name == "sqrt":
                return Power(arg, Num(Fraction(1, 2)))
            rule = self.functions.get(n.name)
            return Fn(n.name, 0, arg, rule)
        if isinstance(n, D):
            return triple_reduce((n.a, n.b, n.c), self.t)
        if isinstance(n, DD):
            i = n.inner
            return second_reduce((i.a, i.b, i.c), n.d, n.e, self.t)
        raise TypeError(f"cannot compile {type(n).__name__}")

    def symbol(self, n: Sym) -> Expr:
        name = n.name
        if name in DERIVED:
            if name in self.active:
                raise InvalidTriple(f"derived quantity {name} is defined in terms of itself")
            self.active.append(name)
            try:
                return self(parse_term(DERIVED[name].definition))
            finally:
                self.active.pop()
        if name in _QUANTITY_VALUE:
            return _primitive(_QUANTITY_VALUE[name], self.t)
        if name in _QUANTITY_NAMES:
            raise InvalidTriple(f"the energy function {name} has no closed primitive form; "
                                "only its derivatives can be used")
        if _PRIMITIVE_RE.match(name):
            return _primitive(name, self.t)
        return Param(name)


def compile_term(n: Term, t: PrimitiveTable) -> Expr:
    return t.finish(_Compiler(t, _rules(t))(n))


def _rules(t: PrimitiveTable) -> dict:
    from .modelfile import _fn_rules
    out: dict = {}
    if not t.name.startswith("generic"):
        _fn_rules(t.f, out)
        _fn_rules(t.g, out)
    return out


def compile_identity(ast: IdentityAst, t: PrimitiveTable) -> tuple[Expr, Expr]:
    """Both sides reduced to primitives and normalized."""
    lhs = compile_term(ast.lhs, t)
    rhs = compile_term(ast.rhs, t) if ast.rhs is not None else Num(0)
    return lhs, rhs


def derived(name: str, model: GasModel | str | None = None) -> Expr:
    """A derived quantity reduced to primitives (abstract, J = 1 imposed, when ``model`` is None)."""
    if name not in DERIVED:
        raise KeyError(f"unknown derived quantity {name!r}; known: {', '.join(DERIVED)}")
    return compile_term(Sym(name), _table(model))


def _table(model) -> PrimitiveTable:
    if model is None or model == GENERIC:
        return primitive_table(None)
    if isinstance(model, str):
        from .models import get_model
        model = get_model(model)
    return primitive_table(model)


# ------------------------------------------------------------------ verifier

def _as_ast(identity) -> IdentityAst:
    return identity if isinstance(identity, IdentityAst) else parse_identity(identity)


def _report(v: Verdict, ast: IdentityAst, mode: str) -> Verdict:
    v.extra = {"identity": to_source(ast), "mode": mode, **v.extra}
    return v


def verify(identity, model: GasModel | str | None = GENERIC, tol: float = 1e-9,
           samples: int = 50, seed: int = DEFAULT_SEED) -> Verdict:
    """Decide an identity, abstractly under J = 1 (``GENERIC``) or on a concrete model.

    In generic mode a symbolic zero is a proof.  Otherwise the identity is
    tried on every calibrated catalog model, and only a concrete witness
    there turns the verdict into Refuted; without one it stays Inconclusive.
    """
    ast = _as_ast(identity)
    if model is None or model == GENERIC:
        t = primitive_table(None)
        lhs, rhs = compile_identity(ast, t)
        if is_zero(Sum((lhs, negate(rhs))), False):
            return _report(Verdict(PROVED, tolerance=0.0, samples=0, seed=seed, residual=0.0),
                           ast, GENERIC)
        checked = []
        for m in catalog():
            if not m.calibrated:
                continue
            try:
                v = verify(ast, m, tol, samples, seed)
            except InvalidTriple:
                continue
            checked.append(m.name)
            if v.kind == REFUTED:
                witness = dict(v.witness or {}, model=m.name)
                return _report(Verdict(REFUTED, tolerance=tol, samples=v.samples, seed=seed,
                                       witness=witness, residual=v.residual,
                                       detail="abstract difference is not zero and a "
                                              "calibrated model gives a counterexample"),
                               ast, GENERIC)
        return _report(Verdict(INCONCLUSIVE, tolerance=tol, samples=samples, seed=seed,
                               detail="abstract difference did not reduce to zero; no "
                                      "counterexample on " + ", ".join(checked)),
                       ast, GENERIC)
    t = _table(model)
    lhs, rhs = compile_identity(ast, t)
    v = equivalent(lhs, rhs, t.box, t.params, t.functions, tol=tol, samples=samples,
                   seed=seed, positive=t.positive)
    return _report(v, ast, t.name)
