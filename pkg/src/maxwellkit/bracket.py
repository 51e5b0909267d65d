"""Coded derivative calculus.

Quantities are numbered 1..8 (p, V, T, S, G, H, F, E, equivalently x, y,
u, v and the four energy functions).  ``(i, j, k)`` is the partial of
quantity ``i`` with respect to ``j`` at constant ``k`` and ``[a, b; c, d]``
is the Jacobian of (a, b) with respect to (c, d).  Everything reduces to
the sixteen primitive entries ``(i, 1, 2)`` and ``(i, 2, 1)``, i.e. the x-
and y-partials of each quantity in the base coordinates.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import DegenerateBracket, InvalidTriple, ParseError, UnboundSymbol, DomainViolation
from .symcore import (
    Box, Evaluator, Expr, Field, Num, ONE, Power, Product, Sum, X, Y, ZERO,
    free_symbols, normalize, raw_diff, substitute_many,
)

__all__ = [
    "SYMBOLS", "NEUTRAL", "ENERGY_NAMES", "code_of", "PrimitiveTable", "primitive_table",
    "generic_table", "bracket_reduce", "triple_reduce", "second_reduce",
    "energy_differential", "maxwell_residuals", "enumerate_all", "Census",
    "all_triples", "all_brackets", "parse_triple", "parse_bracket", "parse_second",
    "impose_unit_jacobian",
]

SYMBOLS = {1: "p", 2: "V", 3: "T", 4: "S", 5: "G", 6: "H", 7: "F", 8: "E"}
NEUTRAL = {1: "x", 2: "y", 3: "u", 4: "v", 5: "E13", 6: "E14", 7: "E23", 8: "E24"}
ENERGY_NAMES = {5: "E13", 6: "E14", 7: "E23", 8: "E24"}

_CODE_LOOKUP = {str(i): i for i in SYMBOLS}
_CODE_LOOKUP.update({v: k for k, v in SYMBOLS.items()})
_CODE_LOOKUP.update({v: k for k, v in NEUTRAL.items()})
_CODE_LOOKUP.update({"E¹³": 5, "E¹⁴": 6, "E²³": 7, "E²⁴": 8})


def code_of(token) -> int:
    """Quantity code for an integer, a thermodynamic symbol or a neutral name."""
    if isinstance(token, int) and 1 <= token <= 8:
        return token
    key = str(token).strip()
    if key in _CODE_LOOKUP:
        return _CODE_LOOKUP[key]
    raise InvalidTriple(f"unknown quantity {token!r}; use 1..8, p V T S G H F E or x y u v")


F_, G_ = Field("f"), Field("g")


def _rows(f: Expr, g: Expr, f1: Expr, f2: Expr, g1: Expr, g2: Expr) -> dict:
    """x- and y-partials of the eight quantities given u=f, v=g and their gradients."""
    x, y = X, Y
    neg = lambda e: Product((Num(-1), e))
    return {
        1: (ONE, ZERO),
        2: (ZERO, ONE),
        3: (f1, f2),
        4: (g1, g2),
        5: (Sum((y, neg(Product((g, f1))))), neg(Product((g, f2)))),
        6: (Sum((y, Product((f, g1)))), Product((f, g2))),
        7: (neg(Product((g, f1))), Sum((neg(x), neg(Product((g, f2)))))),
        8: (Product((f, g1)), Sum((neg(x), Product((f, g2))))),
    }


# ----------------------------------------------------------- J = 1 imposition

_G2_RULE = Product((Sum((ONE, Product((Field("f", 0, 1), Field("g", 1, 0))))),
                    Power(Field("f", 1, 0), Num(-1))))


@lru_cache(maxsize=None)
def _imposed_field(nx: int, ny: int) -> Expr:
    """g differentiated nx times in x and ny >= 1 times in y, with g_2 = (1 + f_2 g_1)/f_1."""
    e = _G2_RULE
    for _ in range(ny - 1):
        e = raw_diff(e, Y)
    for _ in range(nx):
        e = raw_diff(e, X)
    return normalize(impose_unit_jacobian(e))


def impose_unit_jacobian(e: Expr) -> Expr:
    """Eliminate every y-derivative of g using f_1 g_2 - f_2 g_1 = 1."""
    targets = {s: None for s in free_symbols(e)
               if isinstance(s, Field) and s.name == "g" and s.ny >= 1}
    if not targets:
        return e
    mapping = {s: _imposed_field(s.nx, s.ny) for s in targets}
    return substitute_many(e, mapping)


# -------------------------------------------------------------------- table

@dataclass
class PrimitiveTable:
    """The sixteen primitive partials plus the context needed to simplify them."""

    name: str
    f: Expr
    g: Expr
    entries: dict
    positive: bool = False
    impose: bool = False
    box: Box | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    functions: Mapping = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    def finish(self, e: Expr) -> Expr:
        if self.impose:
            e = impose_unit_jacobian(e)
        return normalize(e, self.positive)

    def entry(self, i: int, j: int, k: int) -> Expr:
        return self.entries[(i, j, k)]

    def dx(self, i: int) -> Expr:
        return self.entries[(i, 1, 2)]

    def dy(self, i: int) -> Expr:
        return self.entries[(i, 2, 1)]

    def numeric_points(self, n: int = 5, seed: int = 7):
        if self.box is None:
            return []
        return self.box.sample(n, seed)


def _build(name, f, g, f1, f2, g1, g2, **kw) -> PrimitiveTable:
    t = PrimitiveTable(name=name, f=f, g=g, entries={}, **kw)
    for i, (ex, ey) in _rows(f, g, f1, f2, g1, g2).items():
        t.entries[(i, 1, 2)] = t.finish(ex)
        t.entries[(i, 2, 1)] = t.finish(ey)
    return t


def generic_table(impose: bool = True) -> PrimitiveTable:
    """Table over abstract f, g; with ``impose`` the calibration J = 1 is built in."""
    return _build("generic" if impose else "generic-free", F_, G_,
                  Field("f", 1, 0), Field("f", 0, 1), Field("g", 1, 0), Field("g", 0, 1),
                  impose=impose)


def primitive_table(model=None) -> PrimitiveTable:
    """Primitive table of a model (anything with u, v, box, params, functions).

    ``None`` or ``"generic"`` gives the abstract table with J = 1 imposed.
    """
    if model is None or model == "generic":
        return generic_table(True)
    positive = getattr(model, "positive", False)
    u, v = model.u, model.v
    d = lambda e, var: normalize(raw_diff(e, var), positive)
    return _build(model.name, normalize(u, positive), normalize(v, positive),
                  d(u, X), d(u, Y), d(v, X), d(v, Y), positive=positive,
                  box=model.box, params=dict(model.params), functions=dict(model.functions))


# ---------------------------------------------------------------- reduction

def _check_code(c: int) -> int:
    if not isinstance(c, int) or not 1 <= c <= 8:
        raise InvalidTriple(f"quantity code {c!r} is not in 1..8")
    return c


def _jac_raw(t: PrimitiveTable, a: int, b: int) -> Expr:
    """(a,1,2)(b,2,1) - (a,2,1)(b,1,2), unsimplified."""
    return Sum((Product((t.dx(a), t.dy(b))),
                Product((Num(-1), t.dy(a), t.dx(b)))))


def _jacobian(t: PrimitiveTable, a: int, b: int) -> Expr:
    key = ("jac", a, b)
    if key not in t.cache:
        t.cache[key] = t.finish(_jac_raw(t, a, b))
    return t.cache[key]


def _numerically_zero(t: PrimitiveTable, e: Expr) -> bool:
    pts = t.numeric_points()
    if not len(pts):
        return False
    seen = 0
    for x, y in pts:
        try:
            val = float(Evaluator(float(x), float(y), t.params, t.functions)(e))
        except (UnboundSymbol, DomainViolation):
            continue
        seen += 1
        if abs(val) > 1e-12:
            return False
    return seen > 0


def _denominator(t: PrimitiveTable, c: int, d: int, label: str) -> Expr:
    den = _jacobian(t, c, d)
    if den == ZERO or _numerically_zero(t, den):
        raise DegenerateBracket(f"{label}: Jacobian of ({c},{d}) vanishes on {t.name}")
    return den


def bracket_reduce(b, t: PrimitiveTable) -> Expr:
    """[a, b; c, d] in primitive terms."""
    a, bb, c, d = (_check_code(k) for k in b)
    if a == bb or c == d:
        raise InvalidTriple(f"bracket [{a},{bb};{c},{d}] repeats a code in one pair")
    key = ("br", a, bb, c, d)
    if key not in t.cache:
        den = _denominator(t, c, d, f"[{a},{bb};{c},{d}]")
        num = _jacobian(t, a, bb)
        t.cache[key] = t.finish(Product((num, Power(den, Num(-1)))))
    return t.cache[key]


def triple_reduce(tr, t: PrimitiveTable) -> Expr:
    """(i, j, k): derivative of i with respect to j at constant k."""
    i, j, k = (_check_code(c) for c in tr)
    if j == k:
        raise InvalidTriple(f"triple ({i},{j},{k}) holds its own variable constant")
    if i == j:
        return ONE
    if i == k:
        return ZERO
    try:
        return bracket_reduce((i, k, j, k), t)
    except DegenerateBracket as exc:
        raise DegenerateBracket(f"({i},{j},{k}): {exc}") from None


def second_reduce(tr, d: int, e: int, t: PrimitiveTable) -> Expr:
    """((a, b, c), d, e): derivative of the triple (a,b,c) with respect to d at constant e."""
    d, e = _check_code(d), _check_code(e)
    if d == e:
        raise InvalidTriple(f"outer pair ({d},{e}) repeats a code")
    key = ("2nd", tuple(tr), d, e)
    if key in t.cache:
        return t.cache[key]
    phi = triple_reduce(tr, t)
    gkey = ("grad", tuple(tr))
    if gkey not in t.cache:
        t.cache[gkey] = (t.finish(raw_diff(phi, X)), t.finish(raw_diff(phi, Y)))
    phi_x, phi_y = t.cache[gkey]
    if d == e:
        raise InvalidTriple("d == e")
    den = _denominator(t, d, e, f"(({','.join(map(str, tr))}),{d},{e})")
    num = Sum((Product((phi_x, t.dy(e))), Product((Num(-1), phi_y, t.dx(e)))))
    out = t.finish(Product((num, Power(den, Num(-1)))))
    t.cache[key] = out
    return out


def energy_differential(which, t: PrimitiveTable | None = None) -> tuple[Expr, Expr]:
    """Coefficients (of dx, of dy) in the exact differential of an energy function."""
    code = code_of(which)
    if code not in ENERGY_NAMES:
        raise InvalidTriple(f"{which!r} is not an energy function (codes 5..8)")
    t = t or generic_table(False)
    return t.dx(code), t.dy(code)


MAXWELL = (
    ("(2,4,1) - (3,1,4)", ((2, 4, 1), 1), ((3, 1, 4), -1)),
    ("(1,4,2) + (3,2,4)", ((1, 4, 2), 1), ((3, 2, 4), 1)),
    ("(4,2,3) - (1,3,2)", ((4, 2, 3), 1), ((1, 3, 2), -1)),
    ("(4,1,3) + (2,3,1)", ((4, 1, 3), 1), ((2, 3, 1), 1)),
)


def maxwell_residuals(t: PrimitiveTable) -> list[Expr]:
    """The four Maxwell-relation residuals; all vanish exactly when J = 1."""
    out = []
    for _, (tr1, s1), (tr2, s2) in MAXWELL:
        out.append(t.finish(Sum((Product((Num(s1), triple_reduce(tr1, t))),
                                 Product((Num(s2), triple_reduce(tr2, t)))))))
    return out


# ------------------------------------------------------------------- census

def all_triples() -> list[tuple[int, int, int]]:
    return list(itertools.permutations(range(1, 9), 3))


def all_brackets() -> list[tuple[int, int, int, int]]:
    return list(itertools.permutations(range(1, 9), 4))


def _label(code) -> str:
    if len(code) == 3 and isinstance(code[0], tuple):
        return "(({},{},{}),{},{})".format(*code[0], code[1], code[2])
    if len(code) == 4:
        return "[{},{};{},{}]".format(*code)
    return "({},{},{})".format(*code)


@dataclass
class Census:
    """Counts of enumerated and successfully reduced derivatives; degenerate codes listed."""
    model: str
    triples: int = 0
    brackets: int = 0
    second: int = 0
    enumerated: dict = field(default_factory=dict)
    degenerate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"model": self.model,
                "enumerated": dict(self.enumerated),
                "reduced": {"triples": self.triples, "brackets": self.brackets,
                            "second_derivatives": self.second},
                "degenerate": [_label(d) for d in self.degenerate]}


def enumerate_all(t: PrimitiveTable, brackets: bool = True, second: bool = False,
                  progress=None) -> Census:
    """Reduce every triple (336), optionally every bracket (1,680) and every
    second derivative ((a,b,c),d,e) (18,816), recording degenerate codes."""
    census = Census(t.name)
    triples = all_triples()
    census.enumerated["triples"] = len(triples)
    for tr in triples:
        try:
            triple_reduce(tr, t)
            census.triples += 1
        except DegenerateBracket:
            census.degenerate.append(tr)
    if brackets:
        census.enumerated["brackets"] = len(all_brackets())
        for b in all_brackets():
            try:
                bracket_reduce(b, t)
                census.brackets += 1
            except DegenerateBracket:
                census.degenerate.append(b)
    if second:
        census.enumerated["second_derivatives"] = 0
        for tr in triples:
            for d, e in itertools.permutations(range(1, 9), 2):
                census.enumerated["second_derivatives"] += 1
                try:
                    second_reduce(tr, d, e, t)
                    census.second += 1
                except DegenerateBracket:
                    census.degenerate.append((tr, d, e))
            if progress:
                progress(tr)
    return census


# ---------------------------------------------------------------- text forms

_ITEM = r"\s*([^,;()\[\]\s]+)\s*"
_TRIPLE_RE = re.compile(rf"^\s*\({_ITEM},{_ITEM},{_ITEM}\)\s*$")
_BRACKET_RE = re.compile(rf"^\s*\[{_ITEM},{_ITEM};{_ITEM},{_ITEM}\]\s*$")
_SECOND_RE = re.compile(rf"^\s*\(\s*\({_ITEM},{_ITEM},{_ITEM}\)\s*,{_ITEM},{_ITEM}\)\s*$")


def _codes(text: str, m, kind: str) -> tuple[int, ...]:
    if not m:
        raise ParseError(f"malformed {kind} {text!r}", text, 0)
    return tuple(code_of(g) for g in m.groups())


def parse_triple(text: str) -> tuple[int, int, int]:
    """"(4,3,1)" or "(S,T,p)" -> (4, 3, 1)."""
    return _codes(text, _TRIPLE_RE.match(text), "triple")


def parse_bracket(text: str) -> tuple[int, int, int, int]:
    return _codes(text, _BRACKET_RE.match(text), "bracket")


def parse_second(text: str) -> tuple[tuple[int, int, int], int, int]:
    c = _codes(text, _SECOND_RE.match(text), "second derivative")
    return c[:3], c[3], c[4]
