"""Published formula tables used as test fixtures.

Each fixture is a printed value for a primitive entry, triple, second
derivative or energy-differential coefficient.  :func:`check_fixtures`
regenerates every entry with the reduction engine and classifies it as a
symbolic match, a numeric match, or a mismatch.  Mismatches that are known
misprints carry ``known_typo=True`` and the engine's value as the correction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .bracket import (
    PrimitiveTable, all_triples, energy_differential, generic_table, primitive_table,
    second_reduce, triple_reduce,
)
from .models import GasModel, get_model
from .symcore import Expr, Fn, Ln, T, equivalent, parse_expr, to_text, together
from .symcore.equivalence import PROVED, VERIFIED

__all__ = ["Fixture", "FixtureResult", "FIXTURES", "check_fixtures", "fixtures_for"]


@dataclass(frozen=True)
class Fixture:
    model: str        # catalog name or "generic"
    kind: str         # "first", "triple", "second" or "energy"
    label: str        # code as printed, e.g. "(8,1,2)" or "((5,1,2),2,1)" or "E24:dx"
    text: str         # printed value in plain syntax
    occurrence: int = 1
    known_typo: bool = False
    note: str = ""


def _f(model, kind, rows, typos=(), notes=None):
    notes = notes or {}
    seen: dict = {}
    out = []
    for label, text in rows:
        seen[label] = seen.get(label, 0) + 1
        key = (label, seen[label])
        out.append(Fixture(model, kind, label, text, seen[label],
                           known_typo=key in typos, note=notes.get(key, "")))
    return out


_IDEAL = [
    ("(5,1,2)", "y - y*ln(x*y^gamma)/(gamma - 1)"),
    ("(5,2,1)", "-x*ln(x*y^gamma)/(gamma - 1)"),
    ("(6,1,2)", "y*gamma/(gamma - 1)"),
    ("(6,2,1)", "gamma*x/(gamma - 1)"),
    ("(7,1,2)", "-(y*ln(x*y^gamma))/(gamma - 1)"),
    ("(7,2,1)", "-x - (x*ln(x*y^gamma))/(gamma - 1)"),
    ("(8,1,2)", "y/(gamma - 1)"),
    ("(8,2,1)", "x/(gamma - 1)"),
]

_GENERALIZED = [
    ("(5,1,2)", "b*y/(b - a)"),
    ("(5,2,1)", "b*x/(b - a)"),
    ("(6,1,2)", "d*y/(d - c)"),
    ("(6,2,1)", "d*x/(d - c)"),
    ("(7,1,2)", "a*y/(b - a)"),
    ("(7,2,1)", "a*x/(b - a)"),
    ("(8,1,2)", "c*x/(d - c)"),
    ("(8,2,1)", "c*y/(d - c)"),
]

_VDW_LOG = "ln((a/y^2 + x)*(y - b)^gamma)"
_VDW_F2G2 = "(y - b)^(1 - gamma)*(gamma*(a/y^2 + x)*(y - b)^(gamma - 1) - 2*a*(y - b)^gamma/y^3)/(gamma - 1)"
_VDW = [
    ("(5,1,2)", "(-b + y)/(gamma - 1)"),
    ("(5,2,1)", f"-((-2*(y - b)*a/y^3 + a/y^2 + x)*{_VDW_LOG})/(gamma - 1)"),
    ("(6,1,2)", "y - ((-b + y)*ln((x + a/y^2)*(-b + y)^gamma))/(gamma - 1)"),
    ("(6,2,1)", f"-((-2*(y - b)*a/y^3 + a/y^2 + x)*{_VDW_LOG})/(gamma - 1)"),
    ("(7,1,2)", f"y - (y - b)*{_VDW_LOG}/(gamma - 1)"),
    ("(7,2,1)", _VDW_F2G2),
    ("(8,1,2)", "(y - b)/(gamma - 1)"),
    ("(8,2,1)", f"{_VDW_F2G2} - x"),
]

_FEYN_LOG = "ln(x*y^gamma(x*y))"
_FEYN_FG1 = "phi(x*y)*(y^gamma(x*y) + x*ln(y)*gamma'(x*y)*y^(gamma(x*y) + 1))*y^(-gamma(x*y))/x"
_FEYNMAN = [
    ("(5,1,2)", f"y - y*{_FEYN_LOG}*phi'(x*y)"),
    ("(5,2,1)", f"-x*{_FEYN_LOG}*phi'(x*y)"),
    ("(6,1,2)", f"{_FEYN_FG1} + y"),
    ("(6,2,1)", "phi(x*y)*(gamma(x*y)/y + x*ln(y)*gamma'(x*y))"),
    ("(7,1,2)", f"-y*{_FEYN_LOG}*phi'(x*y)"),
    ("(7,2,1)", f"-{_FEYN_LOG}*phi'(x*y)*x - x"),
    ("(8,2,1)", _FEYN_FG1),
    ("(8,2,1)", "phi(x*y)*(gamma(x*y)/y + x*ln(y)*gamma'(x*y)) - x"),
]

_GENERIC_TRIPLES = [
    ("(3,1,2)", "f_1"), ("(3,2,1)", "f_2"), ("(4,1,2)", "g_1"), ("(4,2,1)", "g_2"),
    ("(1,3,4)", "g_2"), ("(2,3,4)", "-g_1"), ("(1,4,3)", "-f_2"), ("(2,4,3)", "f_1"),
    ("(3,4,1)", "f_2/g_2"), ("(2,4,1)", "1/g_2"), ("(3,1,4)", "1/g_2"), ("(2,1,4)", "-g_1/g_2"),
    ("(4,3,1)", "g_2/f_2"), ("(2,3,1)", "1/f_2"), ("(4,1,3)", "1/f_2"), ("(2,1,3)", "-f_1/f_2"),
    ("(3,4,2)", "f_1/g_1"), ("(1,4,2)", "1/g_1"), ("(3,2,4)", "-1/g_1"), ("(1,2,4)", "-g_2/g_1"),
    ("(4,3,2)", "g_1/f_1"), ("(1,3,2)", "1/f_1"), ("(4,2,3)", "1/f_1"), ("(1,2,3)", "-f_2/f_1"),
    # the worked basic formulae
    ("(4,3,1)", "g_2/f_2"), ("(4,1,3)", "-1/f_2"), ("(2,3,1)", "1/f_2"), ("(2,1,3)", "1/f_2"),
]

_GENERIC_SECOND = [
    ("((3,1,2),2,1)", "f_12"),
    ("((5,1,2),1,2)", "-g_1*f_1 - g*f_11"),
    ("((5,1,2),2,1)", "1 - g_2*f_1 - g*f_12"),
    ("((5,2,1),1,2)", "-g_1*f_2 - g*f_12"),
    ("((5,2,1),2,1)", "-g_2*f_2 - g*f_22"),
    ("((6,1,2),1,2)", "f_1*g_1 + f*g_11"),
    ("((6,1,2),2,1)", "1 + f_2*g_1 + f*g_12"),
    ("((6,2,1),1,2)", "f_1*g_2 + f*g_12"),
    ("((6,2,1),2,1)", "g_2*f_2 + f*g_22"),
    ("((7,1,2),1,2)", "-g_1*f_1 - g*f_11"),
    ("((7,1,2),2,1)", "-g_2*f_1 - g*f_12"),
    ("((7,2,1),1,2)", "-1 - g_1*f_2 - g*f_12"),
    ("((7,2,1),2,1)", "-g_2*f_2 - g*f_22"),
    ("((8,1,2),1,2)", "g_1*f_1 - f*g_11"),
    ("((8,1,2),2,1)", "g_1*f_2 + f*g_12"),
    ("((8,2,1),1,2)", "-1 + f_1*g_2 + f*g_12"),
    ("((8,2,1),2,1)", "-g_2*f_2 + f*g_22"),
]

# energy differentials as printed, in terms of u = f, v = g
_GENERIC_ENERGY = [
    ("E13:dx", "y - g*f_1"), ("E13:dy", "-f_2*g"),
    ("E14:dx", "f*f_1 + y"), ("E14:dy", "f*f_2"),
    ("E23:dx", "-g*f_1"), ("E23:dy", "x - g*f_2"),
    ("E24:dx", "f*f_1"), ("E24:dy", "f*f_2 - x"),
]

FIXTURES: list[Fixture] = (
    _f("ideal", "first", _IDEAL)
    + _f("generalized", "first", _GENERALIZED,
         typos={("(8,1,2)", 1), ("(8,2,1)", 1)},
         notes={("(8,1,2)", 1): "x and y exchanged", ("(8,2,1)", 1): "x and y exchanged"})
    + _f("vdw", "first", _VDW,
         typos={("(5,1,2)", 1), ("(6,1,2)", 1), ("(6,2,1)", 1), ("(7,1,2)", 1), ("(7,2,1)", 1)},
         notes={("(5,1,2)", 1): "printed value equals (8,1,2)",
                ("(6,1,2)", 1): "printed value is the correct (5,1,2)",
                ("(6,2,1)", 1): "printed value equals (5,2,1)",
                ("(7,1,2)", 1): "printed value is the correct (5,1,2)",
                ("(7,2,1)", 1): "printed value is the correct (6,2,1)"})
    + _f("feynman", "first", _FEYNMAN, typos={("(8,2,1)", 1)},
         notes={("(8,2,1)", 1): "label printed twice; this value is (8,1,2)"})
    + _f("generic", "triple", _GENERIC_TRIPLES,
         typos={("(4,1,3)", 1), ("(2,1,3)", 2)},
         notes={("(4,1,3)", 1): "sign: the reduction gives -1/f_2",
                ("(2,1,3)", 2): "the reduction gives -f_1/f_2"})
    + _f("generic", "second", _GENERIC_SECOND,
         typos={("((8,1,2),1,2)", 1), ("((8,2,1),2,1)", 1)},
         notes={("((8,1,2),1,2)", 1): "direct differentiation of f g_1 gives f_1 g_1 + f g_11",
                ("((8,2,1),2,1)", 1): "direct differentiation of f g_2 - x gives f_2 g_2 + f g_22"})
    + _f("generic", "energy", _GENERIC_ENERGY,
         typos={("E14:dx", 1), ("E14:dy", 1), ("E23:dy", 1), ("E24:dx", 1), ("E24:dy", 1)},
         notes={("E14:dx", 1): "u dv + y dx expands to (y + f g_1) dx",
                ("E14:dy", 1): "u dv + y dx expands to f g_2 dy",
                ("E23:dy", 1): "-v du - x dy expands to (-x - g f_2) dy",
                ("E24:dx", 1): "u dv - x dy expands to f g_1 dx",
                ("E24:dy", 1): "u dv - x dy expands to (f g_2 - x) dy"})
)


def fixtures_for(model: str) -> list[Fixture]:
    return [fx for fx in FIXTURES if fx.model == model]


@dataclass
class FixtureResult:
    fixture: Fixture
    status: str                  # "match-symbolic", "match-numeric" or "mismatch"
    engine: Expr
    printed: Expr
    residual: float | None = None
    matches_entry: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        """A result is acceptable when it matches, or is a documented misprint."""
        return self.status != "mismatch" or self.fixture.known_typo

    def to_dict(self) -> dict:
        fx = self.fixture
        out = {
            "entry": fx.label,
            "occurrence": fx.occurrence,
            "kind": fx.kind,
            "status": self.status,
            "printed": to_text(self.printed),
            "engine": to_text(together(self.engine)),
            "known_typo": fx.known_typo,
        }
        if self.status == "mismatch":
            out["correction"] = out["engine"]
            if self.matches_entry:
                out["matches_entry"] = self.matches_entry
            if fx.note:
                out["note"] = fx.note
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def _engine_value(fx: Fixture, t: PrimitiveTable) -> Expr:
    from .bracket import parse_second, parse_triple
    if fx.kind in ("first", "triple"):
        return triple_reduce(parse_triple(fx.label), t)
    if fx.kind == "second":
        tr, d, e = parse_second(fx.label)
        return second_reduce(tr, d, e, t)
    name, part = fx.label.split(":")
    dx, dy = energy_differential(name, t)
    return dx if part == "dx" else dy


def _functions_for(model: GasModel | None) -> dict:
    if model is None:
        return {}
    out = {}
    for name in ("phi", "gamma"):
        node = _find_fn(model.u, name) or _find_fn(model.v, name)
        if node is not None:
            out[name] = node.rule
    return out


def _find_fn(e: Expr, name: str):
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Fn) and n.name == name:
            return n
        stack.extend(n.children)
    return None


def _compare(a: Expr, b: Expr, t: PrimitiveTable, model: GasModel | None, samples: int):
    if model is None:
        from .bracket import impose_unit_jacobian
        from .symcore import is_zero
        diff = impose_unit_jacobian(a - b) if t.impose else a - b
        return ("match-symbolic", 0.0) if is_zero(diff) else ("mismatch", None)
    v = equivalent(a, b, model.box, model.params, model.functions, tol=1e-9,
                   samples=samples, positive=model.positive)
    if v.kind == PROVED:
        return "match-symbolic", 0.0
    if v.kind == VERIFIED:
        return "match-numeric", v.residual
    return "mismatch", v.residual


def check_fixtures(model_name: str, samples: int = 20) -> list[FixtureResult]:
    """Regenerate and compare every fixture of one model ("generic" for the abstract tables)."""
    if model_name == "generic":
        model = None
        t = generic_table(True)
    else:
        model = get_model(model_name)
        t = primitive_table(model)
    functions = _functions_for(model)
    results = []
    for fx in fixtures_for(model_name):
        printed = parse_expr(fx.text, functions)
        engine = _engine_value(fx, t)
        status, residual = _compare(engine, printed, t, model, samples)
        res = FixtureResult(fx, status, engine, printed, residual)
        if status == "mismatch" and fx.kind in ("first", "triple"):
            res.matches_entry = _find_matching_entry(printed, t, model, samples, fx.kind)
        results.append(res)
    return results


def _find_matching_entry(printed: Expr, t: PrimitiveTable, model, samples: int, kind: str):
    from .bracket import DegenerateBracket
    candidates = ([(i, j, k) for i in range(1, 9) for (j, k) in ((1, 2), (2, 1))]
                  if kind == "first" else all_triples())
    for tr in candidates:
        try:
            val = triple_reduce(tr, t)
        except DegenerateBracket:
            continue
        if _compare(val, printed, t, model, samples)[0] != "mismatch":
            return "({},{},{})".format(*tr)
    return None
