"""Plain-text model files.

A model file is a list of ``key = value`` lines, optionally grouped under
``[params]``, ``[domain]``, ``[functions]`` and ``[constraints]`` headers;
``#`` starts a comment.  See docs/model-file.md for the full grammar::

    name = ideal
    u = x*y
    v = (ln(x) + gamma*ln(y))/(gamma - 1)

    [params]
    gamma = 1.4

    [domain]
    x = [0.5, 5]
    y = [0.5, 5]

The calibration flag is always recomputed, never read from the file.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

from .errors import DomainError, DomainViolation, ParseError, UnboundSymbol
from .models import GasModel, custom_model, numeric_primitive
from .symcore import Box, Evaluator, Expr, Fn, free_symbols, normalize, parse_expr, to_text
from .symcore.expr import Exp, Field, Ln, Param, Power, Product, Sum, Var

__all__ = ["load_model", "load_model_file", "dump_model"]

_SECTIONS = ("params", "domain", "functions", "constraints")
_TOP_KEYS = ("name", "u", "v", "description")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*'?$")
_INTERVAL_RE = re.compile(r"^\[\s*([^,\]]+?)\s*,\s*([^,\]]+?)\s*\]$")
_CONSTRAINT_RE = re.compile(r"(<=|>=|<|>)")


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    offset: int      # absolute position of the value in the text
    key_offset: int


def _split(text: str) -> dict[str, list[_Entry]]:
    sections: dict[str, list[_Entry]] = {"": []}
    current = ""
    pos = 0
    for lineno, raw in enumerate(text.splitlines(keepends=True), 1):
        start = pos
        pos += len(raw)
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        lead = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", text, start + len(line), ["']'"])
            current = stripped[1:-1].strip().lower()
            if current not in _SECTIONS:
                raise ParseError(f"unknown section [{current}]", text, start + lead,
                                 [f"[{s}]" for s in _SECTIONS])
            sections.setdefault(current, [])
            continue
        if current == "constraints":
            sections[current].append(_Entry("", stripped, lineno, start + lead, start + lead))
            continue
        if "=" not in line:
            raise ParseError("expected key = value", text, start + len(line), ["'='"])
        key, _, value = line.partition("=")
        vstart = start + len(key) + 1
        vstart += len(value) - len(value.lstrip())
        key = key.strip()
        if not _NAME_RE.match(key):
            raise ParseError(f"bad key {key!r}", text, start + lead, ["name"])
        entries = sections[current]
        if any(e.key == key for e in entries):
            raise ParseError(f"duplicate key {key!r}", text, start + lead)
        entries.append(_Entry(key, value.strip(), lineno, vstart, start + lead))
    return sections


def _expr(entry: _Entry, text: str, functions=None) -> Expr:
    try:
        return parse_expr(entry.value, functions)
    except ParseError as exc:
        raise ParseError(exc.message, text, entry.offset + exc.pos, exc.expected) from None


def _number(entry: _Entry, value: str, text: str, offset: int | None = None) -> float:
    try:
        out = float(value)
    except ValueError:
        out = None
    if out is None or not math.isfinite(out):
        where = entry.offset if offset is None else offset
        raise ParseError(f"expected a finite number, got {value!r}", text, where, ["number"])
    return out


def _fn_args(e: Expr, name: str, out: list):
    if isinstance(e, Fn):
        if e.name == name:
            out.append(e.arg)
        _fn_args(e.arg, name, out)
    elif isinstance(e, Sum):
        for t in e.terms:
            _fn_args(t, name, out)
    elif isinstance(e, Product):
        for t in e.factors:
            _fn_args(t, name, out)
    elif isinstance(e, Power):
        _fn_args(e.base, name, out)
        _fn_args(e.exponent, name, out)
    elif isinstance(e, (Ln, Exp)):
        _fn_args(e.arg, name, out)
    return out


def load_model(text: str, name: str | None = None) -> GasModel:
    """Parse a model file into a validated :class:`GasModel`."""
    sections = _split(text)
    top = {e.key: e for e in sections[""]}
    for key, e in top.items():
        if key not in _TOP_KEYS:
            raise ParseError(f"unknown key {key!r}", text, e.key_offset, list(_TOP_KEYS))
    for key in ("u", "v"):
        if key not in top:
            raise ParseError(f"missing required key {key!r}", text, len(text), [key])

    params = {e.key: _number(e, e.value, text) for e in sections.get("params", [])}

    # [functions]: "gamma = expr in t" binds a function, "phi' = expr" gives a derivative rule
    rules: dict[str, Expr] = {}
    bindings: dict = {}
    sources: dict[str, str] = {}
    for e in sections.get("functions", []):
        key = "gamma" if e.key == "gamma_fn" else e.key
        if key.endswith("'"):
            rules[key[:-1]] = normalize(_expr(e, text))
        else:
            bindings[key] = _expr(e, text)
            sources[key] = e.value
    for key, expr in bindings.items():
        bad = [s for s in _symbols(expr) if s not in ("t",) and s not in params]
        if bad:
            entry = next(e for e in sections["functions"] if e.key in (key, "gamma_fn"))
            raise ParseError(f"function {key} may only use t and parameters, found {bad[0]}",
                             text, entry.offset)

    u = _expr(top["u"], text, rules)
    v = _expr(top["v"], text, rules)

    bounds = {}
    for e in sections.get("domain", []):
        if e.key not in ("x", "y"):
            raise ParseError(f"unknown domain variable {e.key!r}", text, e.key_offset, ["x", "y"])
        m = _INTERVAL_RE.match(e.value)
        if not m:
            raise ParseError("expected an interval [lo, hi]", text, e.offset, ["'['"])
        lo = _number(e, m.group(1), text, e.offset + m.start(1))
        hi = _number(e, m.group(2), text, e.offset + m.start(2))
        bounds[e.key] = (lo, hi)
    for var in ("x", "y"):
        if var not in bounds:
            raise ParseError(f"missing domain interval for {var}", text, len(text), [var])
    box = Box(bounds["x"][0], bounds["x"][1], bounds["y"][0], bounds["y"][1])

    for e in sections.get("constraints", []):
        _check_constraint(e, text, box, params)

    for fname, rule in rules.items():
        if fname in bindings:
            continue
        args = _fn_args(u, fname, []) + _fn_args(v, fname, [])
        if not args:
            continue
        cx, cy = box.center
        try:
            anchor = float(Evaluator(cx, cy, params, bindings)(args[0]))
        except (DomainViolation, UnboundSymbol) as exc:
            raise DomainError(f"cannot anchor the primitive of {fname}: {exc}") from None
        bindings[fname] = numeric_primitive(rule, anchor, params, dict(bindings))
        sources[fname] = f"quadrature primitive of {to_text(rule)} from t = {anchor:g}"

    label = name or (top["name"].value if "name" in top else "custom")
    model = custom_model(label, u, v, params, box, bindings, sources, origin="file")
    if "description" in top:
        model = replace(model, description=top["description"].value)
    return model


def _symbols(e: Expr) -> set[str]:
    return {s.name for s in free_symbols(e) if isinstance(s, (Var, Param, Field))}


def _check_constraint(e: _Entry, text: str, box: Box, params: dict) -> None:
    parts = _CONSTRAINT_RE.split(e.value)
    if len(parts) != 3:
        raise ParseError("expected a constraint 'lhs < rhs'", text, e.offset, ["<", ">", "<=", ">="])
    lhs_s, op, rhs_s = parts
    lhs = _expr(_Entry("", lhs_s, e.line, e.offset, e.offset), text)
    rhs_off = e.offset + len(lhs_s) + len(op)
    rhs = _expr(_Entry("", rhs_s, e.line, rhs_off, rhs_off), text)
    for x, y in box.corners:
        ev = Evaluator(x, y, params)
        try:
            a, b = float(ev(lhs)), float(ev(rhs))
        except (DomainViolation, UnboundSymbol) as exc:
            raise DomainError(f"constraint {e.value!r} cannot be evaluated: {exc}") from None
        ok = {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]
        if not ok:
            raise DomainError(f"domain box violates constraint {e.value!r} at ({x}, {y})")


def load_model_file(path) -> GasModel:
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


def _fn_rules(e: Expr, out: dict) -> dict:
    if isinstance(e, Fn):
        if e.rule is not None:
            out.setdefault(e.name, e.rule)
        _fn_rules(e.arg, out)
    elif isinstance(e, Sum):
        for t in e.terms:
            _fn_rules(t, out)
    elif isinstance(e, Product):
        for t in e.factors:
            _fn_rules(t, out)
    elif isinstance(e, Power):
        _fn_rules(e.base, out)
        _fn_rules(e.exponent, out)
    elif isinstance(e, (Ln, Exp)):
        _fn_rules(e.arg, out)
    return out


def dump_model(m: GasModel) -> str:
    """Serialize a model; ``load_model(dump_model(m))`` rebuilds an equivalent model."""
    lines = [f"name = {m.name}", f"u = {to_text(m.u)}", f"v = {to_text(m.v)}"]
    if m.description:
        lines.append(f"description = {m.description}")
    if m.params:
        lines += ["", "[params]"] + [f"{k} = {float(v)!r}" for k, v in m.params.items()]
    b = m.box
    lines += ["", "[domain]", f"x = [{b.xlo!r}, {b.xhi!r}]", f"y = [{b.ylo!r}, {b.yhi!r}]"]
    rules = _fn_rules(m.u, {})
    _fn_rules(m.v, rules)
    fn_lines = []
    for fname, binding in m.functions.items():
        if isinstance(binding, Expr):
            fn_lines.append(f"{fname} = {to_text(binding)}")
    for fname, rule in rules.items():
        fn_lines.append(f"{fname}' = {to_text(rule)}")
    if fn_lines:
        lines += ["", "[functions]"] + fn_lines
    return "\n".join(lines) + "\n"
