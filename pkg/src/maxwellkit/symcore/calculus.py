"""Symbolic differentiation and substitution."""
from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from .expr import (
    EULER, Exp, Expr, Field, Fn, Ln, Num, ONE, Param, Power, Product, Sum, T,
    Var, ZERO, as_expr,
)

__all__ = ["diff", "raw_diff", "substitute", "substitute_many", "depends_on", "grad"]


@lru_cache(maxsize=None)
def depends_on(e: Expr, var: Var) -> bool:
    if isinstance(e, Var):
        return e == var
    if isinstance(e, Field):
        return var.name in ("x", "y")
    return any(depends_on(c, var) for c in e.children)


def _mul(*fs: Expr) -> Expr:
    out = []
    for f in fs:
        if f == ZERO:
            return ZERO
        if f != ONE:
            out.append(f)
    if not out:
        return ONE
    return out[0] if len(out) == 1 else Product(out)


def _add(terms) -> Expr:
    terms = [t for t in terms if t != ZERO]
    if not terms:
        return ZERO
    return terms[0] if len(terms) == 1 else Sum(terms)


@lru_cache(maxsize=None)
def raw_diff(e: Expr, var: Var) -> Expr:
    """Unsimplified partial derivative (zero and unit factors pruned)."""
    if not depends_on(e, var):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Field):
        if var.name == "x":
            return Field(e.name, e.nx + 1, e.ny)
        return Field(e.name, e.nx, e.ny + 1)
    if isinstance(e, Sum):
        return _add(raw_diff(t, var) for t in e.terms)
    if isinstance(e, Product):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            d = raw_diff(f, var)
            if d != ZERO:
                terms.append(_mul(*fs[:i], d, *fs[i + 1:]))
        return _add(terms)
    if isinstance(e, Power):
        b, k = e.base, e.exponent
        db = raw_diff(b, var)
        dk = raw_diff(k, var)
        if dk == ZERO:
            lowered = Num(k.value - 1) if isinstance(k, Num) else Sum((k, Num(-1)))
            if lowered == ZERO:
                return _mul(k, db)
            return _mul(k, Power(b, lowered), db)
        if db == ZERO:
            return _mul(e, Ln(b), dk)
        return _mul(e, _add([_mul(dk, Ln(b)), _mul(k, db, Power(b, Num(-1)))]))
    if isinstance(e, Ln):
        return _mul(raw_diff(e.arg, var), Power(e.arg, Num(-1)))
    if isinstance(e, Exp):
        return _mul(e, raw_diff(e.arg, var))
    if isinstance(e, Fn):
        return _mul(e.derivative(1), raw_diff(e.arg, var))
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def diff(e: Expr, var: Var, positive: bool = False) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var``, normalized."""
    from .normal import normalize
    return normalize(raw_diff(e, var), positive)


def grad(e: Expr, positive: bool = False) -> tuple[Expr, Expr]:
    from .expr import X, Y
    return diff(e, X, positive), diff(e, Y, positive)


def _nth_rule_derivative(rule: Expr, k: int) -> Expr:
    d = rule
    for _ in range(k):
        d = raw_diff(d, T)
    return d


def substitute_many(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Simultaneous, capture-free replacement.

    Keys may be variables, parameters, fields or abstract functions.  A key
    ``Fn(name, 0, t)`` replaces every application of ``name`` (and its
    derivatives) by the replacement read as a function of ``t``; rules of
    other functions that mention ``name`` are rewritten too.
    """
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    fn_map = {k.name: v for k, v in mapping.items() if isinstance(k, Fn)}
    plain = {k: v for k, v in mapping.items() if not isinstance(k, Fn)}
    memo: dict = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if node in plain:
            out = plain[node]
        elif isinstance(node, (Num, Var, Param, Field)) or node is EULER:
            out = node
        elif isinstance(node, Sum):
            out = Sum([go(t) for t in node.terms])
        elif isinstance(node, Product):
            out = Product([go(f) for f in node.factors])
        elif isinstance(node, Power):
            out = Power(go(node.base), go(node.exponent))
        elif isinstance(node, Ln):
            out = Ln(go(node.arg))
        elif isinstance(node, Exp):
            out = Exp(go(node.arg))
        elif isinstance(node, Fn):
            arg = go(node.arg)
            if node.name in fn_map:
                body = _nth_rule_derivative(fn_map[node.name], node.order)
                out = substitute_many(body, {T: arg}) if arg != T else body
            else:
                rule = node.rule
                inner = {k: v for k, v in plain.items() if isinstance(k, Param)}
                inner.update({Fn(n, 0, T): v for n, v in fn_map.items()})
                if rule is not None and inner:
                    rule = substitute_many(rule, inner)
                out = Fn(node.name, node.order, arg, rule)
        else:
            raise TypeError(f"cannot substitute into {type(node).__name__}")
        memo[node] = out
        return out

    return go(as_expr(e))


def substitute(e: Expr, target: Expr, replacement) -> Expr:
    """Replace every occurrence of ``target`` in ``e`` by ``replacement``."""
    return substitute_many(e, {target: replacement})
