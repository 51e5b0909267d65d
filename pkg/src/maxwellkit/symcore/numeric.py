"""Numeric evaluation of expression trees and quasi-random sampling of boxes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from scipy.stats import qmc

from ..errors import DomainError, DomainViolation, UnboundSymbol
from .expr import EULER, Exp, Expr, Field, Fn, Ln, Num, Param, Power, Product, Sum, T, Var

__all__ = ["Point", "Box", "FnBinding", "evaluate", "evaluate_array", "Evaluator", "DEFAULT_SEED"]

DEFAULT_SEED = 20240607

# A one-variable function binding: an expression in ``t`` (derivatives by
# symbolic differentiation) or a sequence [F, F', F''] of callables.
FnBinding = Union[Expr, Sequence[Callable], Callable]


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    params: Mapping[str, float] = field(default_factory=dict)
    functions: Mapping[str, FnBinding] = field(default_factory=dict)

    def __post_init__(self):
        for v in (self.x, self.y, *self.params.values()):
            if not math.isfinite(v):
                raise DomainViolation(f"non-finite coordinate or parameter {v!r}")


@dataclass(frozen=True)
class Box:
    xlo: float
    xhi: float
    ylo: float
    yhi: float

    def __post_init__(self):
        if not (self.xlo < self.xhi and self.ylo < self.yhi):
            raise DomainError(f"empty box x∈[{self.xlo}, {self.xhi}], y∈[{self.ylo}, {self.yhi}]")

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xlo + self.xhi), 0.5 * (self.ylo + self.yhi))

    @property
    def corners(self) -> list[tuple[float, float]]:
        return [(self.xlo, self.ylo), (self.xhi, self.ylo), (self.xlo, self.yhi), (self.xhi, self.yhi)]

    def contains(self, x: float, y: float) -> bool:
        return self.xlo <= x <= self.xhi and self.ylo <= y <= self.yhi

    def sample(self, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
        """``n`` scrambled-Halton points inside the box, shape (n, 2)."""
        unit = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
        return qmc.scale(unit, [self.xlo, self.ylo], [self.xhi, self.yhi])

    def as_dict(self) -> dict:
        return {"x": [self.xlo, self.xhi], "y": [self.ylo, self.yhi]}


def _is_scalar(v) -> bool:
    return np.ndim(v) == 0


class Evaluator:
    """Evaluates trees in an environment of coordinates, parameters and functions.

    With ``strict=True`` any domain violation raises; otherwise offending
    entries become NaN (array mode).  Complex inputs are propagated, which is
    what complex-step differentiation needs.
    """

    def __init__(self, x, y, params: Mapping[str, float] | None = None,
                 functions: Mapping[str, FnBinding] | None = None,
                 variables: Mapping[str, object] | None = None,
                 fields: Mapping[Expr, object] | None = None,
                 strict: bool = True):
        self.vars = {"x": x, "y": y}
        if variables:
            self.vars.update(variables)
        self.params = dict(params or {})
        self.functions = dict(functions or {})
        self.fields = dict(fields or {})
        self.strict = strict
        self.memo: dict = {}

    def __call__(self, e: Expr):
        return self.ev(e)

    def _bad(self, mask, what: str):
        if self.strict and np.any(mask):
            raise DomainViolation(what)

    def ev(self, e: Expr):
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        out = self._ev(e)
        self.memo[e] = out
        return out

    def _ev(self, e: Expr):
        if isinstance(e, Num):
            return float(e.value)
        if isinstance(e, Var):
            try:
                return self.vars[e.name]
            except KeyError:
                raise UnboundSymbol(f"variable {e.name} is not bound") from None
        if isinstance(e, Param):
            try:
                return self.params[e.name]
            except KeyError:
                raise UnboundSymbol(f"parameter {e.name} is not bound") from None
        if isinstance(e, Field):
            if e in self.fields:
                return self.fields[e]
            raise UnboundSymbol(f"abstract field {e} has no numeric value")
        if e is EULER:
            return math.e
        if isinstance(e, Sum):
            total = 0.0
            for t in e.terms:
                total = total + self.ev(t)
            return total
        if isinstance(e, Product):
            return self._product(e)
        if isinstance(e, Power):
            return self._power(e)
        if isinstance(e, Ln):
            a = self.ev(e.arg)
            re = np.real(a)
            bad = np.logical_not(re > 0)
            self._bad(bad, f"logarithm of a nonpositive value in {e}")
            with np.errstate(all="ignore"):
                out = np.log(a)
            return self._mask(out, bad)
        if isinstance(e, Exp):
            with np.errstate(all="ignore"):
                out = np.exp(self.ev(e.arg))
            self._bad(np.logical_not(np.isfinite(out)), f"overflow in {e}")
            return out
        if isinstance(e, Fn):
            return self._fn(e)
        raise TypeError(f"cannot evaluate {type(e).__name__}")

    @staticmethod
    def _mask(out, bad):
        if _is_scalar(out):
            return float("nan") if bool(bad) else out
        if np.any(bad):
            out = np.array(out, dtype=np.result_type(out, float))
            out[np.broadcast_to(bad, out.shape)] = np.nan
        return out

    def _product(self, e: Product):
        num = 1.0
        for f in e.factors:
            if isinstance(f, Power) and isinstance(f.exponent, Num) and f.exponent.value < 0:
                b = self.ev(f.base)
                bad = np.abs(b) == 0
                self._bad(bad, f"division by zero in {e}")
                with np.errstate(all="ignore"):
                    num = num * self._pow_values(b, f.exponent.value, f)
                num = self._mask(num, bad)
            else:
                num = num * self.ev(f)
        return num

    def _pow_values(self, b, k, node):
        if isinstance(k, Fraction):
            if k.denominator == 1:
                return b ** int(k)
            if not np.iscomplexobj(b):
                bad = b < 0
                self._bad(bad, f"fractional power of a negative value in {node}")
                with np.errstate(all="ignore"):
                    return self._mask(np.power(np.abs(b), float(k)), bad)
            return np.power(b, float(k))
        re = np.real(b)
        bad = np.logical_not(re > 0)
        self._bad(bad, f"non-constant power of a nonpositive base in {node}")
        with np.errstate(all="ignore"):
            return self._mask(np.exp(k * np.log(b)), bad)

    def _power(self, e: Power):
        b = self.ev(e.base)
        if isinstance(e.exponent, Num):
            k = e.exponent.value
            if k < 0:
                bad = np.abs(b) == 0
                self._bad(bad, f"division by zero in {e}")
                with np.errstate(all="ignore"):
                    return self._mask(self._pow_values(b, k, e), bad)
            return self._pow_values(b, k, e)
        return self._pow_values(b, self.ev(e.exponent), e)

    def _fn(self, e: Fn):
        binding = self.functions.get(e.name)
        if binding is None and e.rule is not None and e.order >= 1:
            from .calculus import _nth_rule_derivative, substitute
            body = _nth_rule_derivative(e.rule, e.order - 1)
            return self.ev(substitute(body, T, e.arg))
        if binding is None:
            raise UnboundSymbol(f"function {e.name} is not bound")
        arg = self.ev(e.arg)
        if isinstance(binding, Expr):
            from .calculus import _nth_rule_derivative
            body = _nth_rule_derivative(binding, e.order)
            sub = Evaluator(0.0, 0.0, self.params, self.functions, {"t": arg},
                            strict=self.strict)
            return sub.ev(body)
        if callable(binding):
            binding = [binding]
        if e.order >= len(binding):
            raise UnboundSymbol(f"derivative of order {e.order} of {e.name} is not bound")
        return binding[e.order](arg)


def evaluate(e: Expr, p: Point) -> float:
    """IEEE double value of ``e`` at ``p``; raises DomainViolation outside the domain."""
    v = Evaluator(p.x, p.y, p.params, p.functions).ev(e)
    v = complex(v) if np.iscomplexobj(v) else float(v)
    if isinstance(v, complex):
        if v.imag != 0:
            raise DomainViolation(f"complex value in {e}")
        v = v.real
    if not math.isfinite(v):
        raise DomainViolation(f"non-finite value of {e}")
    return v


def evaluate_array(e: Expr, xs, ys, params: Mapping[str, float] | None = None,
                   functions: Mapping[str, FnBinding] | None = None) -> np.ndarray:
    """Vectorised evaluation; points outside the domain give NaN."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    with np.errstate(all="ignore"):
        v = Evaluator(xs, ys, params, functions, strict=False).ev(e)
    return np.broadcast_to(np.asarray(v, dtype=float), np.broadcast(xs, ys).shape).copy()
