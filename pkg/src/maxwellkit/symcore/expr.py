"""Immutable expression trees.

Nodes hash once at construction and compare structurally, so they can be
used as dictionary keys and memoisation keys throughout the engine.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable

__all__ = [
    "Expr", "Num", "Var", "Param", "Sum", "Product", "Power", "Ln", "Exp",
    "Fn", "Field", "EULER", "as_expr", "X", "Y", "T", "ZERO", "ONE",
    "free_symbols", "contains",
]


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite literal")
        # shortest repr keeps 1.4 as 7/5 instead of its binary expansion
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot make a literal from {value!r}")


def as_expr(value) -> "Expr":
    if isinstance(value, Expr):
        return value
    return Num(_to_fraction(value))


class Expr:
    __slots__ = ("_hash",)

    def _args(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._args() == other._args()

    def __ne__(self, other) -> bool:
        return not self == other

    def __repr__(self) -> str:
        from .printing import to_text
        return f"<{type(self).__name__} {to_text(self)}>"

    def __str__(self) -> str:
        from .printing import to_text
        return to_text(self)

    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    # arithmetic builds raw trees; normalize() does the simplification
    def __add__(self, other):
        return Sum((self, as_expr(other)))

    def __radd__(self, other):
        return Sum((as_expr(other), self))

    def __sub__(self, other):
        return Sum((self, Product((Num(-1), as_expr(other)))))

    def __rsub__(self, other):
        return Sum((as_expr(other), Product((Num(-1), self))))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __truediv__(self, other):
        return Product((self, Power(as_expr(other), Num(-1))))

    def __rtruediv__(self, other):
        return Product((as_expr(other), Power(self, Num(-1))))

    def __pow__(self, other):
        return Power(self, as_expr(other))

    def __rpow__(self, other):
        return Power(as_expr(other), self)

    def __neg__(self):
        return Product((Num(-1), self))


class Num(Expr):
    """Exact rational literal."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = _to_fraction(value)
        self._hash = hash(("Num", self.value))

    def _args(self):
        return (self.value,)


class _Named(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash((type(self).__name__, name))

    def _args(self):
        return (self.name,)


class Var(_Named):
    """A differentiation variable: the coordinates x, y, or a dummy like t."""

    __slots__ = ()


class Param(_Named):
    """A named model constant such as gamma, a or b."""

    __slots__ = ()


class _Euler(Expr):
    __slots__ = ()

    def __init__(self):
        self._hash = hash("EulerE")

    def _args(self):
        return ()


EULER = _Euler()


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        flat = []
        for t in terms:
            t = as_expr(t)
            if isinstance(t, Sum):
                flat.extend(t.terms)
            else:
                flat.append(t)
        self.terms = tuple(flat)
        self._hash = hash(("Sum", self.terms))

    def _args(self):
        return self.terms

    @property
    def children(self):
        return self.terms


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        flat = []
        for f in factors:
            f = as_expr(f)
            if isinstance(f, Product):
                flat.extend(f.factors)
            else:
                flat.append(f)
        self.factors = tuple(flat)
        self._hash = hash(("Product", self.factors))

    def _args(self):
        return self.factors

    @property
    def children(self):
        return self.factors


class Power(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Expr):
        self.base = as_expr(base)
        self.exponent = as_expr(exponent)
        self._hash = hash(("Power", self.base, self.exponent))

    def _args(self):
        return (self.base, self.exponent)

    @property
    def children(self):
        return (self.base, self.exponent)


class Ln(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = as_expr(arg)
        self._hash = hash(("Ln", self.arg))

    def _args(self):
        return (self.arg,)

    @property
    def children(self):
        return (self.arg,)


class Exp(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = as_expr(arg)
        self._hash = hash(("Exp", self.arg))

    def _args(self):
        return (self.arg,)

    @property
    def children(self):
        return (self.arg,)


class Fn(Expr):
    """Abstract one-variable function applied to ``arg``, differentiated ``order`` times.

    ``rule`` optionally defines the first derivative as an expression in the
    dummy variable ``t``; such a function is a named primitive of ``rule``.
    """

    __slots__ = ("name", "order", "arg", "rule")

    def __init__(self, name: str, order: int, arg: Expr, rule: Expr | None = None):
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        self.name = name
        self.order = int(order)
        self.arg = as_expr(arg)
        self.rule = rule
        self._hash = hash(("Fn", name, self.order, self.arg, rule))

    def _args(self):
        return (self.name, self.order, self.arg, self.rule)

    @property
    def children(self):
        return (self.arg,)

    def derivative(self, k: int = 1) -> "Fn":
        return Fn(self.name, self.order + k, self.arg, self.rule)


class Field(Expr):
    """Abstract function of (x, y) with ``nx`` x-derivatives and ``ny`` y-derivatives."""

    __slots__ = ("name", "nx", "ny")

    def __init__(self, name: str, nx: int = 0, ny: int = 0):
        self.name = name
        self.nx = int(nx)
        self.ny = int(ny)
        self._hash = hash(("Field", name, self.nx, self.ny))

    def _args(self):
        return (self.name, self.nx, self.ny)


X = Var("x")
Y = Var("y")
T = Var("t")
ZERO = Num(0)
ONE = Num(1)


def free_symbols(e: Expr) -> set[Expr]:
    """Var, Param, Field and Fn-name leaves reachable from ``e`` (rules excluded)."""
    out: set[Expr] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, (Var, Param, Field)):
            out.add(node)
        elif isinstance(node, Fn):
            out.add(Fn(node.name, 0, T, node.rule))
            stack.append(node.arg)
        else:
            stack.extend(node.children)
    return out


def contains(e: Expr, target: Expr) -> bool:
    stack = [e]
    while stack:
        node = stack.pop()
        if node == target:
            return True
        stack.extend(node.children)
    return False
