"""Plain-text and LaTeX printers.

The plain-text form is accepted back by :func:`maxwellkit.symcore.parse.parse_expr`.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import EULER, Exp, Expr, Field, Fn, Ln, Num, Param, Power, Product, Sum, Var

__all__ = ["to_text", "to_latex", "field_name"]

_SUM, _MUL, _POW, _ATOM = 1, 2, 3, 4

_GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "kappa",
    "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "phi", "chi", "psi", "omega",
}


def field_name(e: Field) -> str:
    if not (e.nx or e.ny):
        return e.name
    return f"{e.name}_{'1' * e.nx}{'2' * e.ny}"


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Num):
        return e.value < 0
    if isinstance(e, Product) and e.factors and isinstance(e.factors[0], Num):
        return e.factors[0].value < 0
    return False


def _negate(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    lead = e.factors[0].value
    rest = e.factors[1:]
    if lead == -1:
        return rest[0] if len(rest) == 1 else Product(rest)
    return Product((Num(-lead),) + rest)


def _split_product(e: Product):
    """(coefficient, numerator factors, denominator factors as (base, positive exponent))."""
    coeff = Fraction(1)
    num: list = []
    den: list = []
    for f in e.factors:
        if isinstance(f, Num):
            coeff *= f.value
        elif (isinstance(f, Power) and isinstance(f.exponent, Num)
              and f.exponent.value < 0):
            k = -f.exponent.value
            den.append(f.base if k == 1 else Power(f.base, Num(k)))
        else:
            num.append(f)
    return coeff, num, den


class _Printer:
    latex = False

    def render(self, e: Expr) -> str:
        return self.go(e)[0]

    def wrap(self, e: Expr, min_prec: int) -> str:
        s, p = self.go(e)
        return s if p >= min_prec else self.paren(s)

    def paren(self, s: str) -> str:
        return f"\\left({s}\\right)" if self.latex else f"({s})"

    def go(self, e: Expr):
        if isinstance(e, Num):
            return self.number(e.value)
        if isinstance(e, Var):
            return e.name, _ATOM
        if isinstance(e, Param):
            return self.name(e.name), _ATOM
        if isinstance(e, Field):
            return self.field(e), _ATOM
        if e is EULER:
            return ("e" if self.latex else "exp(1)"), _ATOM
        if isinstance(e, Sum):
            return self.sum(e)
        if isinstance(e, Product):
            return self.product(e)
        if isinstance(e, Power):
            if isinstance(e.exponent, Num) and e.exponent.value < 0:
                return self.product(Product((e,)))
            return self.power(e)
        if isinstance(e, Ln):
            return self.call("ln", e.arg), _ATOM
        if isinstance(e, Exp):
            return self.exp(e)
        if isinstance(e, Fn):
            return self.fn(e), _ATOM
        raise TypeError(f"cannot print {type(e).__name__}")

    # plain text ---------------------------------------------------------
    def number(self, v: Fraction):
        if v < 0:
            s, _ = self.number(-v)
            return "-" + s, _MUL
        if v.denominator == 1:
            return str(v.numerator), _ATOM
        return f"{v.numerator}/{v.denominator}", _MUL

    def name(self, n: str) -> str:
        return n

    def field(self, e: Field) -> str:
        return field_name(e)

    def call(self, fname: str, arg: Expr) -> str:
        return f"{fname}({self.render(arg)})"

    def exp(self, e: Exp):
        return self.call("exp", e.arg), _ATOM

    def fn(self, e: Fn) -> str:
        return f"{e.name}{chr(39) * e.order}({self.render(e.arg)})"

    def sum(self, e: Sum):
        parts = []
        for i, t in enumerate(e.terms):
            if i and _is_negative(t):
                parts.append(" - " + self.wrap(_negate(t), _MUL + 1 if isinstance(t, Num) else _MUL))
            elif i:
                parts.append(" + " + self.wrap(t, _MUL))
            else:
                parts.append(self.wrap(t, _MUL) if not _is_negative(t) else self.go(t)[0])
        return "".join(parts), _SUM

    def join_factors(self, factors: list) -> str:
        return "*".join(self.wrap(f, _POW) for f in factors)

    def product(self, e: Product):
        coeff, num, den = _split_product(e)
        sign = "-" if coeff < 0 else ""
        coeff = abs(coeff)
        top = list(num)
        if coeff.numerator != 1 or not top:
            top.insert(0, Num(coeff.numerator))
        bottom = list(den)
        if coeff.denominator != 1:
            bottom.insert(0, Num(coeff.denominator))
        top_s = self.join_factors(top)
        if not bottom:
            s = top_s
            prec = _MUL if len(top) > 1 or sign else self.go(top[0])[1]
        else:
            if len(bottom) == 1:
                bot_s = self.wrap(bottom[0], _POW)
            else:
                bot_s = self.paren(self.join_factors(bottom))
            s = f"{top_s}/{bot_s}"
            prec = _MUL
        if sign:
            return "-" + s, _MUL
        return s, prec

    def power(self, e: Power):
        base = self.wrap(e.base, _ATOM)
        ex, p = self.go(e.exponent)
        if p < _ATOM or ex.startswith("-"):
            ex = self.paren(ex)
        return f"{base}^{ex}", _POW


class _LatexPrinter(_Printer):
    latex = True

    def number(self, v: Fraction):
        if v < 0:
            s, _ = self.number(-v)
            return "-" + s, _MUL
        if v.denominator == 1:
            return str(v.numerator), _ATOM
        return f"\\frac{{{v.numerator}}}{{{v.denominator}}}", _ATOM

    def name(self, n: str) -> str:
        if n in _GREEK:
            return "\\" + n
        if "_" in n:
            head, tail = n.split("_", 1)
            return f"{self.name(head)}_{{{tail}}}"
        return n

    def field(self, e: Field) -> str:
        if not (e.nx or e.ny):
            return e.name
        return f"{e.name}_{{{'1' * e.nx}{'2' * e.ny}}}"

    def call(self, fname: str, arg: Expr) -> str:
        return f"\\{fname}{self.paren(self.render(arg))}"

    def exp(self, e: Exp):
        return f"e^{{{self.render(e.arg)}}}", _POW

    def fn(self, e: Fn) -> str:
        return f"{self.name(e.name)}{chr(39) * e.order}{self.paren(self.render(e.arg))}"

    def join_factors(self, factors: list) -> str:
        out = ""
        prev_num = False
        for f in factors:
            s = self.wrap(f, _POW)
            if out:
                out += " \\cdot " if prev_num or isinstance(f, Num) else " "
            out += s
            prev_num = isinstance(f, Num)
        return out

    def product(self, e: Product):
        coeff, num, den = _split_product(e)
        sign = "-" if coeff < 0 else ""
        coeff = abs(coeff)
        top = list(num)
        if coeff.numerator != 1 or not top:
            top.insert(0, Num(coeff.numerator))
        bottom = list(den)
        if coeff.denominator != 1:
            bottom.insert(0, Num(coeff.denominator))
        if bottom:
            part = lambda fs: self.render(fs[0]) if len(fs) == 1 else self.join_factors(fs)
            s = f"\\frac{{{part(top)}}}{{{part(bottom)}}}"
        else:
            s = self.join_factors(top)
        return sign + s, _MUL

    def power(self, e: Power):
        base = self.wrap(e.base, _ATOM)
        if isinstance(e.exponent, Num) and e.exponent.value == Fraction(1, 2):
            return f"\\sqrt{{{self.render(e.base)}}}", _ATOM
        return f"{base}^{{{self.render(e.exponent)}}}", _POW


def to_text(e: Expr) -> str:
    return _Printer().render(e)


def to_latex(e: Expr) -> str:
    return _LatexPrinter().render(e)
