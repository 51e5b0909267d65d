"""Rational-function normal form.

An expression is represented as ``num / prod(P_i ** k_i)`` where ``num`` is a
generalised polynomial and each ``P_i`` is a primitive multi-term polynomial.
Monomials are products of *atoms* raised to exponents; exponents are exact
rationals or (canonical) symbolic expressions, so ``x**a * x**(1 - a)``
collapses to ``x``.  Atoms are coordinates, parameters, abstract functions,
logarithms, Euler's ``e`` (carrying ``exp``), primes (for surds such as
``2**(1/2)``) and, for non-integer powers, multi-term bases.

Zero testing is exact over the free algebra generated by the atoms: a
rational function is zero iff its numerator has no terms.  Cancellation of
common factors is attempted by exact polynomial division and is only needed
for a tidy, idempotent output.

``positive=True`` declares every atom positive, which enables
``ln(a*b) -> ln(a) + ln(b)`` and ``(a*b)**r -> a**r * b**r``.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from math import floor, gcd

from .expr import (
    EULER, Exp, Expr, Field, Fn, Ln, Num, ONE, Param, Power, Product, Sum,
    T, Var, ZERO,
)

__all__ = ["normalize", "is_zero", "atom_key", "together", "work_budget", "BudgetExceeded"]

_DIV_STEP_CAP = 4000


class BudgetExceeded(RuntimeError):
    """Raised inside :func:`work_budget` when normalization does too much work."""


_BUDGET = threading.local()


@contextmanager
def work_budget(terms: int):
    """Abort normalization (BudgetExceeded) after about ``terms`` monomial products.

    The count is deterministic, unlike a wall-clock limit.
    """
    prev = getattr(_BUDGET, "left", None)
    _BUDGET.left = terms if prev is None else min(prev, terms)
    try:
        yield
    finally:
        _BUDGET.left = prev


def _spend(n: int) -> None:
    left = getattr(_BUDGET, "left", None)
    if left is not None:
        left -= n
        _BUDGET.left = left
        if left < 0:
            raise BudgetExceeded("normalization work budget exhausted")


# ---------------------------------------------------------------- ordering

_VAR_ORDER = {"x": 0, "y": 1}


@lru_cache(maxsize=None)
def atom_key(e: Expr) -> tuple:
    if isinstance(e, Var):
        return (0, (_VAR_ORDER.get(e.name, 2), e.name))
    if isinstance(e, Field):
        return (1, (e.name, e.nx + e.ny, e.ny))
    if isinstance(e, Fn):
        return (2, (e.name, e.order, atom_key(e.arg),
                    atom_key(e.rule) if e.rule is not None else ()))
    if isinstance(e, Param):
        return (3, (e.name,))
    if isinstance(e, Ln):
        return (4, (atom_key(e.arg),))
    if e is EULER:
        return (5, ())
    if isinstance(e, Num):
        return (6, (e.value,))
    if isinstance(e, Sum):
        return (7, tuple(atom_key(t) for t in e.terms))
    if isinstance(e, Product):
        return (8, tuple(atom_key(f) for f in e.factors))
    if isinstance(e, Power):
        return (9, (atom_key(e.base), atom_key(e.exponent)))
    if isinstance(e, Exp):
        return (10, (atom_key(e.arg),))
    raise TypeError(f"no ordering for {type(e).__name__}")


def _is_simple(a: Expr) -> bool:
    return isinstance(a, (Var, Param, Field, Fn, Ln)) or a is EULER


def _exp_key(e):
    if isinstance(e, Fraction):
        return (0, e)
    return (1, atom_key(e))


def _exp_cmp(e1, e2) -> int:
    k1, k2 = _exp_key(e1), _exp_key(e2)
    return (k1 > k2) - (k1 < k2)


_ZERO_EXP = Fraction(0)


def _mono_cmp(m1: tuple, m2: tuple) -> int:
    """Dense lexicographic order: atoms in ``atom_key`` order, exponents compared."""
    for (a1, e1), (a2, e2) in zip(m1, m2):
        if a1 == a2:
            c = _exp_cmp(e1, e2)
            if c:
                return c
            continue
        if atom_key(a1) < atom_key(a2):
            return _exp_cmp(e1, _ZERO_EXP)
        return -_exp_cmp(e2, _ZERO_EXP)
    n1, n2 = len(m1), len(m2)
    if n1 > n2:
        return _exp_cmp(m1[n2][1], _ZERO_EXP)
    if n2 > n1:
        return -_exp_cmp(m2[n1][1], _ZERO_EXP)
    return 0


_MONO_KEY = cmp_to_key(_mono_cmp)


def _leading(poly: dict) -> tuple:
    it = iter(poly)
    best = next(it)
    for m in it:
        if _mono_cmp(m, best) > 0:
            best = m
    return best


def _lowest(poly: dict) -> tuple:
    it = iter(poly)
    best = next(it)
    for m in it:
        if _mono_cmp(m, best) < 0:
            best = m
    return best


def _exponent_ranges(poly: dict) -> dict:
    """Per-atom (min, max) exponent over the terms, absent atoms counting as 0."""
    out: dict = {}
    n = len(poly)
    counts: dict = {}
    for m in poly:
        for a, e in m:
            lo, hi = out.get(a, (e, e))
            out[a] = (min(lo, e), max(hi, e))
            counts[a] = counts.get(a, 0) + 1
    for a, c in counts.items():
        if c < n:
            lo, hi = out[a]
            out[a] = (min(lo, 0), max(hi, 0))
    return out


# ------------------------------------------------------------ prime helpers

@lru_cache(maxsize=4096)
def _factor_int(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation of n >= 1 by trial division (large cofactors kept whole)."""
    out = []
    p = 2
    while p * p <= n and p < 100000:
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out.append((p, k))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _factor_fraction(c: Fraction) -> list[tuple[int, int]]:
    """Signed prime exponents of a positive rational."""
    out = [(p, k) for p, k in _factor_int(c.numerator)]
    out += [(p, -k) for p, k in _factor_int(c.denominator)]
    return out


# ------------------------------------------------------------------- Rat

class Rat:
    __slots__ = ("num", "den")

    def __init__(self, num: dict, den: tuple = ()):
        self.num = num      # {monomial: Fraction}
        self.den = den      # ((Sum expr, k), ...) sorted by atom_key

    def is_const(self) -> bool:
        return not self.den and (not self.num or (len(self.num) == 1 and () in self.num))

    @property
    def const(self) -> Fraction:
        return self.num.get((), Fraction(0))

    def is_zero(self) -> bool:
        return not self.num


def _const(c) -> Rat:
    c = Fraction(c)
    return Rat({(): c} if c else {})


_RZERO = Rat({})
_RONE = Rat({(): Fraction(1)})


class _Normalizer:
    def __init__(self, positive: bool):
        self.positive = positive
        self.memo: dict[Expr, Rat] = {}
        self.den_poly: dict[Expr, dict] = {}

    # ---------------------------------------------------------- exponents
    def exp_rat(self, e) -> Rat:
        if isinstance(e, Fraction):
            return _const(e)
        return self.rat(e)

    def rat_to_exp(self, r: Rat):
        if r.is_const():
            return r.const
        return self.to_expr(r)

    def exp_add(self, e1, e2):
        if isinstance(e1, Fraction) and isinstance(e2, Fraction):
            return e1 + e2
        return self.rat_to_exp(self.rsum([self.exp_rat(e1), self.exp_rat(e2)]))

    def exp_mul(self, e1, e2):
        if isinstance(e1, Fraction) and isinstance(e2, Fraction):
            return e1 * e2
        return self.rat_to_exp(self.rprod([self.exp_rat(e1), self.exp_rat(e2)]))

    def exp_neg(self, e):
        if isinstance(e, Fraction):
            return -e
        return self.exp_mul(e, Fraction(-1))

    # ---------------------------------------------------------- monomials
    def mono_mul(self, m1: tuple, m2: tuple) -> tuple:
        if not m1:
            return m2
        if not m2:
            return m1
        out = []
        i = j = 0
        n1, n2 = len(m1), len(m2)
        while i < n1 and j < n2:
            a1, e1 = m1[i]
            a2, e2 = m2[j]
            if a1 == a2:
                e = self.exp_add(e1, e2)
                if not (isinstance(e, Fraction) and e == 0):
                    out.append((a1, e))
                i += 1
                j += 1
            elif atom_key(a1) < atom_key(a2):
                out.append(m1[i])
                i += 1
            else:
                out.append(m2[j])
                j += 1
        out.extend(m1[i:])
        out.extend(m2[j:])
        return tuple(out)

    def mono_inv(self, m: tuple) -> tuple:
        return tuple((a, self.exp_neg(e)) for a, e in m)

    def mono_pow(self, m: tuple, r) -> tuple:
        return tuple((a, self.exp_mul(e, r)) for a, e in m)

    # --------------------------------------------------------- polynomials
    def poly_mul(self, p: dict, q: dict) -> dict:
        if len(p) > len(q):
            p, q = q, p
        _spend(len(p) * len(q))
        out: dict = {}
        for m1, c1 in p.items():
            for m2, c2 in q.items():
                m = self.mono_mul(m1, m2)
                c = out.get(m, 0) + c1 * c2
                if c:
                    out[m] = c
                else:
                    out.pop(m, None)
        return out

    def poly_scale(self, p: dict, c: Fraction, m: tuple = ()) -> dict:
        if not m:
            return {k: v * c for k, v in p.items()}
        return {self.mono_mul(k, m): v * c for k, v in p.items()}

    @staticmethod
    def poly_add_into(acc: dict, p: dict, c: Fraction = Fraction(1)) -> None:
        for m, v in p.items():
            s = acc.get(m, 0) + c * v
            if s:
                acc[m] = s
            else:
                acc.pop(m, None)

    @staticmethod
    def _numeric_only(p: dict) -> bool:
        return all(isinstance(e, Fraction) for m in p for _, e in m)

    def content(self, p: dict):
        """Split p = c * m * prim with prim primitive and positive leading coefficient."""
        monos = list(p)
        if len(monos) == 1:
            m = monos[0]
            return p[m], m, {(): Fraction(1)}
        # monomial content
        seen: dict = {}
        for m in monos:
            for a, e in m:
                seen.setdefault(a, None)
        content_m = []
        for a in seen:
            exps = []
            for m in monos:
                e = next((ee for aa, ee in m if aa == a), _ZERO_EXP)
                exps.append(e)
            if all(isinstance(e, Fraction) for e in exps):
                lo = min(exps)
                if lo:
                    content_m.append((a, lo))
            elif all(e == exps[0] for e in exps):
                content_m.append((a, exps[0]))
        content_m.sort(key=lambda ae: atom_key(ae[0]))
        content_m = tuple(content_m)
        # rational content
        g = 0
        l = 1
        for c in p.values():
            g = gcd(g, c.numerator)
            l = l * c.denominator // gcd(l, c.denominator)
        c = Fraction(g, l)
        lead = _leading(p)
        if p[lead] < 0:
            c = -c
        inv_m = self.mono_inv(content_m)
        prim = {self.mono_mul(m, inv_m): v / c for m, v in p.items()}
        return c, content_m, prim

    def exact_div(self, n: dict, d: dict):
        """Return q with n == q*d, or None."""
        if not n:
            return {}
        if len(d) == 1:
            (m, c), = d.items()
            return self.poly_scale(n, 1 / c, self.mono_inv(m))
        if not (self._numeric_only(n) and self._numeric_only(d)):
            cn, mn, pn = self.content(n)
            cd, md, pd = self.content(d)
            if pn == pd:
                return {self.mono_mul(mn, self.mono_inv(md)): cn / cd}
            return None
        # exponent ranges of a product add atom by atom, which bounds every
        # quotient term and rejects most non-divisors without dividing
        nb, db = _exponent_ranges(n), _exponent_ranges(d)
        qrange = {}
        for a in set(nb) | set(db):
            nlo, nhi = nb.get(a, (0, 0))
            dlo, dhi = db.get(a, (0, 0))
            if nhi - nlo < dhi - dlo:
                return None
            qrange[a] = (nlo - dlo, nhi - dhi)
        lt_d = _leading(d)
        lc_d = d[lt_d]
        inv_lt = self.mono_inv(lt_d)
        r = dict(n)
        q: dict = {}
        steps = 0
        while r:
            steps += 1
            if steps > _DIV_STEP_CAP:
                return None
            _spend(len(d) + len(r))
            lt_r = _leading(r)
            qm = self.mono_mul(lt_r, inv_lt)
            exps = dict(qm)
            for a, (lo, hi) in qrange.items():
                e = exps.get(a, 0)
                if e < lo or e > hi:
                    return None
            if any(a not in qrange for a in exps):
                return None
            qc = r[lt_r] / lc_d
            q[qm] = q.get(qm, 0) + qc
            self.poly_add_into(r, self.poly_scale(d, qc, qm), Fraction(-1))
        return q

    def poly_to_expr(self, p: dict) -> Expr:
        if not p:
            return ZERO
        terms = sorted(p.items(), key=lambda mc: _MONO_KEY(mc[0]), reverse=True)
        exprs = [self._term_expr(c, m) for m, c in terms]
        return exprs[0] if len(exprs) == 1 else Sum(exprs)

    def _factor_expr(self, a: Expr, e) -> Expr:
        if a is EULER:
            return Exp(self._exp_expr(e))
        if isinstance(e, Fraction) and e == 1:
            return a
        return Power(a, self._exp_expr(e))

    @staticmethod
    def _exp_expr(e) -> Expr:
        return Num(e) if isinstance(e, Fraction) else e

    def _term_expr(self, c: Fraction, m: tuple) -> Expr:
        factors = [self._factor_expr(a, e) for a, e in m]
        if not factors:
            return Num(c)
        if c == 1:
            return factors[0] if len(factors) == 1 else Product(factors)
        return Product([Num(c)] + factors)

    def register_den(self, prim: dict) -> Expr:
        e = self.poly_to_expr(prim)
        self.den_poly.setdefault(e, prim)
        return e

    # ---------------------------------------------------------------- Rat
    def expand_den(self, den: dict) -> dict:
        out = {(): Fraction(1)}
        for p_expr, k in den.items():
            pk = self.den_poly[p_expr]
            for _ in range(k):
                out = self.poly_mul(out, pk)
        return out

    def make(self, num: dict, den: dict) -> Rat:
        den = {p: k for p, k in den.items() if k}
        if not num:
            return _RZERO
        num, den = self.cancel(num, den)
        r = Rat(num, tuple(sorted(den.items(), key=lambda pk: atom_key(pk[0]))))
        return self.fix(r)

    def cancel(self, num: dict, den: dict):
        changed = True
        while changed and den:
            changed = False
            for p_expr in sorted(den, key=atom_key):
                pk = self.den_poly[p_expr]
                q = self.exact_div(num, pk)
                if q is not None:
                    num = q
                    den[p_expr] -= 1
                    if not den[p_expr]:
                        del den[p_expr]
                    changed = True
                    break
                if len(num) > 1:
                    c, m, prim = self.content(num)
                    if len(prim) > 1:
                        q = self.exact_div(pk, prim)
                        if q is not None:
                            den[p_expr] -= 1
                            if not den[p_expr]:
                                del den[p_expr]
                            cq, mq, qprim = self.content(q)
                            num = {self.mono_mul(m, self.mono_inv(mq)): c / cq}
                            if len(qprim) > 1:
                                qe = self.register_den(qprim)
                                den[qe] = den.get(qe, 0) + 1
                            changed = True
                            break
        return num, den

    def fix(self, r: Rat) -> Rat:
        """Pull integer parts of exponents on compound atoms out of the monomials."""
        bad = False
        for m in r.num:
            for a, e in m:
                if not _is_simple(a) and self._int_part(e):
                    bad = True
                    break
            if bad:
                break
        if not bad:
            return r
        pieces = []
        for m, c in r.num.items():
            keep = []
            extra = []
            for a, e in m:
                n = self._int_part(e) if not _is_simple(a) else 0
                if n:
                    rest = self.exp_add(e, Fraction(-n))
                    if not (isinstance(rest, Fraction) and rest == 0):
                        keep.append((a, rest))
                    extra.append(self.pow_int(self._base_rat(a), n))
                else:
                    keep.append((a, e))
            pieces.append(self.rprod([Rat({tuple(keep): c})] + extra))
        total = self.rsum(pieces)
        return self.rprod([total, Rat({(): Fraction(1)}, r.den)]) if r.den else total

    def _int_part(self, e) -> int:
        if isinstance(e, Fraction):
            return floor(e)
        er = self.exp_rat(e)
        if er.den:
            return 0
        return floor(er.num.get((), 0))

    def _base_rat(self, a: Expr) -> Rat:
        if isinstance(a, Num):
            return _const(a.value)
        return self.rat(a)

    def rsum(self, rats: list) -> Rat:
        rats = [r for r in rats if r.num]
        if not rats:
            return _RZERO
        if len(rats) == 1:
            return rats[0]
        den: dict = {}
        for r in rats:
            for p, k in r.den:
                if k > den.get(p, 0):
                    den[p] = k
        num: dict = {}
        for r in rats:
            rd = dict(r.den)
            missing = {p: k - rd.get(p, 0) for p, k in den.items() if k - rd.get(p, 0)}
            term = self.poly_mul(r.num, self.expand_den(missing)) if missing else r.num
            self.poly_add_into(num, term)
        return self.make(num, den)

    def rprod(self, rats: list) -> Rat:
        num = {(): Fraction(1)}
        den: dict = {}
        for r in rats:
            if not r.num:
                return _RZERO
            num = self.poly_mul(num, r.num)
            for p, k in r.den:
                den[p] = den.get(p, 0) + k
        return self.make(num, den)

    def inv(self, r: Rat) -> Rat | None:
        if not r.num:
            return None
        c, m, prim = self.content(r.num)
        num = self.poly_scale(self.expand_den(dict(r.den)), 1 / c, self.mono_inv(m))
        den = {}
        if len(prim) > 1:
            den[self.register_den(prim)] = 1
        return self.make(num, den)

    def pow_int(self, r: Rat, n: int) -> Rat:
        if n == 0:
            return _RONE
        if n < 0:
            ri = self.inv(r)
            if ri is None:
                return self.atom(Power(ZERO, Num(n)))
            return self.pow_int(ri, -n)
        if len(r.num) == 1 and not r.den:
            (m, c), = r.num.items()
            return self.fix(Rat({self.mono_pow(m, Fraction(n)): c ** n}))
        result = _RONE
        base = r
        while n:
            if n & 1:
                result = self.rprod([result, base])
            n >>= 1
            if n:
                base = self.rprod([base, base])
        return result

    def atom(self, a: Expr, e=Fraction(1)) -> Rat:
        return self.fix(Rat({((a, e),): Fraction(1)}))

    # ---------------------------------------------------------- expressions
    def to_expr(self, r: Rat) -> Expr:
        numer = self.poly_to_expr(r.num)
        if not r.den:
            out = numer
        else:
            factors = [Power(p, Num(-k)) for p, k in r.den]
            if numer == ONE:
                out = factors[0] if len(factors) == 1 else Product(factors)
            else:
                out = Product([numer] + factors)
        self.memo.setdefault(out, r)
        return out

    def rat(self, e: Expr) -> Rat:
        r = self.memo.get(e)
        if r is None:
            r = self._rat(e)
            self.memo[e] = r
        return r

    def _rat(self, e: Expr) -> Rat:
        if isinstance(e, Num):
            return _const(e.value)
        if isinstance(e, (Var, Param, Field)):
            return self.atom(e)
        if isinstance(e, Sum):
            return self.rsum([self.rat(t) for t in e.terms])
        if isinstance(e, Product):
            return self.rprod([self.rat(f) for f in e.factors])
        if isinstance(e, Power):
            return self.power(self.rat(e.base), self.rat(e.exponent))
        if isinstance(e, Ln):
            return self.ln(self.rat(e.arg))
        if isinstance(e, Exp):
            return self.exp(self.rat(e.arg))
        if isinstance(e, Fn):
            if e.rule is not None and e.order >= 1:
                from .calculus import diff, substitute
                d = e.rule
                for _ in range(e.order - 1):
                    d = diff(d, T)
                return self.rat(substitute(d, T, e.arg))
            arg = self.to_expr(self.rat(e.arg))
            return self.atom(Fn(e.name, e.order, arg, e.rule))
        if e is EULER:
            return self.atom(EULER)
        raise TypeError(f"cannot normalize {type(e).__name__}")

    def power(self, b: Rat, ex: Rat) -> Rat:
        if ex.is_const():
            r = ex.const
            if r.denominator == 1:
                n = int(r)
                if b.is_zero():
                    if n > 0:
                        return _RZERO
                    if n == 0:
                        return _RONE
                    raise ZeroDivisionError("expression divides by an exact zero")
                return self.pow_int(b, n)
            expo = r
        else:
            expo = self.to_expr(ex)
        if b.is_const():
            c = b.const
            if c == 1:
                return _RONE
            if c > 0:
                parts = [self.atom(Num(p), self.exp_mul(expo, Fraction(k)))
                         for p, k in _factor_fraction(c)]
                return self.rprod(parts)
            if c == 0 and isinstance(expo, Fraction) and expo > 0:
                return _RZERO
            return self.atom(Num(c), expo)
        if not b.den and len(b.num) == 1:
            (m, c), = b.num.items()
            if c == 1 and len(m) == 1:
                a, e = m[0]
                if a is EULER:
                    return self.atom(EULER, self.exp_mul(e, expo))
                if isinstance(e, Fraction) and e == 1:
                    return self.atom(a, expo)
        if self.positive:
            c, m, prim = self.content(b.num)
            if c > 0:
                parts = [self.power(_const(c), self.exp_rat(expo))]
                if m:
                    parts.append(self.fix(Rat({self.mono_pow(m, expo): Fraction(1)})))
                if len(prim) > 1:
                    parts.append(self.atom(self.poly_to_expr(prim), expo))
                for p_expr, k in b.den:
                    parts.append(self.atom(p_expr, self.exp_mul(expo, Fraction(-k))))
                return self.rprod(parts)
        return self.atom(self.to_expr(b), expo)

    def _ln_atom(self, a: Expr) -> Rat:
        if a is EULER:
            return _RONE
        if isinstance(a, Num):
            return self.ln(_const(a.value))
        return self.atom(Ln(a))

    def ln(self, a: Rat) -> Rat:
        if a.is_const():
            c = a.const
            if c == 1:
                return _RZERO
            if c > 0:
                return self.rsum([
                    self.rprod([_const(k), self.atom(Ln(Num(p)))])
                    for p, k in _factor_fraction(c)
                ])
            return self.atom(Ln(Num(c)))
        if not a.den and len(a.num) == 1:
            (m, c), = a.num.items()
            if c == 1 and len(m) == 1:
                at, e = m[0]
                if at is EULER:
                    return self.exp_rat(e)
                if isinstance(e, Fraction):
                    return self.rprod([_const(e), self._ln_atom(at)])
        if self.positive:
            c, m, prim = self.content(a.num)
            if c > 0:
                parts = [self.ln(_const(c))]
                for at, e in m:
                    parts.append(self.rprod([self.exp_rat(e), self._ln_atom(at)]))
                if len(prim) > 1:
                    parts.append(self.atom(Ln(self.poly_to_expr(prim))))
                for p_expr, k in a.den:
                    parts.append(self.rprod([_const(-k), self.atom(Ln(p_expr))]))
                return self.rsum(parts)
        return self.atom(Ln(self.to_expr(a)))

    def exp(self, a: Rat) -> Rat:
        if a.is_zero():
            return _RONE
        if not a.den:
            if len(a.num) == 1:
                (m, c), = a.num.items()
                if c == 1 and len(m) == 1 and isinstance(m[0][0], Ln) and m[0][1] == 1:
                    return self.rat(m[0][0].arg)
            if self.positive:
                peeled = []
                rest = {}
                for m, c in a.num.items():
                    if len(m) == 1 and isinstance(m[0][0], Ln) and m[0][1] == 1:
                        peeled.append(self.power(self.rat(m[0][0].arg), _const(c)))
                    else:
                        rest[m] = c
                if peeled:
                    if rest:
                        peeled.append(self.atom(EULER, self.rat_to_exp(Rat(rest))))
                    return self.rprod(peeled)
        return self.atom(EULER, self.rat_to_exp(a))


_NORMALIZERS = {False: _Normalizer(False), True: _Normalizer(True)}


def _ctx(positive: bool) -> _Normalizer:
    return _NORMALIZERS[bool(positive)]


@lru_cache(maxsize=200_000)
def _normalize(e: Expr, positive: bool) -> Expr:
    ctx = _ctx(positive)
    return ctx.to_expr(ctx.rat(e))


def normalize(e: Expr, positive: bool = False) -> Expr:
    """Canonical form of ``e``; ``positive`` declares all atoms positive."""
    return _normalize(e, bool(positive))


def is_zero(e: Expr, positive: bool = False) -> bool:
    return _ctx(positive).rat(e).is_zero()


def together(e: Expr, positive: bool = False) -> Expr:
    """Display form of ``e`` as a single fraction (not canonical; for output only)."""
    ctx = _ctx(positive)
    r = ctx.rat(normalize(e, positive))
    if len(r.num) < 2:
        return ctx.to_expr(r)
    lows: dict = {}
    for m in r.num:
        present = dict(m)
        for a, ex in m:
            if isinstance(ex, Fraction) and ex < 0:
                lows[a] = min(lows.get(a, ex), ex)
        for a in list(lows):
            if a not in present:
                lows[a] = min(lows[a], Fraction(0))
    shift = tuple(sorted(((a, -k) for a, k in lows.items() if k < 0),
                         key=lambda ae: atom_key(ae[0])))
    if not shift:
        return ctx.to_expr(r)
    numer = ctx.poly_to_expr(ctx.poly_scale(r.num, Fraction(1), shift))
    factors = [numer]
    factors += [Power(a, Num(-k)) for a, k in shift]
    factors += [Power(p, Num(-k)) for p, k in r.den]
    return Product(factors)
