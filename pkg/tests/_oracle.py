"""Independent oracles, written without any maxwellkit machinery.

* a sympy oracle: quantity gradients come from the textbook differentials
  dG = V dp - S dT, dH = T dS + V dp, dF = -S dT - p dV, dE = T dS - p dV,
  and (a, b, c) = (grad a x grad c) / (grad b x grad c);
* a finite-difference oracle: the coordinate map (x, y) -> (b, c) is
  inverted numerically and a is differenced along b at fixed c.  Energy
  values come from line integrals of their differentials.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy import integrate, optimize

x, y = sp.symbols("x y", positive=True)
t = sp.Symbol("t", positive=True)
R = sp.Rational

# The catalog models written out by hand.
GAMMA = R(7, 5)
_feyn_gamma = R(7, 5) + 1 / (10 * t)
_feyn_phi = R(5, 2) * t - R(5, 8) * sp.log(4 * t + 1)

MODELS = {
    "ideal": {
        "u": x * y,
        "v": (sp.log(x) + GAMMA * sp.log(y)) / (GAMMA - 1),
        "box": (0.5, 5.0, 0.5, 5.0),
    },
    "generalized": {            # a, b, c, d = 2, 3, 1, 2 rescaled: U = x^2 y^3, V = -1/(x y^2)
        "u": x ** 2 * y ** 3,
        "v": -1 / (x * y ** 2),
        "box": (0.5, 5.0, 0.5, 5.0),
    },
    "vdw": {
        "u": (x + 1 / y ** 2) * (y - 1),
        "v": sp.log((x + 1 / y ** 2) * (y - 1) ** GAMMA) / (GAMMA - 1),
        "box": (0.5, 5.0, 1.5, 5.0),
    },
    "feynman": {
        "u": _feyn_phi.subs(t, x * y),
        "v": sp.log(x * y ** _feyn_gamma.subs(t, x * y)),
        "box": (2.0, 4.0, 2.0, 4.0),
    },
}


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


@lru_cache(maxsize=None)
def gradients(model: str) -> dict:
    u, v = MODELS[model]["u"], MODELS[model]["v"]
    gu = (sp.diff(u, x), sp.diff(u, y))
    gv = (sp.diff(v, x), sp.diff(v, y))
    p_, V_ = (1, 0), (0, 1)
    return {
        1: p_,
        2: V_,
        3: gu,
        4: gv,
        5: (y - v * gu[0], -v * gu[1]),                     # dG = V dp - S dT
        6: (u * gv[0] + y, u * gv[1]),                      # dH = T dS + V dp
        7: (-v * gu[0], -v * gu[1] - x),                    # dF = -S dT - p dV
        8: (u * gv[0], u * gv[1] - x),                      # dE = T dS - p dV
    }


def jacobian(model: str):
    g = gradients(model)
    return sp.simplify(cross(g[3], g[4]))


@lru_cache(maxsize=None)
def _denominator(model: str, j: int, k: int):
    g = gradients(model)
    return sp.simplify(cross(g[j], g[k]))


def triple(model: str, i: int, j: int, k: int):
    """sympy expression for (i, j, k), or None when (j, k) are dependent."""
    g = gradients(model)
    den = _denominator(model, j, k)
    if den == 0:
        return None
    return cross(g[i], g[k]) / den


def second(model: str, tr, d: int, e: int):
    phi = triple(model, *tr)
    g = gradients(model)
    den = _denominator(model, d, e)
    if phi is None or den == 0:
        return None
    gphi = (sp.diff(phi, x), sp.diff(phi, y))
    return cross(gphi, g[e]) / den


def value(expr, px: float, py: float, digits: int = 30) -> float:
    return float(sp.N(expr.subs({x: sp.Float(px, digits), y: sp.Float(py, digits)}), digits))


def points(model: str, n: int, seed: int) -> list[tuple[float, float]]:
    xlo, xhi, ylo, yhi = MODELS[model]["box"]
    rng = np.random.default_rng(seed)
    # keep away from the box edge so finite differences stay inside
    px = rng.uniform(xlo + 0.1 * (xhi - xlo), xhi - 0.1 * (xhi - xlo), n)
    py = rng.uniform(ylo + 0.1 * (yhi - ylo), yhi - 0.1 * (yhi - ylo), n)
    return [(float(a), float(b)) for a, b in zip(px, py)]


# ---------------------------------------------------------- generic oracle
# Abstract f, g: random numeric values for f, g, f_1, f_2, g_1 and the
# second partials, with g_2 fixed by f_1 g_2 - f_2 g_1 = 1.

F, G = sp.Function("f")(x, y), sp.Function("g")(x, y)


def generic_triple(i: int, j: int, k: int):
    gu = (sp.diff(F, x), sp.diff(F, y))
    gv = (sp.diff(G, x), sp.diff(G, y))
    g = {1: (1, 0), 2: (0, 1), 3: gu, 4: gv,
         5: (y - G * gu[0], -G * gu[1]), 6: (F * gv[0] + y, F * gv[1]),
         7: (-G * gu[0], -G * gu[1] - x), 8: (F * gv[0], F * gv[1] - x)}
    den = cross(g[j], g[k])
    return cross(g[i], g[k]) / den


def generic_assignment(seed: int) -> dict:
    """Values for x, y, f, g and first partials consistent with J = 1."""
    rng = np.random.default_rng(seed)
    vals = {k: float(rng.uniform(0.5, 2.0)) for k in ("x", "y", "f", "g", "f_1", "f_2", "g_1")}
    vals["g_2"] = (1 + vals["f_2"] * vals["g_1"]) / vals["f_1"]
    return vals


def generic_value(expr, vals: dict) -> float | None:
    sub = {
        sp.Derivative(F, x): vals["f_1"], sp.Derivative(F, y): vals["f_2"],
        sp.Derivative(G, x): vals["g_1"], sp.Derivative(G, y): vals["g_2"],
    }
    e = expr.subs(sub).subs({F: vals["f"], G: vals["g"]}).subs({x: vals["x"], y: vals["y"]})
    e = sp.nsimplify(e) if e.is_number is False else e
    try:
        return float(sp.N(e, 30))
    except (TypeError, ZeroDivisionError):
        return None


# ------------------------------------------------------ finite differences

class FiniteDifference:
    """(i, j, k) by central differences of i along j at constant k."""

    def __init__(self, model: str):
        m = MODELS[model]
        self.model = model
        self.u = sp.lambdify((x, y), m["u"], "numpy")
        self.v = sp.lambdify((x, y), m["v"], "numpy")
        g = gradients(model)
        self.grad = {c: tuple(sp.lambdify((x, y), comp, "numpy") for comp in g[c]) for c in g}
        xlo, xhi, ylo, yhi = m["box"]
        self.ref = (0.5 * (xlo + xhi), 0.5 * (ylo + yhi))

    def _energy(self, code: int, px: float, py: float) -> float:
        gx, gy = self.grad[code]
        x0, y0 = self.ref
        dx, dy = px - x0, py - y0

        def integrand(s):
            xs, ys = x0 + s * dx, y0 + s * dy
            return gx(xs, ys) * dx + gy(xs, ys) * dy

        val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    def quantity(self, code: int, px: float, py: float) -> float:
        if code == 1:
            return px
        if code == 2:
            return py
        if code == 3:
            return float(self.u(px, py))
        if code == 4:
            return float(self.v(px, py))
        return self._energy(code, px, py)

    def _invert(self, j: int, k: int, target, guess):
        def residual(z):
            return [self.quantity(j, *z) - target[0], self.quantity(k, *z) - target[1]]

        def jac(z):
            return [[self.grad[j][0](*z), self.grad[j][1](*z)],
                    [self.grad[k][0](*z), self.grad[k][1](*z)]]

        sol = optimize.root(residual, guess, jac=jac, method="hybr", tol=1e-14)
        # hybr reports "no progress" once it sits at rounding level; judge by the residual
        scale = 1.0 + abs(target[0]) + abs(target[1])
        if not sol.success and np.max(np.abs(residual(sol.x))) > 1e-12 * scale:
            raise RuntimeError(f"inversion failed: {sol.message}")
        return sol.x

    def _estimate(self, i, j, k, px, py, b0, c0, h):
        vals = [self.quantity(i, *self._invert(j, k, (b0 + s * h, c0), [px, py]))
                for s in (1, -1, 2, -2)]
        # fourth-order central difference
        return (8 * (vals[0] - vals[1]) - (vals[2] - vals[3])) / (12 * h)

    def triple(self, i: int, j: int, k: int, px: float, py: float, rel_step: float = 1e-4,
               agree: float = 1e-7) -> float:
        """Refine the step tenfold until two successive estimates agree; close
        to a fold of the (j, k) chart a large step has no preimage or lands on
        the wrong branch."""
        b0, c0 = self.quantity(j, px, py), self.quantity(k, px, py)
        prev = None
        for n in range(5):
            h = rel_step * 10.0 ** -n * max(1.0, abs(b0))
            try:
                est = self._estimate(i, j, k, px, py, b0, c0, h)
            except RuntimeError:
                prev = None
                continue
            if prev is not None and abs(est - prev) <= agree * abs(est) + 1e-9:
                return est
            prev = est
        raise RuntimeError(f"finite differences of ({i},{j},{k}) do not settle at ({px}, {py})")

    def dependent(self, j: int, k: int, px: float, py: float) -> bool:
        a = (self.grad[j][0](px, py), self.grad[j][1](px, py))
        b = (self.grad[k][0](px, py), self.grad[k][1](px, py))
        scale = np.hypot(*a) * np.hypot(*b)
        return abs(cross(a, b)) <= 1e-12 * scale


def all_triples():
    return list(itertools.permutations(range(1, 9), 3))
