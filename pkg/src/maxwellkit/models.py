"""Equation-of-state models: temperature u = f(x, y) and entropy v = g(x, y).

x is pressure and y volume.  Parameters stay symbolic in ``u`` and ``v`` so
identities hold for every parameter value; ``params`` holds the numeric
values used whenever something has to be evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, DomainViolation, UnboundSymbol
from .symcore import (
    Box, Evaluator, Expr, Fn, Ln, Num, Param, Power, T, X, Y, as_expr, free_symbols,
    normalize, parse_expr, raw_diff, substitute_many,
)
from .symcore.equivalence import box_is_positive
from .symcore.numeric import DEFAULT_SEED

__all__ = [
    "GasModel", "catalog", "get_model", "jacobian", "ideal", "generalized", "van_der_waals",
    "feynman", "synthesis", "non_example", "uncalibrated_ideal", "custom_model",
    "numeric_primitive", "DEFAULT_GAMMA_FN", "MODEL_NAMES",
]

CALIBRATION_TOL = 1e-10
CALIBRATION_SAMPLES = 100

# default temperature-dependent adiabatic index and the closed-form primitive
# of 1/(gamma(t) - 1) = 10 t / (4 t + 1)
DEFAULT_GAMMA_FN = parse_expr("7/5 + 1/(10*t)")
DEFAULT_PHI = parse_expr("5/2*t - 5/8*ln(4*t + 1)")


@dataclass(frozen=True)
class GasModel:
    name: str
    u: Expr
    v: Expr
    params: Mapping[str, float]
    box: Box
    functions: Mapping = field(default_factory=dict)
    description: str = ""
    notes: tuple = ()
    origin: str = "catalog"
    calibrated: bool = False
    function_sources: Mapping[str, str] = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return box_is_positive(self.box, self.params)

    def evaluator(self, x, y, strict: bool = True) -> Evaluator:
        return Evaluator(x, y, self.params, self.functions, strict=strict)

    def with_params(self, **overrides) -> "GasModel":
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise DomainError(f"{self.name} has no parameter(s) {', '.join(sorted(unknown))}")
        params = dict(self.params)
        params.update({k: float(v) for k, v in overrides.items()})
        return _finish(replace(self, params=params))

    def specialized(self) -> tuple[Expr, Expr]:
        """u and v with every parameter replaced by its exact value."""
        sub = {Param(k): Num(Fraction(repr(float(v)))) for k, v in self.params.items()}
        return (normalize(substitute_many(self.u, sub), self.positive),
                normalize(substitute_many(self.v, sub), self.positive))

    def summary(self) -> dict:
        from .symcore import to_text
        return {
            "name": self.name,
            "u": to_text(self.u),
            "v": to_text(self.v),
            "params": dict(self.params),
            "domain": self.box.as_dict(),
            "functions": dict(self.function_sources),
            "calibrated": self.calibrated,
            "description": self.description,
            "notes": list(self.notes),
        }


def jacobian(m: GasModel) -> Expr:
    """f_1 g_2 - f_2 g_1 in normal form."""
    pos = m.positive
    ux, uy = raw_diff(m.u, X), raw_diff(m.u, Y)
    vx, vy = raw_diff(m.v, X), raw_diff(m.v, Y)
    return normalize(ux * vy - uy * vx, pos)


def _numeric_jacobian_residual(m: GasModel, n: int = CALIBRATION_SAMPLES,
                               seed: int = DEFAULT_SEED) -> float:
    j = jacobian(m)
    pts = m.box.sample(n, seed)
    vals = m.evaluator(pts[:, 0], pts[:, 1], strict=False)(j)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (n,))
    if not np.all(np.isfinite(vals)):
        return float("inf")
    return float(np.max(np.abs(vals - 1.0)))


def _check_gradients(m: GasModel) -> None:
    pos = m.positive
    grads = [normalize(raw_diff(e, v), pos) for e in (m.u, m.v) for v in (X, Y)]
    pts = m.box.corners + [m.box.center]
    for x, y in pts:
        ev = m.evaluator(x, y)
        try:
            ux, uy, vx, vy = (float(ev(g)) for g in grads)
            float(ev(m.u)), float(ev(m.v))
        except DomainViolation as exc:
            raise DomainError(f"{m.name}: box point ({x}, {y}) is outside the model's domain: {exc}") from None
        except (UnboundSymbol, ZeroDivisionError) as exc:
            raise DomainError(f"{m.name}: cannot evaluate at ({x}, {y}): {exc}") from None
        if not all(np.isfinite(v) for v in (ux, uy, vx, vy)):
            raise DomainError(f"{m.name}: non-finite gradient at ({x}, {y})")
        if ux == 0 and uy == 0 or vx == 0 and vy == 0:
            raise DomainError(f"{m.name}: vanishing gradient at ({x}, {y})")
        scale = np.hypot(ux, uy) * np.hypot(vx, vy)
        if abs(ux * vy - uy * vx) <= 1e-12 * scale:
            raise DomainError(f"{m.name}: gradients of u and v are parallel at ({x}, {y})")


def _finish(m: GasModel) -> GasModel:
    """Validate a model and compute its calibration flag."""
    _check_gradients(m)
    calibrated = jacobian(m) == Num(1) or _numeric_jacobian_residual(m) <= CALIBRATION_TOL
    return replace(m, calibrated=calibrated)


def numeric_primitive(rule: Expr, t0: float, params=None, functions=None) -> list[Callable]:
    """[F, F', F''] with F' = rule (an expression in t) and F(t0) = 0, by quadrature."""
    from .symcore.calculus import raw_diff as _rd
    first = rule
    second = _rd(rule, T)

    def at(expr):
        def fn(t):
            return Evaluator(0.0, 0.0, params, functions, {"t": t}, strict=False)(expr)
        return fn

    d1, d2 = at(first), at(second)

    def prim(t):
        t_arr = np.asarray(t, dtype=float)
        out = np.vectorize(lambda s: quad(lambda r: float(d1(r)), t0, s,
                                          epsabs=1e-13, epsrel=1e-13)[0])(t_arr)
        return out if out.ndim else float(out)

    return [prim, d1, d2]


def _gamma_fn(gamma_fn) -> Expr:
    return DEFAULT_GAMMA_FN if gamma_fn is None else as_expr(
        parse_expr(gamma_fn) if isinstance(gamma_fn, str) else gamma_fn)


# --------------------------------------------------------------- catalog

def ideal(gamma: float = 1.4) -> GasModel:
    g = Param("gamma")
    return _finish(GasModel(
        name="ideal",
        u=X * Y,
        v=(Ln(X) + g * Ln(Y)) / (g - 1),
        params={"gamma": float(gamma)},
        box=Box(0.5, 5.0, 0.5, 5.0),
        description="ideal gas with constant adiabatic index gamma",
    ))


def uncalibrated_ideal(gamma: float = 1.4) -> GasModel:
    """The ideal gas before recalibration: u = xy, v = x y^gamma (J = (gamma-1) v)."""
    g = Param("gamma")
    return _finish(GasModel(
        name="ideal_raw",
        u=X * Y,
        v=X * Y ** g,
        params={"gamma": float(gamma)},
        box=Box(0.5, 5.0, 0.5, 5.0),
        description="ideal gas in empirical (un-recalibrated) coordinates",
    ))


def generalized(a: float = 2, b: float = 3, c: float = 1, d: float = 2) -> GasModel:
    """Power-law potentials x^a y^b, x^c y^d rescaled so that J = 1.

    With D = ad - bc the rescaling is U = sqrt(D)/(d-c) * (x^a y^b)^((d-c)/D)
    and V = sqrt(D)/(a-b) * (x^c y^d)^((a-b)/D).
    """
    pa, pb, pc, pd = (Param(n) for n in "abcd")
    det = pa * pd - pb * pc
    root = Power(det, Num(Fraction(1, 2)))
    p = (pd - pc) / det
    q = (pa - pb) / det
    u = root / (pd - pc) * X ** (pa * p) * Y ** (pb * p)
    v = root / (pa - pb) * X ** (pc * q) * Y ** (pd * q)
    vals = {"a": float(a), "b": float(b), "c": float(c), "d": float(d)}
    if a * d - b * c <= 0 or d == c or a == b:
        raise DomainError("generalized gas needs ad - bc > 0, d != c and a != b")
    return _finish(GasModel(
        name="generalized",
        u=u, v=v, params=vals,
        box=Box(0.5, 5.0, 0.5, 5.0),
        description="power-law temperature x^a y^b and entropy x^c y^d, canonically rescaled",
    ))


def van_der_waals(a: float = 1, b: float = 1, gamma: float = 1.4) -> GasModel:
    pa, pb, g = Param("a"), Param("b"), Param("gamma")
    pressure = X + pa / Y ** 2
    gap = Y - pb
    if 1.5 <= b:
        raise DomainError("the default van der Waals box needs b < 1.5")
    return _finish(GasModel(
        name="vdw",
        u=pressure * gap,
        v=Ln(pressure * gap ** g) / (g - 1),
        params={"a": float(a), "b": float(b), "gamma": float(gamma)},
        box=Box(0.5, 5.0, 1.5, 5.0),
        description="van der Waals gas with constant adiabatic index",
    ))


def _phi_and_bindings(gamma_fn, phi, anchor: float):
    gexpr = _gamma_fn(gamma_fn)
    gamma_app = Fn("gamma", 0, T)
    rule = normalize(1 / (gamma_app - 1))
    functions: dict = {"gamma": gexpr}
    sources = {"gamma": str(gexpr)}
    if phi is not None:
        functions["phi"] = as_expr(parse_expr(phi) if isinstance(phi, str) else phi)
        sources["phi"] = str(functions["phi"])
    elif gamma_fn is None:
        functions["phi"] = DEFAULT_PHI
        sources["phi"] = str(DEFAULT_PHI)
    else:
        functions["phi"] = numeric_primitive(rule, anchor, functions={"gamma": gexpr})
        sources["phi"] = f"quadrature primitive of 1/(gamma(t) - 1) from t = {anchor:g}"
    return rule, functions, sources


def feynman(gamma_fn=None, phi=None) -> GasModel:
    """Ideal-type gas whose adiabatic index depends on temperature: v = ln(x y^gamma(xy)),
    u = phi(xy) with phi' = 1/(gamma - 1)."""
    box = Box(2.0, 4.0, 2.0, 4.0)
    rule, functions, sources = _phi_and_bindings(gamma_fn, phi, 9.0)
    w = X * Y
    return _finish(GasModel(
        name="feynman",
        u=Fn("phi", 0, w, rule),
        v=Ln(X * Y ** Fn("gamma", 0, w)),
        params={},
        box=box,
        functions=functions,
        function_sources=sources,
        description="ideal-type gas with temperature-dependent adiabatic index",
    ))


def synthesis(a: float = 1, b: float = 1, gamma_fn=None, phi=None) -> GasModel:
    """Van der Waals gas with a temperature-dependent adiabatic index."""
    pa, pb = Param("a"), Param("b")
    w = (X + pa / Y ** 2) * (Y - pb)
    box = Box(2.0, 4.0, 2.0, 4.0)
    rule, functions, sources = _phi_and_bindings(gamma_fn, phi, 6.0)
    return _finish(GasModel(
        name="synthesis",
        u=Fn("phi", 0, w, rule),
        v=Ln((X + pa / Y ** 2) * (Y - pb) ** Fn("gamma", 0, w)),
        params={"a": float(a), "b": float(b)},
        box=box,
        functions=functions,
        function_sources=sources,
        description="van der Waals gas with temperature-dependent adiabatic index",
        notes=("the entropy uses the volume gap (y - b) inside the logarithm",),
    ))


def non_example(a: float = 1, b: float = 1.1, c: float = 1, gamma_fn=None) -> GasModel:
    """u = x^a y^b, v = x^c y^gamma(xy): a pair that violates the area condition."""
    pa, pb, pc = Param("a"), Param("b"), Param("c")
    gexpr = parse_expr("2 + 1/t") if gamma_fn is None else _gamma_fn(gamma_fn)
    return _finish(GasModel(
        name="non_example",
        u=X ** pa * Y ** pb,
        v=X ** pc * Y ** Fn("gamma", 0, X * Y),
        params={"a": float(a), "b": float(b), "c": float(c)},
        box=Box(0.02, 0.22, 0.6, 2.4),
        functions={"gamma": gexpr},
        function_sources={"gamma": str(gexpr)},
        description="power-law temperature with a variable entropy exponent (no S-condition)",
    ))


def custom_model(name: str, u: Expr, v: Expr, params: Mapping[str, float], box: Box,
                 functions: Mapping | None = None, function_sources=None,
                 origin: str = "user") -> GasModel:
    return _finish(GasModel(name=name, u=u, v=v, params=dict(params), box=box,
                            functions=dict(functions or {}),
                            function_sources=dict(function_sources or {}), origin=origin))


_BUILDERS = {
    "ideal": ideal,
    "generalized": generalized,
    "vdw": van_der_waals,
    "feynman": feynman,
    "synthesis": synthesis,
    "non_example": non_example,
}
MODEL_NAMES = tuple(_BUILDERS)
_ALIASES = {"van_der_waals": "vdw", "vanderwaals": "vdw", "nonexample": "non_example",
            "non-example": "non_example", "ideal_raw": "ideal_raw"}

_CACHE: dict = {}


def get_model(name: str) -> GasModel:
    key = _ALIASES.get(name, name)
    if key == "ideal_raw":
        builder = uncalibrated_ideal
    elif key in _BUILDERS:
        builder = _BUILDERS[key]
    else:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    if key not in _CACHE:
        _CACHE[key] = builder()
    return _CACHE[key]


def catalog() -> list[GasModel]:
    return [get_model(n) for n in MODEL_NAMES]
