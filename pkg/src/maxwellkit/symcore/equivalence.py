"""Zero testing: symbolic proof first, seeded numeric sampling as fallback."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import DomainViolation, UnboundSymbol
from .expr import Expr, Product, Num, Sum
from .normal import is_zero
from .numeric import DEFAULT_SEED, Box, Evaluator, FnBinding

__all__ = ["Verdict", "equivalent", "PROVED", "VERIFIED", "REFUTED", "INCONCLUSIVE",
           "box_is_positive", "relative_gap"]

PROVED = "ProvedSymbolic"
VERIFIED = "VerifiedNumeric"
REFUTED = "Refuted"
INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    kind: str
    tolerance: float | None = None
    samples: int = 0
    seed: int | None = None
    witness: dict | None = None
    residual: float | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.kind in (PROVED, VERIFIED)

    def to_dict(self) -> dict:
        out = {"verdict": self.kind, "tolerance": self.tolerance, "samples": self.samples,
               "seed": self.seed, "witness": self.witness, "residual": self.residual}
        if self.detail:
            out["detail"] = self.detail
        out.update(self.extra)
        return out


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def box_is_positive(box: Box, params: Mapping[str, float] | None = None) -> bool:
    """Whether positive-mode simplification is sound on this box."""
    return box.xlo > 0 and box.ylo > 0 and all(v > 0 for v in (params or {}).values())


def equivalent(e1: Expr, e2: Expr, domain: Box, params: Mapping[str, float] | None = None,
               functions: Mapping[str, FnBinding] | None = None, tol: float = 1e-9,
               samples: int = 50, seed: int = DEFAULT_SEED,
               positive: bool | None = None) -> Verdict:
    """Decide whether ``e1`` and ``e2`` agree on ``domain``.

    The numeric criterion is |e1 - e2| <= tol * (1 + max(|e1|, |e2|)).
    """
    if positive is None:
        positive = box_is_positive(domain, params)
    difference = Sum((e1, Product((Num(-1), e2))))
    if is_zero(difference, positive):
        return Verdict(PROVED, tolerance=0.0, samples=0, seed=seed, residual=0.0)
    pts = domain.sample(samples, seed)
    worst = 0.0
    used = 0
    for x, y in pts:
        ev = Evaluator(float(x), float(y), params, functions)
        try:
            a = float(ev(e1))
            b = float(ev(e2))
        except DomainViolation:
            continue
        except UnboundSymbol as exc:
            return Verdict(INCONCLUSIVE, tolerance=tol, samples=0, seed=seed,
                           detail=f"symbolic difference is nonzero and {exc}")
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        used += 1
        gap = relative_gap(a, b)
        worst = max(worst, gap)
        if gap > tol:
            return Verdict(REFUTED, tolerance=tol, samples=used, seed=seed,
                           witness={"x": float(x), "y": float(y), "lhs": a, "rhs": b},
                           residual=gap)
    if used == 0:
        return Verdict(INCONCLUSIVE, tolerance=tol, samples=0, seed=seed,
                       detail="every sample point violated the domain")
    return Verdict(VERIFIED, tolerance=tol, samples=used, seed=seed, residual=worst)
