"""The area (S-) condition for two foliations, canonical recalibration and
construction of S-transversal families.

Smooth criterion: J = u_x v_y - u_y v_x splits as a(u) b(v) exactly when the
coefficients of grad(ln J) = alpha grad(u) + beta grad(v) satisfy
alpha = const on u-levels and beta = const on v-levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import ndimage

from .errors import (
    CrossingCurves, DomainError, DomainViolation, EmptyCell, SConditionFailed,
    SingularCalibration, SingularFrame, UnboundSymbol,
)
from .models import GasModel
from .symcore import (
    BudgetExceeded, Box, Evaluator, Expr, Fn, Ln, Num, Point, T, X, Y, free_symbols, normalize,
    parse_expr, raw_diff, substitute, to_text, work_budget,
)
from .symcore.equivalence import INCONCLUSIVE, PROVED, REFUTED, VERIFIED, Verdict, box_is_positive
from .symcore.expr import Param, Power, Var
from .symcore.numeric import DEFAULT_SEED

__all__ = [
    "SplitReport", "CellSpec", "MonotoneMap", "Recalibration", "LinearFamily",
    "splitting_coefficients", "s_condition_smooth", "s_condition_area", "default_cells",
    "cell_areas", "recalibrate", "linear_family", "transversal_from_curves",
    "uniqueness_check", "SPLIT_TOL", "AREA_TOL", "GEOM_TOL",
]

SPLIT_TOL = 1e-6
AREA_TOL = 1e-3
AREA_RESOLUTION = 2000
GEOM_TOL = 1e-4
ROOT_TOL = 1e-10
_SYMBOLIC_SIZE_LIMIT = 20000
SYMBOLIC_BUDGET = 200_000      # monomial products allowed per symbolic attempt


# ------------------------------------------------------------------ plumbing

@dataclass
class _Pair:
    u: Expr
    v: Expr
    box: Box
    params: dict
    functions: dict

    @property
    def positive(self) -> bool:
        return box_is_positive(self.box, self.params)

    def ev(self, xs, ys) -> Evaluator:
        return Evaluator(xs, ys, self.params, self.functions, strict=False)


def _as_expr(e) -> Expr:
    return parse_expr(e) if isinstance(e, str) else e


def _pair(u, v=None, domain: Box | None = None, params=None, functions=None) -> _Pair:
    if isinstance(u, GasModel):
        m = u
        return _Pair(m.u, m.v, domain or m.box, dict(m.params), dict(m.functions))
    if v is None or domain is None:
        raise DomainError("a pair needs u, v and a domain box (or a model)")
    return _Pair(_as_expr(u), _as_expr(v), domain, dict(params or {}), dict(functions or {}))


def _size(e: Expr) -> int:
    n, stack = 0, [e]
    while stack:
        node = stack.pop()
        n += 1
        stack.extend(node.children)
    return n


def _array(v, shape) -> np.ndarray:
    with np.errstate(all="ignore"):
        out = np.asarray(v)
        if np.iscomplexobj(out):
            out = np.where(out.imag == 0, out.real, np.nan)
        return np.broadcast_to(out.astype(float), shape).copy()


class _Frame:
    """u, v, their gradients, J and the splitting coefficients as raw trees."""

    def __init__(self, pair: _Pair):
        self.pair = pair
        u, v = pair.u, pair.v
        self.ux, self.uy = raw_diff(u, X), raw_diff(u, Y)
        self.vx, self.vy = raw_diff(v, X), raw_diff(v, Y)
        self.J = self.ux * self.vy - self.uy * self.vx
        jx, jy = raw_diff(self.J, X), raw_diff(self.J, Y)
        j2 = self.J ** 2
        self.alpha = (jx * self.vy - jy * self.vx) / j2
        self.beta = (self.ux * jy - self.uy * jx) / j2

    def values(self, xs, ys, *names: str) -> list[np.ndarray]:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        shape = np.broadcast(xs, ys).shape
        ev = self.pair.ev(xs, ys)
        out = []
        for n in names:
            e = getattr(self.pair, n) if n in ("u", "v") else getattr(self, n)
            out.append(_array(ev(e), shape))
        return out


def _bisect(F: Callable, lo: np.ndarray, hi: np.ndarray, flo: np.ndarray, iters: int = 100):
    """Vectorised bisection for F(x) = 0 on brackets [lo, hi] with F(lo) = flo."""
    lo, hi, flo = lo.copy(), hi.copy(), flo.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo <= ROOT_TOL * 1e-3 * (1 + np.abs(lo))):
            break
    return 0.5 * (lo + hi)


def _level_points(frame: _Frame, which: str, levels: np.ndarray, lines: np.ndarray,
                  grid: int = 65):
    """For each (level, line y = const) find the unique x with which(x, y) = level.

    Returns x (NaN where the line does not cross the level or the crossing is
    not unique, i.e. where monotonicity in x fails on that line).
    """
    box = frame.pair.box
    xg = np.linspace(box.xlo, box.xhi, grid)
    (vals,) = frame.values(xg[None, :], lines[:, None], which)          # (L, grid)
    L, K = len(lines), len(levels)
    diff = vals[None, :, :] - levels[:, None, None]                      # (K, L, grid)
    sgn = np.sign(diff)
    finite = np.all(np.isfinite(diff), axis=2)
    changes = np.sum(sgn[:, :, 1:] * sgn[:, :, :-1] < 0, axis=2)
    ok = finite & (changes == 1)
    idx = np.argmax(sgn[:, :, 1:] * sgn[:, :, :-1] < 0, axis=2)
    kk, ll = np.nonzero(ok)
    out = np.full((K, L), np.nan)
    if len(kk) == 0:
        return out
    j = idx[kk, ll]
    lo, hi = xg[j], xg[j + 1]
    flo = diff[kk, ll, j]
    ys, target = lines[ll], levels[kk]

    def F(xm):
        (val,) = frame.values(xm, ys, which)
        return val - target

    out[kk, ll] = _bisect(F, lo, hi, flo)
    return out


# ------------------------------------------------------------ splitting test

def splitting_coefficients(u, v, p: Point, functions=None) -> tuple[float, float]:
    """(alpha, beta) with grad(ln J)(p) = alpha grad(u)(p) + beta grad(v)(p)."""
    pair = _Pair(_as_expr(u), _as_expr(v), Box(p.x - 1, p.x + 1, p.y - 1, p.y + 1),
                 dict(p.params), dict(functions or p.functions))
    fr = _Frame(pair)
    ev = pair.ev(p.x, p.y)
    ev.strict = True
    j = float(np.real(ev(fr.J)))
    scale = math.hypot(float(np.real(ev(fr.ux))), float(np.real(ev(fr.uy)))) * \
        math.hypot(float(np.real(ev(fr.vx))), float(np.real(ev(fr.vy))))
    if abs(j) <= 1e-12 * max(1.0, scale):
        raise SingularFrame(f"gradients of u and v are parallel at ({p.x}, {p.y}); J = {j:g}")
    return float(np.real(ev(fr.alpha))), float(np.real(ev(fr.beta)))


@dataclass
class SplitReport:
    verdict: Verdict
    alpha_residual: float
    beta_residual: float
    samples: int
    seed: int
    method: str = "numeric"
    witness: dict | None = None
    rejections: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    def to_dict(self) -> dict:
        return {
            "test": "smooth",
            "verdict": self.verdict.kind,
            "method": self.method,
            "residuals": {"alpha": self.alpha_residual, "beta": self.beta_residual},
            "tolerance": self.verdict.tolerance,
            "seed": self.seed,
            "samples": self.samples,
            "rejections": self.rejections,
            "witness": self.witness,
        }


def _symbolic_split(fr: _Frame, positive: bool) -> bool | None:
    """True if grad(alpha) x grad(u) and grad(beta) x grad(v) normalize to 0."""
    if _size(fr.alpha) + _size(fr.beta) > _SYMBOLIC_SIZE_LIMIT:
        return None
    try:
        with work_budget(SYMBOLIC_BUDGET):
            a = normalize(fr.alpha, positive)
            b = normalize(fr.beta, positive)
            ca = normalize(raw_diff(a, X) * fr.uy - raw_diff(a, Y) * fr.ux, positive)
            if ca != Num(0):
                return False
            cb = normalize(raw_diff(b, X) * fr.vy - raw_diff(b, Y) * fr.vx, positive)
            return cb == Num(0)
    except (BudgetExceeded, RecursionError, ZeroDivisionError):
        return None


def _spread(frame: _Frame, which: str, coeff: str, pts: np.ndarray, lines: np.ndarray):
    """Largest |coeff(p) - coeff(q)| / (1 + max) over pairs p, q on one level of ``which``."""
    levels, c0 = frame.values(pts[:, 0], pts[:, 1], which, coeff)
    xs = _level_points(frame, which, levels, lines)
    (c1,) = frame.values(xs, np.broadcast_to(lines[None, :], xs.shape), coeff)
    gap = np.abs(c1 - c0[:, None]) / (1 + np.maximum(np.abs(c1), np.abs(c0[:, None])))
    gap = np.where(np.isfinite(gap), gap, -1.0)
    usable = np.isfinite(c0) & np.any(gap >= 0, axis=1)
    worst = float(np.max(gap)) if np.any(gap >= 0) else 0.0
    witness = None
    if np.any(gap >= 0):
        k, l = np.unravel_index(np.argmax(gap), gap.shape)
        witness = {"level_of": which, "level": float(levels[k]),
                   "p": [float(pts[k, 0]), float(pts[k, 1])],
                   "q": [float(xs[k, l]), float(lines[l])],
                   coeff: [float(c0[k]), float(c1[k, l])]}
    return max(worst, 0.0), witness, int(np.sum(usable))


def s_condition_smooth(u, v=None, domain: Box | None = None, samples: int = 64,
                       tol: float = SPLIT_TOL, seed: int = DEFAULT_SEED, params=None,
                       functions=None, symbolic: bool = True) -> SplitReport:
    """Splitting test: alpha constant on u-levels and beta constant on v-levels.

    A symbolic proof is attempted first.  Otherwise each sampled point is
    matched with the points of its u-level (resp. v-level) on five lines
    y = const by root finding in x, and the coefficient spread is measured.
    """
    pair = _pair(u, v, domain, params, functions)
    fr = _Frame(pair)
    if symbolic and _symbolic_split(fr, pair.positive):
        return SplitReport(Verdict(PROVED, tolerance=0.0, seed=seed, residual=0.0), 0.0, 0.0,
                           0, seed, method="symbolic")
    box = pair.box
    pts = box.sample(samples, seed)
    j, = fr.values(pts[:, 0], pts[:, 1], "J")
    (ux, uy, vx, vy) = fr.values(pts[:, 0], pts[:, 1], "ux", "uy", "vx", "vy")
    scale = np.hypot(ux, uy) * np.hypot(vx, vy)
    good = np.isfinite(j) & (np.abs(j) > 1e-12 * np.maximum(1.0, scale))
    rejections = int(np.sum(~good))
    pts = pts[good]
    if rejections > samples / 2:
        v_ = Verdict(INCONCLUSIVE, tolerance=tol, samples=len(pts), seed=seed,
                     detail=f"{rejections} of {samples} samples have a singular frame")
        return SplitReport(v_, 0.0, 0.0, len(pts), seed, rejections=rejections)
    lines = box.ylo + (box.yhi - box.ylo) * np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    ra, wa, na = _spread(fr, "u", "alpha", pts, lines)
    rb, wb, nb = _spread(fr, "v", "beta", pts, lines)
    used = min(na, nb)
    if used == 0:
        v_ = Verdict(INCONCLUSIVE, tolerance=tol, samples=0, seed=seed,
                     detail="no level pairs could be matched inside the box")
        return SplitReport(v_, ra, rb, 0, seed, rejections=rejections)
    worst = max(ra, rb)
    if worst > tol:
        witness = wa if ra >= rb else wb
        v_ = Verdict(REFUTED, tolerance=tol, samples=used, seed=seed, witness=witness, residual=worst)
        return SplitReport(v_, ra, rb, used, seed, witness=witness, rejections=rejections)
    v_ = Verdict(VERIFIED, tolerance=tol, samples=used, seed=seed, residual=worst)
    return SplitReport(v_, ra, rb, used, seed, rejections=rejections)


# ---------------------------------------------------------------- area test

@dataclass(frozen=True)
class CellSpec:
    """Levels c_-1 < c_0 < c_1 of u and d_-1 < d_0 < d_1 of v."""
    c: tuple
    d: tuple
    resolution: int = AREA_RESOLUTION

    def __post_init__(self):
        for name, lv in (("c", self.c), ("d", self.d)):
            if len(lv) != 3 or not (lv[0] < lv[1] < lv[2]):
                raise DomainError(f"cell levels {name} must be three strictly increasing values")
        if self.resolution < 16:
            raise DomainError("cell resolution must be at least 16")

    def to_dict(self) -> dict:
        return {"c": list(self.c), "d": list(self.d), "resolution": self.resolution}


def _cell_masks(uu: np.ndarray, vv: np.ndarray, spec: CellSpec):
    c, d = spec.c, spec.d
    lo_u = (c[0] < uu) & (uu < c[1])
    hi_u = (c[1] < uu) & (uu < c[2])
    lo_v = (d[0] < vv) & (vv < d[1])
    hi_v = (d[1] < vv) & (vv < d[2])
    return {"A": lo_u & hi_v, "B": hi_u & hi_v, "C": lo_u & lo_v, "D": hi_u & lo_v}


def _below(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """P(X1 + X2 < z) for independent X1 ~ U(-a, a), X2 ~ U(-b, b), a >= b >= 0."""
    with np.errstate(all="ignore"):
        s, t = a + b, a - b
        thin = b <= 1e-12 * np.maximum(a, 1e-300)
        uni = np.clip((z + a) / (2 * a), 0.0, 1.0)
        low = (z + s) ** 2 / (8 * a * b)
        mid = (z + a) / (2 * a)
        high = 1.0 - (s - z) ** 2 / (8 * a * b)
        out = np.where(z <= -s, 0.0, np.where(z <= -t, low, np.where(z <= t, mid,
                       np.where(z < s, high, 1.0))))
        out = np.where(thin, uni, out)
        return np.where(a == 0, (z > 0).astype(float), out)


def _band(val, gx, gy, hx: float, hy: float, lo: float, hi: float) -> np.ndarray:
    """Fraction of each pixel where lo < val < hi, val taken linear on the pixel."""
    p = np.abs(gx) * hx / 2
    q = np.abs(gy) * hy / 2
    a, b = np.maximum(p, q), np.minimum(p, q)
    return np.clip(_below(hi - val, a, b) - _below(lo - val, a, b), 0.0, 1.0)


def _cell_cover(fr: "_Frame", window: Box, n: int, spec: CellSpec):
    """Per-pixel coverage of the four cells (boundary pixels get fractional weight)."""
    xs, ys, area = _grid(window, n)
    uu, vv, ux, uy, vx, vy = fr.values(xs[None, :], ys[:, None], "u", "v", "ux", "uy", "vx", "vy")
    hx = (window.xhi - window.xlo) / n
    hy = (window.yhi - window.ylo) / n
    c, d = spec.c, spec.d
    lo_u = _band(uu, ux, uy, hx, hy, c[0], c[1])
    hi_u = _band(uu, ux, uy, hx, hy, c[1], c[2])
    lo_v = _band(vv, vx, vy, hx, hy, d[0], d[1])
    hi_v = _band(vv, vx, vy, hx, hy, d[1], d[2])
    cover = {"A": lo_u * hi_v, "B": hi_u * hi_v, "C": lo_u * lo_v, "D": hi_u * lo_v}
    for k in cover:
        cover[k] = np.where(np.isfinite(cover[k]), cover[k], 0.0)
    return cover, area


def _grid(box: Box, n: int):
    hx = (box.xhi - box.xlo) / n
    hy = (box.yhi - box.ylo) / n
    xs = box.xlo + hx * (np.arange(n) + 0.5)
    ys = box.ylo + hy * (np.arange(n) + 0.5)
    return xs, ys, hx * hy


def _uv_grid(frame: _Frame, box: Box, n: int):
    xs, ys, area = _grid(box, n)
    uu, vv = frame.values(xs[None, :], ys[:, None], "u", "v")
    return uu, vv, area


def _main_component(mask: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(mask)
    if count <= 1:
        return mask
    sizes = ndimage.sum_labels(mask, labels, index=np.arange(1, count + 1))
    return labels == (1 + int(np.argmax(sizes)))


def _touches_edge(mask: np.ndarray) -> bool:
    return bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())


def _cells_window(frame: _Frame, spec: CellSpec, coarse: int = 512) -> Box:
    """Bounding box of the four cells with a margin; they must not touch the box edge."""
    box = frame.pair.box
    uu, vv, _ = _uv_grid(frame, box, coarse)
    masks = _cell_masks(uu, vv, spec)
    union = _main_component(masks["A"] | masks["B"] | masks["C"] | masks["D"])
    for k, m in masks.items():
        if not np.any(m & union):
            raise EmptyCell(f"cell {k} is empty inside the domain box")
    if _touches_edge(union):
        raise EmptyCell("the cells reach the edge of the domain box; choose closer levels")
    rows = np.nonzero(union.any(axis=1))[0]
    cols = np.nonzero(union.any(axis=0))[0]
    hx = (box.xhi - box.xlo) / coarse
    hy = (box.yhi - box.ylo) / coarse
    # thin wedge-shaped tips can hide between coarse pixels: pad generously
    padx = 4 * hx + 0.05 * hx * (cols[-1] - cols[0])
    pady = 4 * hy + 0.05 * hy * (rows[-1] - rows[0])
    return Box(max(box.xlo, box.xlo + hx * cols[0] - padx),
               min(box.xhi, box.xlo + hx * (cols[-1] + 1) + padx),
               max(box.ylo, box.ylo + hy * rows[0] - pady),
               min(box.yhi, box.ylo + hy * (rows[-1] + 1) + pady))


def _grow(window: Box, box: Box, factor: float = 0.25) -> Box:
    dx = factor * (window.xhi - window.xlo)
    dy = factor * (window.yhi - window.ylo)
    return Box(max(box.xlo, window.xlo - dx), min(box.xhi, window.xhi + dx),
               max(box.ylo, window.ylo - dy), min(box.yhi, window.yhi + dy))


def cell_areas(u, v=None, spec: CellSpec | None = None, domain: Box | None = None,
               resolution: int | None = None, params=None, functions=None) -> dict:
    """Areas of the cells A, B, C, D by midpoint indicator counting."""
    pair = _pair(u, v, domain, params, functions)
    fr = _Frame(pair)
    spec = spec or default_cells(u, v, domain, params=params, functions=functions)
    return _areas(fr, spec, _cells_window(fr, spec), resolution or spec.resolution)[0]


def _areas(fr: _Frame, spec: CellSpec, window: Box, n: int) -> tuple[dict, Box]:
    """Cell areas on an n x n grid over ``window``; the window grows until the
    cells sit strictly inside it."""
    box = fr.pair.box
    for _ in range(8):
        cover, area = _cell_cover(fr, window, n, spec)
        union = _main_component((cover["A"] + cover["B"] + cover["C"] + cover["D"]) > 0)
        if not _touches_edge(union) or window == box:
            break
        window = _grow(window, box)
    if _touches_edge(union):
        raise EmptyCell("the cells reach the edge of the domain box; choose closer levels")
    out = {k: float(np.sum(m[union])) * area for k, m in cover.items()}
    for k, a in out.items():
        if a == 0:
            raise EmptyCell(f"cell {k} has zero estimated area at resolution {n}")
    return out, window


def _deviation(a: dict) -> float:
    return abs(a["A"] * a["D"] - a["B"] * a["C"]) / (a["B"] * a["C"])


def default_cells(u, v=None, domain: Box | None = None, params=None, functions=None,
                  resolution: int = AREA_RESOLUTION) -> CellSpec:
    """Levels around the values at the box centre, as wide as the box allows.

    Positive potentials get geometric spacing, others arithmetic.  Symmetric
    spacings are shrunk from a quarter of each potential's (log-)spread until
    the four cells fit strictly inside the box; then each of the four outer
    levels is pushed outwards on its own while the cells still fit.
    """
    pair = _pair(u, v, domain, params, functions)
    fr = _Frame(pair)
    box = pair.box
    cx, cy = box.center
    centre = [float(a) for a in fr.values(cx, cy, "u", "v")]
    grids = _uv_grid(fr, box, 64)[:2]
    makers = []
    for c0, g in zip(centre, grids):
        if not (np.all(np.isfinite(g)) and np.isfinite(c0)) or np.ptp(g) == 0:
            raise DomainError("the potentials are constant or undefined on the box")
        if np.min(g) > 0:
            h = 0.25 * (np.log(np.max(g)) - np.log(np.min(g)))
            makers.append(lambda lo, hi, c0=c0, h=h: (c0 * math.exp(-h * lo), c0, c0 * math.exp(h * hi)))
        else:
            h = 0.25 * np.ptp(g)
            makers.append(lambda lo, hi, c0=c0, h=h: (c0 - h * lo, c0, c0 + h * hi))

    def spec(k, grow: float = 1.0) -> CellSpec:
        return CellSpec(makers[0](grow * k[0], grow * k[1]), makers[1](grow * k[2], grow * k[3]),
                        resolution)

    def fits(k) -> bool:
        # checked with 10% wider bands so the chosen cells keep clear of the edge
        try:
            sp = spec(k, 1.1)
            _areas(fr, sp, _cells_window(fr, sp, 200), 240)
            return True
        except EmptyCell:
            return False

    steps = 0.8 ** np.arange(25)
    best = None
    for i in range(len(steps)):
        if best is not None and steps[i] * steps[0] <= best[0]:
            break
        for j in range(len(steps)):
            if best is not None and steps[i] * steps[j] <= best[0]:
                break
            if fits((steps[i], steps[i], steps[j], steps[j])):
                best = (steps[i] * steps[j], i, j)
                break
    if best is None:
        raise EmptyCell("could not fit four cells around the box centre")
    k = [steps[best[1]], steps[best[1]], steps[best[2]], steps[best[2]]]
    factor = 1.25
    while factor > 1.02:
        grown = False
        for side in range(4):
            trial = list(k)
            trial[side] *= factor
            if fits(trial):
                k = trial
                grown = True
        if not grown:
            factor = math.sqrt(factor)
    return spec(k)


def s_condition_area(u, v=None, spec: CellSpec | None = None, domain: Box | None = None,
                     tol: float = AREA_TOL, params=None, functions=None,
                     resolution: int | None = None) -> Verdict:
    """Four-cell area test |A D - B C| / (B C) <= tol.

    The cells are counted at the requested resolution and at half of it; the
    difference of the two deviations is reported as a Richardson error estimate.
    """
    pair = _pair(u, v, domain, params, functions)
    fr = _Frame(pair)
    spec = spec or default_cells(pair.u if not isinstance(u, GasModel) else u, pair.v,
                                 pair.box, pair.params, pair.functions)
    n = resolution or spec.resolution
    window = _cells_window(fr, spec)
    fine, window = _areas(fr, spec, window, n)
    coarse, _ = _areas(fr, spec, window, max(16, n // 2))
    dev, dev_half = _deviation(fine), _deviation(coarse)
    extra = {
        "test": "area",
        "areas": fine,
        "ratio_AB": fine["A"] / fine["B"],
        "ratio_CD": fine["C"] / fine["D"],
        "deviation": dev,
        "deviation_half_resolution": dev_half,
        "richardson_error": abs(dev - dev_half),
        "cells": spec.to_dict(),
        "window": window.as_dict(),
        "resolution": n,
    }
    kind = VERIFIED if dev <= tol else REFUTED
    witness = None if kind == VERIFIED else {"areas": fine, "deviation": dev}
    return Verdict(kind, tolerance=tol, samples=n * n, seed=None, witness=witness,
                   residual=dev, extra=extra)


# ------------------------------------------------------------ recalibration

@dataclass
class MonotoneMap:
    """t -> scale * core(t) + shift, with ``core`` a closed form in t or a Chebyshev series.

    A Chebyshev core is a series in a path parameter s; ``path`` maps a level
    t to its s.
    """
    kind: str                      # "closed" or "chebyshev"
    scale: float
    shift: float
    core: Expr | None = None
    series: Chebyshev | None = None
    derivative_series: Chebyshev | None = None
    interval: tuple = (-math.inf, math.inf)
    path: Callable | None = None

    def _core(self, t, order: int):
        t = np.asarray(t, dtype=float)
        if self.kind == "chebyshev":
            s = self.series if order == 0 else self.derivative_series
            return s(self.path(t) if self.path else t)
        e = self.core if order == 0 else raw_diff(self.core, T)
        ev = Evaluator(0.0, 0.0, variables={"t": t}, strict=False)
        return _array(ev(e), t.shape)

    def __call__(self, t):
        return self.scale * self._core(t, 0) + self.shift

    def derivative(self, t):
        return self.scale * self._core(t, 1)

    def expr(self) -> Expr | None:
        """The full map as an expression in t (closed forms only)."""
        if self.core is None:
            return None
        return normalize(Num(_frac(self.scale)) * self.core + Num(_frac(self.shift)))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "scale": self.scale, "shift": self.shift,
               "interval": [float(self.interval[0]), float(self.interval[1])]}
        if self.core is not None:
            out["core"] = to_text(self.core)
        else:
            out["chebyshev_degree"] = int(self.series.degree())
        return out


def _frac(x: float):
    from fractions import Fraction
    return Fraction(x).limit_denominator(10 ** 12)


@dataclass
class Recalibration:
    phi: MonotoneMap
    psi: MonotoneMap
    residual: float
    samples: int
    seed: int
    center_levels: tuple
    split: SplitReport | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "phi": self.phi.to_dict(),
            "psi": self.psi.to_dict(),
            "residual": self.residual,
            "samples": self.samples,
            "seed": self.seed,
            "center_levels": list(self.center_levels),
            "s_condition": self.split.to_dict() if self.split else None,
            "notes": list(self.notes),
        }


def _power_core(k: float, exact: Expr | None) -> Expr:
    """Primitive of t^(-k), up to a constant."""
    if abs(k - 1) < 1e-12:
        return Ln(T)
    if abs(k) < 1e-15:
        return T
    e = exact if exact is not None else Num(_frac(k))
    return normalize(T ** (1 - e) / (1 - e), True)


def _closed_coefficient(coeff: Expr, level: Expr, params: dict, positive: bool):
    """If coeff * level is free of x and y, return (k, exact k)."""
    if _size(coeff) > _SYMBOLIC_SIZE_LIMIT:
        return None
    try:
        with work_budget(SYMBOLIC_BUDGET):
            a = normalize(coeff, positive)
            if a == Num(0):
                return 0.0, Num(0)
            k = normalize(a * level, positive)
    except (BudgetExceeded, RecursionError, ZeroDivisionError):
        return None
    syms = free_symbols(k)
    if any(isinstance(s, (Var, Fn)) or s.__class__.__name__ == "Field" for s in syms):
        return None
    try:
        val = float(Evaluator(0.0, 0.0, params)(k))
    except (DomainViolation, UnboundSymbol):
        return None
    return val, k


def _diagonal_path(frame: _Frame, which: str, n: int = 513):
    """The box diagonal along which ``which`` is strictly monotone with the widest range."""
    box = frame.pair.box
    s = np.linspace(0.0, 1.0, n)
    best = None
    for flip in (False, True):
        xs = box.xlo + s * (box.xhi - box.xlo)
        ys = (box.yhi - s * (box.yhi - box.ylo)) if flip else (box.ylo + s * (box.yhi - box.ylo))
        (vals,) = frame.values(xs, ys, which)
        if not np.all(np.isfinite(vals)):
            continue
        d = np.diff(vals)
        if not (np.all(d > 0) or np.all(d < 0)):
            continue
        span = abs(vals[-1] - vals[0])
        if best is None or span > best[0]:
            best = (span, flip, vals)
    if best is None:
        raise SConditionFailed(f"{which} is not monotone along either diagonal of the box")
    _, flip, vals = best

    def point(sv):
        sv = np.asarray(sv, dtype=float)
        x = box.xlo + sv * (box.xhi - box.xlo)
        y = (box.yhi - sv * (box.yhi - box.ylo)) if flip else (box.ylo + sv * (box.yhi - box.ylo))
        return x, y

    velocity = (box.xhi - box.xlo, (box.ylo - box.yhi) if flip else (box.yhi - box.ylo))
    return point, velocity, float(min(vals[0], vals[-1])), float(max(vals[0], vals[-1])), vals[0] > vals[-1]


def _chebyshev(fn: Callable, interval: tuple, degrees=(32, 64, 128, 256)) -> Chebyshev:
    last = None
    for deg in degrees:
        ser = Chebyshev.interpolate(fn, deg, domain=list(interval))
        c = np.abs(ser.coef)
        last = ser
        if np.max(c[-4:]) <= 1e-14 * max(1.0, np.max(c)):
            break
    return last


def _numeric_map(frame: _Frame, which: str, coeff: str, t0: float, factor: float):
    """Map with derivative factor * exp(-integral_{t0}^t coeff) along a transversal path.

    Everything is expanded in the path parameter s, where a sharply bent
    warp of the level values stays smooth; levels are located by bisection.
    """
    point, (dx, dy), tmin, tmax, decreasing = _diagonal_path(frame, which)
    gx, gy = which + "x", which + "y"

    def to_s(t):
        t = np.asarray(t, dtype=float)

        def F(sv):
            (val,) = frame.values(*point(sv), which)
            return (t - val) if decreasing else (val - t)

        lo = np.zeros_like(t)
        return _bisect(F, lo, np.ones_like(t), F(lo))

    def rate(sv):
        a, b = frame.values(*point(sv), gx, gy)
        return a * dx + b * dy

    def coeff_rate(sv):
        (c,) = frame.values(*point(sv), coeff)
        return c * rate(sv)

    s0 = float(to_s(t0))
    A = _chebyshev(coeff_rate, (0.0, 1.0)).integ(lbnd=s0)
    d_ser = _chebyshev(lambda sv: factor * np.exp(-A(sv)), (0.0, 1.0))
    core = _chebyshev(lambda sv: d_ser(sv) * rate(sv), (0.0, 1.0)).integ(lbnd=s0)
    return MonotoneMap("chebyshev", 1.0, t0, series=core, derivative_series=d_ser,
                       interval=(tmin, tmax), path=to_s)


def _closed_map(k: float, exact: Expr, t0: float, factor: float, interval) -> MonotoneMap:
    core = _power_core(k, exact)
    ev = Evaluator(0.0, 0.0, variables={"t": t0})
    c0 = float(ev(core))
    d0 = float(ev(raw_diff(core, T)))
    scale = factor / d0
    return MonotoneMap("closed", scale, t0 - scale * c0, core=core, interval=interval)


def recalibrate(u, v=None, domain: Box | None = None, params=None, functions=None,
                samples: int = 200, seed: int = DEFAULT_SEED, check: bool = True) -> Recalibration:
    """Monotone maps Phi, Psi with J(Phi o u, Psi o v) = 1.

    Phi' = exp(-A), A' = alpha, pinned by Phi(t0) = t0 and Phi'(t0) = 1 at the
    centre level t0 = u(centre); Psi(s0) = s0 and Psi'(s0) = 1 / J(centre), which
    is the only choice compatible with a unit Jacobian.
    """
    pair = _pair(u, v, domain, params, functions)
    fr = _Frame(pair)
    split = None
    if check:
        split = s_condition_smooth(pair.u, pair.v, pair.box, params=pair.params,
                                   functions=pair.functions, seed=seed)
        if not split.passed:
            raise SConditionFailed(f"the pair fails the splitting test ({split.verdict.kind}, "
                                   f"residual {max(split.alpha_residual, split.beta_residual):.3g})")
    cx, cy = pair.box.center
    t0, s0, jc = (float(a) for a in fr.values(cx, cy, "u", "v", "J"))
    if not (np.isfinite(jc) and abs(jc) > 1e-12):
        raise SingularFrame("J vanishes at the centre of the box")
    maps = []
    for which, coeff, lvl, factor in (("u", "alpha", t0, 1.0), ("v", "beta", s0, 1.0 / jc)):
        closed = _closed_coefficient(getattr(fr, coeff), getattr(pair, which), pair.params,
                                     pair.positive)
        if closed is not None:
            (vals,) = fr.values(np.linspace(pair.box.xlo, pair.box.xhi, 33)[None, :],
                                np.linspace(pair.box.ylo, pair.box.yhi, 33)[:, None], which)
            interval = (float(np.nanmin(vals)), float(np.nanmax(vals)))
            maps.append(_closed_map(closed[0], closed[1], lvl, factor, interval))
        else:
            maps.append(_numeric_map(fr, which, coeff, lvl, factor))
    phi, psi = maps

    pts = pair.box.sample(samples, seed)
    uu, vv, jj = fr.values(pts[:, 0], pts[:, 1], "u", "v", "J")
    inside = ((phi.interval[0] <= uu) & (uu <= phi.interval[1])
              & (psi.interval[0] <= vv) & (vv <= psi.interval[1]) & np.isfinite(jj))
    jnew = phi.derivative(uu[inside]) * psi.derivative(vv[inside]) * jj[inside]
    residual = float(np.max(np.abs(jnew - 1))) if jnew.size else float("nan")
    if not np.all(phi.derivative(uu[inside]) > 0) or not np.all(psi.derivative(vv[inside]) * np.sign(jc) > 0):
        raise SingularCalibration("the recalibrating maps are not monotone on the sampled range")
    notes = ()
    if abs(jc - 1) > 1e-12:
        notes = (f"Psi'(s0) = 1/J(centre) = {1 / jc:.12g} so that the recalibrated Jacobian is 1",)
    return Recalibration(phi, psi, residual, int(np.sum(inside)), seed, (t0, s0), split, notes)


# -------------------------------------------------------- transversal families

@dataclass
class LinearFamily:
    u: Expr
    a: Expr
    c: Expr
    constraint: str

    def to_dict(self) -> dict:
        return {"u": to_text(self.u), "a": to_text(self.a), "c": to_text(self.c),
                "constraint": self.constraint}


def linear_family(c, y_range: tuple = (0.5, 5.0), samples: int = 200) -> LinearFamily:
    """General u with J(u, c(y)) = 1: u = a(y) x + b(y) with a = 1/c'."""
    c = _as_expr(c)
    if any(isinstance(s, Var) and s.name == "x" for s in free_symbols(c)):
        raise DomainError("c must be a function of y alone")
    cp = normalize(raw_diff(c, Y), y_range[0] > 0)
    ys = np.linspace(y_range[0], y_range[1], samples)
    vals = _array(Evaluator(0.0, ys, strict=False)(cp), ys.shape)
    if not np.all(np.isfinite(vals)) or np.any(vals == 0) or np.any(np.sign(vals) != np.sign(vals[0])):
        raise SingularCalibration(f"c'(y) = {to_text(cp)} vanishes or is undefined on "
                                  f"[{y_range[0]}, {y_range[1]}]")
    a = normalize(1 / cp, y_range[0] > 0)
    u = a * X + Fn("b", 0, Y)
    return LinearFamily(u, a, c, "a(y)*c'(y) = 1, b arbitrary")


def _area_preserving(Xe: Expr, Ye: Expr, positive: bool) -> bool:
    j = normalize(raw_diff(Xe, X) * raw_diff(Ye, Y) - raw_diff(Xe, Y) * raw_diff(Ye, X), positive)
    return j == Num(1)


def transversal_from_curves(f0, f1, change_of_vars: tuple | None = None,
                            domain: Box | None = None, reference_v=None,
                            samples: int = 400) -> Expr:
    """The potential u = (X - f0(Y)) / (f1(Y) - f0(Y)) whose 0- and 1-levels are
    X = f0(Y) and X = f1(Y), written back in x, y.

    ``f0``, ``f1`` are expressions in y (standing for Y); ``change_of_vars`` is
    an area-preserving pair (X, Y) in which the reference family is Y = const.
    """
    f0, f1 = _as_expr(f0), _as_expr(f1)
    Xe, Ye = (X, Y) if change_of_vars is None else tuple(_as_expr(e) for e in change_of_vars)
    positive = domain is None or box_is_positive(domain)
    if change_of_vars is not None and not _area_preserving(Xe, Ye, positive):
        raise DomainError("the change of variables (X, Y) is not area preserving")
    if reference_v is not None:
        rv = _as_expr(reference_v)
        cross = normalize(raw_diff(Ye, X) * raw_diff(rv, Y) - raw_diff(Ye, Y) * raw_diff(rv, X),
                          positive)
        if cross != Num(0):
            raise DomainError("Y is not constant on the level curves of the reference potential")
    gap = normalize(f1 - f0, positive)
    if gap == Num(0):
        raise CrossingCurves("the two curves coincide")
    if domain is not None:
        pts = domain.sample(samples, DEFAULT_SEED)
        yv = _array(Evaluator(pts[:, 0], pts[:, 1], strict=False)(Ye), (samples,))
        gv = _array(Evaluator(0.0, yv, strict=False)(gap), (samples,))
        if not np.all(np.isfinite(gv)) or np.any(gv == 0) or np.any(np.sign(gv) != np.sign(gv[0])):
            raise CrossingCurves("the two curves meet (or are undefined) inside the domain box")
    g0 = substitute(f0, Y, Ye)
    g1 = substitute(f1, Y, Ye)
    return normalize((Xe - g0) / (g1 - g0), positive)


def _trace(fn: Expr, level: float, box: Box, lines: np.ndarray, params, functions) -> np.ndarray:
    pair = _Pair(fn, fn, box, dict(params or {}), dict(functions or {}))
    fr = _Frame.__new__(_Frame)
    fr.pair = pair
    return _level_points(fr, "u", np.array([level]), lines, grid=257)[0]


def uniqueness_check(reference_v, constructed_u, target_family, domain: Box,
                     tol: float = GEOM_TOL, levels: int = 9, lines: int = 101,
                     params=None, functions=None, seed: int = DEFAULT_SEED) -> Verdict:
    """Do the level sets of ``constructed_u`` coincide with level sets of ``target_family``?

    Each sampled level curve of ``constructed_u`` is traced as x(y) on a grid of
    lines y = const; the level of ``target_family`` through its middle point is
    traced likewise and the largest horizontal gap is the distance.
    """
    cu, tf = _as_expr(constructed_u), _as_expr(target_family)
    positive = box_is_positive(domain, params)
    symbolic = False
    try:
        with work_budget(SYMBOLIC_BUDGET):
            cross = normalize(raw_diff(cu, X) * raw_diff(tf, Y) - raw_diff(cu, Y) * raw_diff(tf, X),
                              positive)
        symbolic = cross == Num(0)
    except (BudgetExceeded, RecursionError, ZeroDivisionError):
        pass
    ys = np.linspace(domain.ylo, domain.yhi, lines)
    pts = domain.sample(levels, seed)
    cvals = _array(Evaluator(pts[:, 0], pts[:, 1], params, functions, strict=False)(cu), (levels,))
    worst, witness, traced = 0.0, None, 0
    for c in np.sort(cvals[np.isfinite(cvals)]):
        xs = _trace(cu, float(c), domain, ys, params, functions)
        ok = np.isfinite(xs)
        if np.sum(ok) < 3:
            continue
        mid = np.nonzero(ok)[0][np.sum(ok) // 2]
        tau = float(_array(Evaluator(xs[mid], ys[mid], params, functions, strict=False)(tf), ()))
        xt = _trace(tf, tau, domain, ys[ok], params, functions)
        gaps = np.abs(xt - xs[ok])
        gaps = np.where(np.isfinite(gaps), gaps, np.inf)
        g = float(np.max(gaps))
        traced += 1
        if g > worst:
            worst = g
            k = int(np.argmax(gaps))
            witness = {"level": float(c), "target_level": tau, "y": float(ys[ok][k]),
                       "x_constructed": float(xs[ok][k]), "x_target": float(xt[k]), "gap": g}
    extra = {"levels_traced": traced, "max_horizontal_gap": worst, "geometric_tolerance": tol}
    if reference_v is not None:
        rep = s_condition_smooth(cu, _as_expr(reference_v), domain, params=params,
                                 functions=functions, seed=seed)
        extra["transversal_to_reference"] = rep.verdict.kind
    if symbolic:
        return Verdict(PROVED, tolerance=tol, samples=traced, seed=seed, residual=worst,
                       detail="gradients are parallel identically", extra=extra)
    if traced == 0:
        return Verdict(INCONCLUSIVE, tolerance=tol, samples=0, seed=seed,
                       detail="no level curve could be traced across the box", extra=extra)
    if worst > tol:
        return Verdict(REFUTED, tolerance=tol, samples=traced, seed=seed, witness=witness,
                       residual=worst, extra=extra)
    return Verdict(VERIFIED, tolerance=tol, samples=traced, seed=seed, residual=worst, extra=extra)
