"""The ``maxwell-kit`` command line.

Results go to standard output, diagnostics to standard error.  Exit codes:
0 success, 1 refuted (or S-condition fails), 2 usage or parse error,
3 degenerate input or domain error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any

from . import __version__
from .bracket import (
    ENERGY_NAMES, SYMBOLS, bracket_reduce, code_of, energy_differential, enumerate_all,
    parse_bracket, parse_second, parse_triple, primitive_table, second_reduce, triple_reduce,
)
from .errors import MaxwellKitError, ParseError
from .symcore import DEFAULT_SEED, Box, Expr, parse_expr, to_latex, to_text, together

SEED_ENV = "MAXWELLKIT_SEED"
EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(MaxwellKitError):
    exit_code = EXIT_USAGE


# ------------------------------------------------------------------ output

def _convert(obj: Any, fmt: str) -> Any:
    if isinstance(obj, Expr):
        return to_latex(obj) if fmt == "latex" else to_text(obj)
    if isinstance(obj, dict):
        return {str(k): _convert(v, fmt) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_convert(v, fmt) for v in obj]
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _convert(obj.item(), fmt)      # numpy scalars
    return obj


def _plain(obj: Any, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines += _plain(v, indent + 1)
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v:
                sub = _plain(v, indent + 1)
                lines.append(f"{pad}- " + sub[0].lstrip())
                lines += sub[1:]
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _scalar(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (dict, list)):
        return "{}" if isinstance(v, dict) else "[]"
    return str(v)


def emit(payload: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    data = _convert(payload, fmt)
    if fmt == "json":
        out.write(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    else:
        out.write("\n".join(_plain(data)) + "\n")


# ---------------------------------------------------------------- helpers

def _params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            val = float(value)
        except ValueError:
            raise UsageError(f"--param {key}: {value!r} is not a number") from None
        if not math.isfinite(val):
            raise UsageError(f"--param {key}: value must be finite")
        out[key] = val
    return out


def _model(args):
    """Catalog model or model file, with --param overrides applied."""
    from .modelfile import load_model_file
    from .models import get_model
    sel = args.model
    if sel is None or sel == "generic":
        if args.param:
            raise UsageError("--param needs a concrete --model")
        return None
    if os.path.exists(sel) or os.sep in sel or sel.endswith(".model"):
        try:
            m = load_model_file(sel)
        except OSError as exc:
            raise UsageError(f"cannot read model file {sel!r}: {exc.strerror}") from None
    else:
        try:
            m = get_model(sel)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    overrides = _params(args.param)
    if overrides:
        unknown = sorted(set(overrides) - set(m.params))
        if unknown:
            raise UsageError(f"model {m.name} has no parameter(s) {', '.join(unknown)}; "
                             f"known: {', '.join(m.params) or 'none'}")
        m = m.with_params(**overrides)
    return m


def _domain(text: str | None, default: Box | None = None) -> Box | None:
    if text is None:
        return default
    parts = text.replace(";", ",").split(",")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        nums = []
    if len(nums) != 4:
        raise UsageError(f"--domain expects XLO,XHI,YLO,YHI, got {text!r}")
    return Box(*nums)


def _expr(text: str, what: str) -> Expr:
    try:
        return parse_expr(text)
    except ParseError as exc:
        raise ParseError(f"{what}: {exc.message}", exc.text, exc.pos, exc.expected) from None


def _table(args):
    m = _model(args)
    return m, primitive_table(m)


def _model_label(m) -> str:
    return "generic" if m is None else m.name


DEFAULT_BOX = Box(0.5, 5.0, 0.5, 5.0)


def _uv(args):
    """(u, v, box, params, functions, label) from --model or --u/--v."""
    if args.u or args.v:
        if args.model is not None:
            raise UsageError("give either --model or --u/--v, not both")
        if not (args.u and args.v):
            raise UsageError("--u and --v must be given together")
        u, v = _expr(args.u, "--u"), _expr(args.v, "--v")
        return u, v, _domain(args.domain, DEFAULT_BOX), _params(args.param), {}, None
    if args.model is None:
        raise UsageError("give --model or --u and --v")
    m = _model(args)
    return m.u, m.v, _domain(args.domain, m.box), dict(m.params), dict(m.functions), m.name


# -------------------------------------------------------------- subcommands

def cmd_models(args) -> tuple[dict, int]:
    from .models import MODEL_NAMES, get_model
    if args.action == "list":
        rows = []
        for name in MODEL_NAMES + ("ideal_raw",):
            m = get_model(name)
            rows.append({"name": name, "calibrated": m.calibrated, "params": dict(m.params),
                         "description": m.description})
        return {"models": rows}, EXIT_OK
    if not args.name:
        raise UsageError("models show needs a model name or file")
    args.model = args.name
    m = _model(args)
    info = m.summary()
    info["u"], info["v"] = m.u, m.v
    return info, EXIT_OK


def cmd_derive(args) -> tuple[dict, int]:
    m, t = _table(args)
    text = args.expression.strip()
    if text.startswith("["):
        b = parse_bracket(text)
        value = bracket_reduce(b, t)
        key = {"bracket": "[{},{};{},{}]".format(*b)}
    else:
        tr = parse_triple(text)
        value = triple_reduce(tr, t)
        key = {"triple": "({},{},{})".format(*tr),
               "meaning": f"(d{SYMBOLS[tr[0]]}/d{SYMBOLS[tr[1]]})_{SYMBOLS[tr[2]]}"}
    return {"model": _model_label(m), **key, "value": together(value)}, EXIT_OK


def cmd_derive2(args) -> tuple[dict, int]:
    m, t = _table(args)
    tr, d, e = parse_second(args.expression)
    value = second_reduce(tr, d, e, t)
    return {"model": _model_label(m), "second": "(({},{},{}),{},{})".format(*tr, d, e),
            "value": together(value)}, EXIT_OK


def cmd_energy(args) -> tuple[dict, int]:
    code = code_of(args.which)
    if code not in ENERGY_NAMES:
        raise UsageError(f"{args.which!r} is not an energy function; use E13, E14, E23 or E24")
    m, t = _table(args)
    dx, dy = energy_differential(code, t)
    return {"model": _model_label(m), "energy": ENERGY_NAMES[code], "symbol": SYMBOLS[code],
            "dx": together(dx), "dy": together(dy)}, EXIT_OK


def cmd_table(args) -> tuple[dict, int]:
    from .gallimaufry import check_fixtures
    name = args.model or "generic"
    if name != "generic":
        from .models import get_model
        try:
            name = get_model(name).name
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    results = check_fixtures(name)
    if not results:
        raise UsageError(f"no printed table exists for model {name!r}")
    rows = [r.to_dict() for r in results]
    counts = {s: sum(r["status"] == s for r in rows)
              for s in ("match-symbolic", "match-numeric", "mismatch")}
    unexpected = [r["entry"] for r in rows if r["status"] == "mismatch" and not r["known_typo"]]
    return ({"model": name, "rows": rows, "counts": counts, "unexpected_mismatches": unexpected},
            EXIT_REFUTED if unexpected else EXIT_OK)


def _identities(args) -> list[str]:
    if args.file:
        try:
            with open(args.file, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read {args.file!r}: {exc.strerror}") from None
        out = [ln.split("#", 1)[0].strip() for ln in lines]
        return [ln for ln in out if ln]
    if not args.identity:
        raise UsageError("verify needs an IDENTITY or --file")
    return [args.identity]


def cmd_verify(args) -> tuple[dict, int]:
    from .identity import GENERIC, verify
    if args.generic and args.model:
        raise UsageError("give either --generic or --model")
    target = GENERIC if args.generic or not args.model else _model(args)
    results = []
    for text in _identities(args):
        v = verify(text, target, tol=args.tol or 1e-9, seed=args.seed)
        d = v.to_dict()
        row = {"identity": d.pop("identity"), "mode": d.pop("mode"), "verdict": d.pop("verdict"),
               "seed": d.pop("seed")}
        for k in ("witness", "residual", "detail"):
            if d.get(k) is not None:
                row[k] = d[k]
        results.append(row)
    code = EXIT_OK if all(r["verdict"] in ("ProvedSymbolic", "VerifiedNumeric")
                          for r in results) else EXIT_REFUTED
    payload = results[0] if len(results) == 1 and not args.file else {"results": results}
    return payload, code


def cmd_check_s(args) -> tuple[dict, int]:
    from .samuelson import AREA_TOL, SPLIT_TOL, s_condition_area, s_condition_smooth
    u, v, box, params, functions, label = _uv(args)
    out: dict = {"model": label, "u": u, "v": v, "domain": box.as_dict(), "seed": args.seed}
    ok = True
    run_smooth = args.smooth or not args.area
    run_area = args.area or not args.smooth
    if run_smooth:
        rep = s_condition_smooth(u, v, box, tol=args.tol or SPLIT_TOL, seed=args.seed,
                                 params=params, functions=functions)
        out["smooth"] = rep.to_dict()
        ok &= rep.passed
    if run_area:
        verdict = s_condition_area(u, v, domain=box, tol=args.tol or AREA_TOL, params=params,
                                   functions=functions, resolution=args.resolution)
        out["area"] = {"verdict": verdict.kind, **verdict.to_dict()}
        out["area"].pop("seed", None)
        ok &= verdict.passed
    out["passed"] = bool(ok)
    return out, EXIT_OK if ok else EXIT_REFUTED


def cmd_recalibrate(args) -> tuple[dict, int]:
    from .samuelson import recalibrate
    u, v, box, params, functions, label = _uv(args)
    rec = recalibrate(u, v, box, params=params, functions=functions, seed=args.seed)
    out = {"model": label, "u": u, "v": v, "domain": box.as_dict(), **rec.to_dict()}
    for key, m in (("phi", rec.phi), ("psi", rec.psi)):
        e = m.expr()
        if e is not None:
            out[key]["expr"] = e
    return out, EXIT_OK


def _curve(text: str, flag: str) -> Expr:
    lhs, sep, rhs = text.partition("=")
    if not sep or lhs.strip() not in ("x", "X"):
        raise UsageError(f"{flag} expects x=EXPR(y), got {text!r}")
    return _expr(rhs, flag)


def _vars(items) -> tuple[Expr, Expr] | None:
    if not items:
        return None
    got = {}
    for item in items:
        name, sep, rhs = item.partition("=")
        name = name.strip()
        if not sep or name not in ("X", "Y"):
            raise UsageError(f"--vars expects X=EXPR Y=EXPR, got {item!r}")
        got[name] = _expr(rhs, f"--vars {name}")
    if set(got) != {"X", "Y"}:
        raise UsageError("--vars needs both X=EXPR and Y=EXPR")
    return got["X"], got["Y"]


def cmd_transversal(args) -> tuple[dict, int]:
    from .samuelson import s_condition_smooth, transversal_from_curves, uniqueness_check
    v = _expr(args.v, "--v")
    f0, f1 = _curve(args.curve0, "--curve0"), _curve(args.curve1, "--curve1")
    cov = _vars(args.vars)
    box = _domain(args.domain, DEFAULT_BOX)
    u = transversal_from_curves(f0, f1, cov, box, v)
    out: dict = {"v": v, "curve0": f0, "curve1": f1, "u": u, "domain": box.as_dict()}
    if cov is not None:
        out["vars"] = {"X": cov[0], "Y": cov[1]}
    rep = s_condition_smooth(u, v, box, seed=args.seed)
    out["s_condition"] = rep.to_dict()
    code = EXIT_OK if rep.passed else EXIT_REFUTED
    if args.target:
        target = _expr(args.target, "--target")
        verdict = uniqueness_check(v, u, target, box, seed=args.seed)
        out["uniqueness"] = {"target": target, **verdict.to_dict()}
        if not verdict.passed:
            code = EXIT_REFUTED
    return out, code


def cmd_census(args) -> tuple[dict, int]:
    m, t = _table(args)
    c = enumerate_all(t, brackets=True, second=args.second)
    out = c.to_dict()
    out["expected"] = {"triples": 336, "brackets": 1680}
    if args.second:
        out["expected"]["second_derivatives"] = 18816
    return out, EXIT_OK


# ------------------------------------------------------------------ parser

def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("plain", "latex", "json"), default="plain")
    common.add_argument("--seed", type=int, default=None,
                        help=f"sampling seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--param", action="append", metavar="NAME=VALUE",
                        help="override a model parameter (repeatable)")
    common.add_argument("--tol", type=float, default=None, help="numeric tolerance")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads (results do not depend on it)")

    p = argparse.ArgumentParser(prog="maxwell-kit",
                                description="Thermodynamic derivative calculus and S-condition tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(func=fn)
        return sp

    sp = add("models", cmd_models, "list the catalog or show one model")
    sp.add_argument("action", choices=("list", "show"))
    sp.add_argument("name", nargs="?")
    sp.add_argument("--model", default=None, help=argparse.SUPPRESS)

    for name, fn, meta, help_text in (
        ("derive", cmd_derive, "(i,j,k)", "reduce a triple (i,j,k) or bracket [a,b;c,d]"),
        ("derive2", cmd_derive2, "((i,j,k),d,e)", "reduce a second derivative ((i,j,k),d,e)"),
    ):
        sp = add(name, fn, help_text)
        sp.add_argument("expression", metavar=meta)
        sp.add_argument("--model", default=None, help="catalog name, model file or 'generic'")

    sp = add("energy", cmd_energy, "exact differential of an energy function")
    sp.add_argument("which", metavar="E13|E14|E23|E24")
    sp.add_argument("--model", default=None)

    sp = add("table", cmd_table, "regenerate a printed formula table with match annotations")
    sp.add_argument("--model", default=None)

    sp = add("verify", cmd_verify, "verify a thermodynamic identity")
    sp.add_argument("identity", nargs="?")
    sp.add_argument("--model", default=None)
    sp.add_argument("--generic", action="store_true", help="abstract f, g with J = 1")
    sp.add_argument("--file", default=None, help="identities one per line, # comments")

    for name, fn, help_text in (("check-s", cmd_check_s, "test the S-condition"),
                                ("recalibrate", cmd_recalibrate, "canonical recalibration")):
        sp = add(name, fn, help_text)
        sp.add_argument("--model", default=None)
        sp.add_argument("--u", default=None)
        sp.add_argument("--v", default=None)
        sp.add_argument("--domain", default=None, metavar="XLO,XHI,YLO,YHI")
        if name == "check-s":
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--area", action="store_true", help="area test only")
            g.add_argument("--smooth", action="store_true", help="smooth splitting test only")
            sp.add_argument("--resolution", type=_positive_int, default=None)

    sp = add("transversal", cmd_transversal, "S-transversal potential through two curves")
    sp.add_argument("--v", required=True)
    sp.add_argument("--curve0", required=True, metavar="x=EXPR(y)")
    sp.add_argument("--curve1", required=True, metavar="x=EXPR(y)")
    sp.add_argument("--vars", nargs=2, default=None, metavar=("X=EXPR", "Y=EXPR"))
    sp.add_argument("--domain", default=None, metavar="XLO,XHI,YLO,YHI")
    sp.add_argument("--target", default=None, help="compare level sets with this potential")

    sp = add("census", cmd_census, "enumerate all triples and brackets")
    sp.add_argument("--model", default=None)
    sp.add_argument("--second", action="store_true", help="also the 18,816 second derivatives")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        payload, code = args.func(args)
    except MaxwellKitError as exc:
        print(f"maxwell-kit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ZeroDivisionError as exc:
        print(f"maxwell-kit: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    emit(payload, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
