"""Symbolic core: expression trees, normal form, calculus, evaluation, equivalence."""
from .calculus import diff, grad, raw_diff, substitute, substitute_many
from .equivalence import INCONCLUSIVE, PROVED, REFUTED, VERIFIED, Verdict, equivalent
from .expr import (
    EULER, ONE, T, X, Y, ZERO, Exp, Expr, Field, Fn, Ln, Num, Param, Power,
    Product, Sum, Var, as_expr, contains, free_symbols,
)
from .normal import BudgetExceeded, is_zero, normalize, together, work_budget
from .numeric import DEFAULT_SEED, Box, Evaluator, Point, evaluate, evaluate_array
from .parse import parse_expr
from .printing import to_latex, to_text

__all__ = [
    "Expr", "Num", "Var", "Param", "Sum", "Product", "Power", "Ln", "Exp", "Fn",
    "Field", "EULER", "X", "Y", "T", "ZERO", "ONE", "as_expr", "contains",
    "free_symbols", "diff", "grad", "raw_diff", "substitute", "substitute_many",
    "normalize", "is_zero", "together", "work_budget", "BudgetExceeded", "Point", "Box", "Evaluator", "evaluate",
    "evaluate_array", "DEFAULT_SEED", "parse_expr", "to_text", "to_latex",
    "Verdict", "equivalent", "PROVED", "VERIFIED", "REFUTED", "INCONCLUSIVE",
]
