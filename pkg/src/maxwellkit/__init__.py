"""maxwellkit: thermodynamic derivative calculus, identity checking and S-condition tools."""
from .bracket import (
    bracket_reduce, energy_differential, enumerate_all, maxwell_residuals, primitive_table,
    second_reduce, triple_reduce,
)
from .errors import MaxwellKitError
from .identity import derived, parse_identity, verify
from .models import GasModel, catalog, get_model
from .samuelson import (
    recalibrate, s_condition_area, s_condition_smooth, transversal_from_curves, uniqueness_check,
)

__version__ = "0.1.0"

__all__ = [
    "bracket_reduce", "triple_reduce", "second_reduce", "energy_differential", "enumerate_all",
    "maxwell_residuals", "primitive_table", "MaxwellKitError", "derived", "parse_identity",
    "verify", "GasModel", "catalog", "get_model", "recalibrate", "s_condition_area",
    "s_condition_smooth", "transversal_from_curves", "uniqueness_check",
]
