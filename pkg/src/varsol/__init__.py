"""Variational solitary waves for second-degree Lagrangians.

Build a family L = c1*c4 + c3*u'' + c5, derive its fourth-order equation,
test variationality, and fit Gaussian (plus cosine tail) trial functions.
"""

__version__ = "0.1.0"

from .accuracy import ResidualGrid, ansatz_jet, quadrature_action, residual_scan
from .averaging import (AnsatzParams, ActionExpansion, ReducedAction, assemble_action, expand_density,
                        moment, select_kappa)
from .family import (CoefficientFamily, DegenerateFamilyError, Jet, NoOscillatoryTailError, el_polynomial,
                     el_residual, family_from_strings, lagrangian_partials, linearized_dispersion, preset,
                     with_params)
from .fels import FelsReport, build_F, fels_check
from .poly import MultiPoly, ParameterSet, ParseError, RationalFn, parse_poly
from .solver import StartGrid, StationaryResult, classify_stationary, solve_embedded, solve_regular

__all__ = [
    "ActionExpansion", "AnsatzParams", "CoefficientFamily", "DegenerateFamilyError", "FelsReport", "Jet",
    "MultiPoly", "NoOscillatoryTailError", "ParameterSet", "ParseError", "RationalFn", "ReducedAction",
    "ResidualGrid", "StartGrid", "StationaryResult", "ansatz_jet", "assemble_action", "build_F",
    "classify_stationary", "el_polynomial", "el_residual", "expand_density", "family_from_strings",
    "fels_check", "lagrangian_partials", "linearized_dispersion", "moment", "parse_poly", "preset",
    "quadrature_action", "residual_scan", "select_kappa", "solve_embedded", "solve_regular", "with_params",
]
