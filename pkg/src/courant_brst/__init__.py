"""Exact symbolic computation with Courant algebroids presented as cubic Hamiltonians."""

from .brackets import OddChart, derived_poisson, poisson_bracket, schouten_bracket
from .courant import (
    CourantData,
    SectionExpr,
    TransitionMap,
    anchor_apply,
    axiom_report,
    brst_theta,
    cartan_theta,
    data_from_theta,
    dorfman,
    severa_curvature,
    standard_chart,
    standard_differential,
    structure_obstruction,
    theta0,
    theta_from_data,
    transform,
    twist_by_2form,
    twist_by_3form,
)
from .superpoly import ChartContext, Context, GradedVar, Superpolynomial

__version__ = "0.1.0"
