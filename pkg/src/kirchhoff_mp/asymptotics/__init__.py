"""Limit profiles, blow-up diagnostics and parameter continuation."""

from .blowup import BlowupProfile, blowup_diagnose, count_local_maxima
from .continuation import (
    ContinuationRecord,
    ContinuationStep,
    continue_b,
    continue_c,
    continue_rho,
    fit_convergence_order,
    h1_distance,
)
from .soliton import SolitonProfile, closed_form_1d, solve_soliton

__all__ = [
    "BlowupProfile",
    "ContinuationRecord",
    "ContinuationStep",
    "SolitonProfile",
    "blowup_diagnose",
    "closed_form_1d",
    "continue_b",
    "continue_c",
    "continue_rho",
    "count_local_maxima",
    "fit_convergence_order",
    "h1_distance",
    "solve_soliton",
]
