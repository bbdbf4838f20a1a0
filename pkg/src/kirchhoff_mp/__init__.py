"""kirchhoff-mp public API."""

from .asymptotics import (
    BlowupProfile,
    ContinuationRecord,
    SolitonProfile,
    blowup_diagnose,
    closed_form_1d,
    continue_b,
    continue_c,
    continue_rho,
    fit_convergence_order,
    solve_soliton,
)
from .energy import EnergyReport, ProblemParams, energy, gradient, hessian_apply
from .errors import (
    CertificateViolation,
    ConfigError,
    ConvergenceError,
    GeometryNotCertified,
    InvariantViolation,
    KirchhoffError,
    SingularJacobianError,
)
from .geometry import GeometryCertificate, certify_geometry, initial_path, scaled_eigenfunction
from .grid import (
    DirichletSolver,
    Field,
    Grid,
    grad_norm_sq,
    h1_norm_sq,
    inner_l2,
    laplacian_apply,
    lp_integral,
    norm_l2_sq,
)
from .solve import (
    SolverConfig,
    deform_path,
    descend_to_minimum,
    mountain_pass_solve,
    mountain_pass_violations,
    quadratic_constant,
    refine_newton,
)
from .spectral import EigenPair, MorseReport, dirichlet_eigs, morse_index, projected_form
from .sphere import SphereOps
from .types import PathState, SolutionRecord

__all__ = [
    "BlowupProfile",
    "CertificateViolation",
    "ConfigError",
    "ContinuationRecord",
    "ConvergenceError",
    "DirichletSolver",
    "EigenPair",
    "EnergyReport",
    "Field",
    "GeometryCertificate",
    "GeometryNotCertified",
    "Grid",
    "InvariantViolation",
    "KirchhoffError",
    "MorseReport",
    "PathState",
    "ProblemParams",
    "SingularJacobianError",
    "SolitonProfile",
    "SolutionRecord",
    "SolverConfig",
    "SphereOps",
    "blowup_diagnose",
    "certify_geometry",
    "closed_form_1d",
    "continue_b",
    "continue_c",
    "continue_rho",
    "deform_path",
    "descend_to_minimum",
    "dirichlet_eigs",
    "energy",
    "fit_convergence_order",
    "grad_norm_sq",
    "gradient",
    "h1_norm_sq",
    "hessian_apply",
    "initial_path",
    "inner_l2",
    "laplacian_apply",
    "lp_integral",
    "morse_index",
    "mountain_pass_solve",
    "mountain_pass_violations",
    "norm_l2_sq",
    "projected_form",
    "quadratic_constant",
    "refine_newton",
    "scaled_eigenfunction",
    "solve_soliton",
]
