"""Dense GMRES and RR-GMRES for singular systems with conditioning diagnostics."""

from .arnoldi import Breakdown, arnoldi_init, arnoldi_step, run_arnoldi
from .dense import ConvergenceError, SvdFactors, condition_number, jacobi_svd, spectral_norm
from .solvers import SolverConfig, check_bounds, gmres, rr_gmres
from .subspaces import (
    NotGroupMatrixError,
    classify,
    group_inverse,
    oblique_projector,
    pseudoinverse,
    solution_triple,
)

__all__ = [
    "Breakdown",
    "ConvergenceError",
    "NotGroupMatrixError",
    "SolverConfig",
    "SvdFactors",
    "arnoldi_init",
    "arnoldi_step",
    "check_bounds",
    "classify",
    "condition_number",
    "gmres",
    "group_inverse",
    "jacobi_svd",
    "oblique_projector",
    "pseudoinverse",
    "rr_gmres",
    "run_arnoldi",
    "solution_triple",
    "spectral_norm",
]
