"""Second-order cone programming: canonical form, cvxopt-backed solve, complex embedding."""
from .models import (
    ConeBlock,
    ConeKind,
    ConicProblem,
    ConicSolution,
    KKTResiduals,
    SolverError,
    SolverStatus,
)
from .services import ComplexEmbedding, ConicBuilder, cone_distance, embed_complex, kkt_residuals, solve

__all__ = [
    "ComplexEmbedding",
    "ConeBlock",
    "ConeKind",
    "ConicBuilder",
    "ConicProblem",
    "ConicSolution",
    "KKTResiduals",
    "SolverError",
    "SolverStatus",
    "cone_distance",
    "embed_complex",
    "kkt_residuals",
    "solve",
]
