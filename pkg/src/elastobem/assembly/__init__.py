"""Discrete boundary integral operators (collocation and Galerkin)."""
from .operators import (
    CollocationPoints,
    GalerkinRequest,
    QuadConfig,
    assemble_collocation_blocks,
    assemble_galerkin_blocks,
    index_map,
    mass_p0_p1,
)
from .system import (
    BoundaryOperatorSet,
    MixedTraceData,
    assemble,
    assemble_collocation,
    assemble_fmm,
    assemble_galerkin,
    free_term_matrix,
    integral_free_term,
    mass_sparse,
)
