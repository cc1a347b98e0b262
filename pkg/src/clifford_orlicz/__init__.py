"""Clifford-valued analysis on gridded domains with Orlicz-space norms."""
from .clifford import (
    CliffordError,
    Multivector,
    clifford_norm,
    conjugate,
    embed,
    kelvin_inverse,
    mv_mul,
    real_part,
)
from .grid import (
    Ball,
    BoundaryField,
    BoundaryMesh,
    Box,
    GeometryError,
    GridDomain,
    MultivectorField,
    build_ball,
    build_box,
    build_disc,
    dirac_apply,
    dirac_bar_apply,
    trace_restrict,
    zero_trace_error,
)
from .orlicz import (
    ConvergenceError,
    ExpMinusOne,
    NormConfig,
    OrliczFunction,
    Power,
    PowerOverP,
    clifford_luxembourg_norm,
    conjugate_psi,
    luxembourg_norm,
    slobodeckji_norm,
    sobolev_norm,
)
from .transforms import (
    KernelConfig,
    NearBoundaryError,
    borel_pompeiu_residual,
    cauchy_boundary,
    fundamental_solution,
    teodorescu,
)
from .analysis import (
    LinearSolverConfig,
    SolverError,
    bergman_decompose,
    dual_norm_lower_bound,
    mapping_probe,
    solve_first_order_bvp,
)

__version__ = "0.1.0"
