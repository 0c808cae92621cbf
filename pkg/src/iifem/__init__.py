"""Immersed-interface P1-nonconforming finite elements on uniform unfitted
triangular grids, with a mixed finite-volume companion that recovers an RT0
velocity locally from the pressure solve."""

from .analysis import (
    ConvergenceReport,
    discrete_function,
    fit_order,
    h1_broken_error,
    hdiv_error,
    interpolate,
    l2_error,
)
from .assembly import (
    DofMap,
    LinearSystem,
    apply_dirichlet,
    assemble_load,
    assemble_stiffness,
    build_dofmap,
    dump_matrix,
)
from .basis import (
    AffinePair,
    ElementBasis,
    SingularSystemError,
    build_bases,
    build_broken_basis,
    build_standard_basis,
    chord_flux_jump,
    evaluate,
    reference_determinant,
)
from .fvm import (
    RTVelocity,
    check_flux_continuity,
    dump_velocity,
    edge_flux,
    element_fluxes,
    element_mean_source,
    recover_velocities,
    recover_velocity,
)
from .geometry import (
    CutInfo,
    UnsupportedGeometryError,
    circle_levelset,
    classify_elements,
    cut_from_edge_points,
    edge_intersection,
)
from .mesh import Mesh, build_uniform_mesh, dump_mesh
from .problems import ProblemSpec, circle_r3_problem
from .solver import NotSPDError, SolveReport, cg_solve
from .study import StageError, StudyConfig, run_resolution, run_study

__all__ = [
    "AffinePair",
    "ConvergenceReport",
    "CutInfo",
    "DofMap",
    "ElementBasis",
    "LinearSystem",
    "Mesh",
    "NotSPDError",
    "ProblemSpec",
    "RTVelocity",
    "SingularSystemError",
    "SolveReport",
    "StageError",
    "StudyConfig",
    "UnsupportedGeometryError",
    "apply_dirichlet",
    "assemble_load",
    "assemble_stiffness",
    "build_bases",
    "build_broken_basis",
    "build_dofmap",
    "build_standard_basis",
    "build_uniform_mesh",
    "check_flux_continuity",
    "chord_flux_jump",
    "circle_levelset",
    "circle_r3_problem",
    "classify_elements",
    "cut_from_edge_points",
    "cg_solve",
    "discrete_function",
    "dump_matrix",
    "dump_mesh",
    "dump_velocity",
    "edge_flux",
    "edge_intersection",
    "element_fluxes",
    "element_mean_source",
    "evaluate",
    "fit_order",
    "h1_broken_error",
    "hdiv_error",
    "interpolate",
    "l2_error",
    "recover_velocities",
    "recover_velocity",
    "reference_determinant",
    "run_resolution",
    "run_study",
]

__version__ = "0.1.0"
