"""Multiscale discontinuous Galerkin solvers for -eps^2 u'' - f(x) u = 0 in 1D."""

from .assembly import GlobalSystem, SolveConfig, assemble_global, matrix_stats
from .basis import ElementBasis, QuadratureRule, SpaceKind, quadrature_rule, wave_number
from .coefficients import CoefficientField, constant_field, expression_field, sin_plus_2
from .linsolve import ConditionReport, SingularSystemError, condition_estimate, solve
from .mesh import MeshPartition, element_midpoint, mesh_h, uniform_partition
from .solution import (
    DGSolution,
    ReferenceSolution,
    eval_solution,
    exact_plane_wave,
    generate_reference,
    l2_error,
    load_reference,
    save_reference,
)
from .trace import TraceParams, TraceValues, boundary_trace_left, boundary_trace_right, interior_trace, jump

__version__ = "0.1.0"
