"""Stabilizer-free weak Galerkin solver for elliptic interface problems on polygonal meshes."""

from .assembly import GlobalSystem, assemble_system, build_dof_map
from .kernels import BACKEND
from .mesh import Cell, Mesh, build_mesh, generate_mesh
from .postprocess import StudyResult, compute_errors, convergence_rates, point_eval
from .problems import ProblemSpec, load_problem, problem_library
from .solver import SolveReport, solve_spd
from .weak_gradient import ElementCache, LocalElement, gradient_degree

__all__ = [
    "BACKEND",
    "Cell",
    "ElementCache",
    "GlobalSystem",
    "LocalElement",
    "Mesh",
    "ProblemSpec",
    "SolveReport",
    "StudyResult",
    "assemble_system",
    "build_dof_map",
    "build_mesh",
    "compute_errors",
    "convergence_rates",
    "generate_mesh",
    "gradient_degree",
    "load_problem",
    "point_eval",
    "problem_library",
    "solve_spd",
]

__version__ = "0.1.0"
