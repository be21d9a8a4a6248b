"""Numerical laboratory for screw dislocations under antiplane shear."""

from .bvp import (AnalyticDiskResponse, FiniteElementResponse, grad_u0, h0_eval, neumann_data,
                  solve_disk_analytic, solve_fem, solve_response)
from .dynamics import Trajectory, evolve, step
from .energy import (EnergyBreakdown, annulus_energy, core_coefficient, elastic_energy,
                     interaction_energy, regularized_energy, renormalized_energy, self_energy)
from .errors import (AdmissibilityError, BadCutRadius, BoundaryContact, ConfigError, CoreOverlap,
                     DislabError, InadmissiblePerturbation, MeshFailure, OutsideDomain,
                     QuadratureFailure, SingularPoint, SolverFailure, StepCollapse, WrongBackend)
from .force import (ForceReport, eshelby_apply, force_contour, force_explicit, forces,
                    grad_U_fd)
from .mesh import Mesh, generate_mesh, read_mesh, write_mesh
from .model import (Dislocation, DislocationSystem, Ellipse, Material, Polygon, UnitDisk,
                    validate_system)
from .problem import Problem
from .quadrature import QuadratureSpec
from .singular import SingularStrain, circulation, flux, k_eval, k_field

__version__ = "0.1.0"

__all__ = [
    "AnalyticDiskResponse", "FiniteElementResponse", "grad_u0", "h0_eval", "neumann_data",
    "solve_disk_analytic", "solve_fem", "solve_response",
    "Trajectory", "evolve", "step",
    "EnergyBreakdown", "annulus_energy", "core_coefficient", "elastic_energy",
    "interaction_energy", "regularized_energy", "renormalized_energy", "self_energy",
    "AdmissibilityError", "BadCutRadius", "BoundaryContact", "ConfigError", "CoreOverlap",
    "DislabError", "InadmissiblePerturbation", "MeshFailure", "OutsideDomain",
    "QuadratureFailure", "SingularPoint", "SolverFailure", "StepCollapse", "WrongBackend",
    "ForceReport", "eshelby_apply", "force_contour", "force_explicit", "forces", "grad_U_fd",
    "Mesh", "generate_mesh", "read_mesh", "write_mesh",
    "Dislocation", "DislocationSystem", "Ellipse", "Material", "Polygon", "UnitDisk",
    "validate_system", "Problem", "QuadratureSpec",
    "SingularStrain", "circulation", "flux", "k_eval", "k_field",
]
