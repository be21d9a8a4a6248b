"""A material, a cross-section and a solver choice bundled together."""

from dataclasses import dataclass, field

import numpy as np

from .bvp import solve_response
from .energy import renormalized_energy
from .force import force_explicit, forces
from .model import Material, UnitDisk, validate_system
from .quadrature import DEFAULT_AREA_SPEC, QuadratureSpec


@dataclass(frozen=True)
class Problem:
    material: Material = field(default_factory=Material)
    geom: object = field(default_factory=UnitDisk)
    backend: str = "auto"
    resolution: float = 0.05
    area_spec: QuadratureSpec = DEFAULT_AREA_SPEC

    def validate(self, sys, raise_on_error=True):
        return validate_system(self.geom, sys, self.material, raise_on_error)

    def solve(self, sys, mesh=None):
        return solve_response(self.material, sys, self.geom, self.backend, self.resolution,
                              mesh=mesh)

    def energy(self, sys, R=None, response=None):
        response = self.solve(sys) if response is None else response
        return renormalized_energy(self.material, sys, self.geom, response, R, self.area_spec)

    def forces(self, sys, response=None, R=None, routes=("contour", "explicit")):
        response = self.solve(sys) if response is None else response
        return forces(self.material, sys, response, self.geom, R, routes)

    def explicit_forces(self, sys, response=None):
        response = self.solve(sys) if response is None else response
        return np.array([force_explicit(self.material, sys, response, i) for i in range(len(sys))])
