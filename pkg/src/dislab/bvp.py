"""Boundary response ``u0``: the traction-correcting Neumann solution.

``u0`` solves ``div(L grad u) = 0`` in the cross-section with
``L(grad u + sum_i k_i) . n = 0`` on its boundary, normalized to zero mean.
Two backends:

* ``AnalyticDisk`` (unit disk, isotropic): ``grad u0`` is the strain of the
  image dislocations ``z* = z / |z|^2`` with moduli ``-b``.
* ``FiniteElement``: linear triangles on a graded mesh; the discrete problem
  minimizes ``int W(grad u) + sum_i int_{boundary} u L k_i . n`` subject to
  zero mean, solved by conjugate gradients.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from . import kernels
from .errors import OutsideDomain, SolverFailure, WrongBackend
from .mesh import Mesh, generate_mesh
from .model import UnitDisk, apply_L, energy_density
from .quadrature import gauss_legendre, star_integral
from .singular import k_field

# below this radius a dislocation counts as centered (its image is at infinity)
CENTER_TOL = 1e-14


def neumann_data(material, sys, y, n):
    """Neumann datum ``g = -L(sum_i k_i(y)) . n`` for ``u0`` at boundary points."""
    k = k_field(sys.positions, sys.burgers, material.lam, y)
    return -np.sum(apply_L(material, k) * np.asarray(n, dtype=float), axis=-1)


class BoundaryResponse:
    """Common query surface of both backends."""

    backend = None

    def grad(self, x):
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AnalyticDiskResponse(BoundaryResponse):
    material: object
    image_positions: np.ndarray
    image_burgers: np.ndarray
    constant: float = 0.0
    geom: object = field(default_factory=UnitDisk)

    backend = "analytic"

    def _check(self, x):
        if not np.all(self.geom.signed_distance(x) <= 1e-12):
            raise OutsideDomain("boundary response queried outside the closed unit disk")

    def grad(self, x, check=True):
        x = np.asarray(x, dtype=float)
        if check:
            self._check(x)
        if len(self.image_positions) == 0:
            return np.zeros_like(x)
        return k_field(self.image_positions, self.image_burgers, 1.0, x)

    def value(self, x, check=True):
        """``u0`` itself.  Each image angle is measured from the direction
        pointing at the disk, so the branch cut runs radially outward and
        ``u0`` is single valued on the closed disk."""
        x = np.asarray(x, dtype=float)
        if check:
            self._check(x)
        out = np.full(x.shape[:-1], self.constant)
        for zs, bs in zip(self.image_positions, self.image_burgers):
            d0 = -zs / np.hypot(*zs)
            y = x - zs
            ang = np.arctan2(d0[0] * y[..., 1] - d0[1] * y[..., 0], d0 @ np.moveaxis(y, -1, 0))
            out = out + bs / (2.0 * np.pi) * ang
        return out


def image_system(sys):
    pos = sys.positions
    b = sys.burgers
    r2 = np.sum(pos * pos, axis=1)
    keep = np.sqrt(r2) > CENTER_TOL
    return pos[keep] / r2[keep, None], -b[keep]


def solve_disk_analytic(material, sys, geom=None):
    geom = UnitDisk() if geom is None else geom
    if not isinstance(geom, UnitDisk):
        raise WrongBackend("the analytic backend needs the unit disk")
    if material.lam != 1.0:
        raise WrongBackend("the analytic backend needs an isotropic material (lambda = 1)")
    zs, bs = image_system(sys)
    resp = AnalyticDiskResponse(material, zs, bs, 0.0, geom)
    if len(zs):
        mean, _ = star_integral(lambda p: resp.value(p, check=False), geom.convex_pieces(),
                                geom.default_center(), 1.0)
        resp = AnalyticDiskResponse(material, zs, bs, -mean / geom.area(), geom)
    return resp


# ---------------------------------------------------------------------------
# finite elements


@dataclass(frozen=True, eq=False)
class FiniteElementResponse(BoundaryResponse):
    material: object
    mesh: Mesh
    u: np.ndarray
    elem_grad: np.ndarray
    vertex_grad: np.ndarray
    load: np.ndarray
    stiffness: object
    normalization: dict
    geom: object = None

    backend = "fem"

    def _locate(self, x):
        flat = np.asarray(x, dtype=float).reshape(-1, 2)
        tri, bary = self.mesh.locator.locate(flat)
        if np.any(tri < 0):
            raise OutsideDomain(f"{int(np.sum(tri < 0))} point(s) lie outside the mesh")
        return flat, tri, bary

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        _, tri, bary = self._locate(x)
        g = np.einsum("ma,mac->mc", bary, self.vertex_grad[self.mesh.triangles[tri]])
        return g.reshape(x.shape)

    def element_grad(self, x):
        x = np.asarray(x, dtype=float)
        _, tri, _ = self._locate(x)
        return self.elem_grad[tri].reshape(x.shape)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        _, tri, bary = self._locate(x)
        return np.sum(bary * self.u[self.mesh.triangles[tri]], axis=1).reshape(x.shape[:-1])

    def dirichlet_energy(self):
        """``int W(grad u0)``, exact for the piecewise-linear field."""
        return float(np.sum(self.mesh.areas * energy_density(self.material, self.elem_grad)))

    def boundary_work(self):
        """``sum_i int u0 L k_i . n`` on the mesh boundary (same quadrature as the load)."""
        return float(self.load @ self.u)


@lru_cache(maxsize=32)
def _cached_mesh(geom, resolution, positions, epsilon0, grade):
    return generate_mesh(geom, resolution, sources=np.array(positions).reshape(-1, 2),
                         epsilon0=epsilon0, grade=grade)


def mesh_for(geom, sys, resolution, grade=4.0):
    pos = tuple(map(tuple, np.round(sys.positions, 15)))
    return _cached_mesh(geom, float(resolution), pos, float(sys.epsilon0), float(grade))


def boundary_load(material, sys, mesh, order=8):
    """``f_a = int_{boundary} phi_a L(sum_i k_i) . n ds`` edge by edge."""
    f = np.zeros(mesh.n_vertices)
    if len(sys) == 0:
        return f
    t, w = gauss_legendre(order)
    e = mesh.boundary_edges
    a, b = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
    normal, length = mesh.edge_normals
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    k = k_field(sys.positions, sys.burgers, material.lam, pts.reshape(-1, 2)).reshape(pts.shape)
    g = np.sum(apply_L(material, k) * normal[:, None, :], axis=-1)
    wl = w[None, :] * length[:, None] * g
    np.add.at(f, e[:, 0], np.sum(wl * (1.0 - t)[None, :], axis=1))
    np.add.at(f, e[:, 1], np.sum(wl * t[None, :], axis=1))
    return f


def assemble_stiffness(material, mesh):
    l11, l22 = material.diag
    area, grads, ke = kernels.p1_element_matrices(mesh.vertices, mesh.triangles, l11, l22)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n)), area, grads


def solve_fem(material, sys, geom, resolution=0.05, mesh=None, initial_guess=None, tol=1e-10,
              maxiter=None):
    """Finite-element boundary response on ``geom`` (or on a supplied mesh)."""
    mesh = mesh_for(geom, sys, resolution) if mesh is None else mesh
    K, area, grads = assemble_stiffness(material, mesh)
    f = boundary_load(material, sys, mesh)
    n = mesh.n_vertices
    mass = np.zeros(n)
    for a in range(3):
        np.add.at(mass, mesh.triangles[:, a], area / 3.0)
    # Lagrange multiplier of the zero-mean constraint; it absorbs the
    # (quadrature-level) violation of the compatibility condition
    multiplier = -f.sum() / mass.sum()
    rhs = -f - multiplier * mass
    if np.linalg.norm(rhs) == 0.0:
        u = np.zeros(n)
        info, iters = 0, 0
    else:
        x0 = np.zeros(n) if initial_guess is None else np.asarray(initial_guess, dtype=float)
        dinv = 1.0 / K.diagonal()
        if np.any(~np.isfinite(dinv)) or np.any(dinv <= 0):
            raise SolverFailure("stiffness matrix has a non-positive diagonal")
        M = LinearOperator((n, n), matvec=lambda v: dinv * v)
        count = [0]

        def cb(_):
            count[0] += 1

        u, info = cg(K, rhs, x0=x0, rtol=tol, atol=0.0, M=M,
                     maxiter=maxiter or 20 * n, callback=cb)
        iters = count[0]
        if info != 0:
            raise SolverFailure(f"conjugate gradients did not converge (info={info})")
    u = u - (mass @ u) / mass.sum()
    res = np.linalg.norm(K @ u - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if np.linalg.norm(rhs) > 0 and res > 100 * tol:
        raise SolverFailure(f"residual {res:.3e} after solve exceeds tolerance")
    elem_grad = np.einsum("ta,tac->tc", u[mesh.triangles], grads)
    vgrad = kernels.vertex_average(mesh.triangles, area, elem_grad, n)
    norm = {"multiplier": float(multiplier), "mean": float(mass @ u / mass.sum()),
            "compatibility_residual": float(f.sum()), "cg_iterations": iters,
            "relative_residual": float(res)}
    return FiniteElementResponse(material, mesh, u, elem_grad, vgrad, f, K, norm, geom)


def solve_response(material, sys, geom, backend="auto", resolution=0.05, mesh=None):
    """Dispatch to the analytic backend when it applies, FEM otherwise."""
    if backend == "auto":
        backend = "analytic" if isinstance(geom, UnitDisk) and material.lam == 1.0 else "fem"
    if backend == "analytic":
        return solve_disk_analytic(material, sys, geom)
    if backend == "fem":
        return solve_fem(material, sys, geom, resolution, mesh=mesh)
    raise WrongBackend(f"unknown backend {backend!r}")


def grad_u0(response, x):
    return response.grad(x)


def h0_eval(material, sys, response, x):
    """Limiting strain ``sum_i k_i + grad u0``."""
    x = np.asarray(x, dtype=float)
    return k_field(sys.positions, sys.burgers, material.lam, x) + response.grad(x)


def weak_residual(response):
    """Discrete residual ``K u + f + multiplier * m`` (zero at the minimizer)."""
    mesh = response.mesh
    mass = np.zeros(mesh.n_vertices)
    for a in range(3):
        np.add.at(mass, mesh.triangles[:, a], mesh.areas / 3.0)
    return response.stiffness @ response.u + response.load + response.normalization["multiplier"] * mass
