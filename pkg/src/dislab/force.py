"""Peach-Koehler forces ``j_l = -grad_{z_l} U`` by two routes.

* Contour route: the net configurational traction ``int C n ds`` of the
  Eshelby stress ``C = W(h0) I - h0 (x) L h0`` over the ellipse ``E_R(z_l)``.
* Explicit route: ``b_l J L h~(z_l)`` with ``J = ((0, 1), (-1, 0))`` and the
  regular part ``h~ = grad u0 + sum_{i != l} k_i``.

Both are cross-checked against central differences of ``U``.
"""

from dataclasses import dataclass

import numpy as np

from .bvp import solve_response
from .errors import BadCutRadius, InadmissiblePerturbation
from .model import admissibility, apply_L, energy_density, validate_system
from .quadrature import EllipseContour, QuadratureSpec, integrate_contour, outward_normal_element
from .singular import k_field

J = np.array([[0.0, 1.0], [-1.0, 0.0]])

FORCE_CONTOUR_SPEC = QuadratureSpec(tol=1e-13, max_depth=10, min_depth=2)
# the recovered FEM gradient is only piecewise smooth along the contour
FEM_CONTOUR_SPEC = QuadratureSpec(tol=1e-7, max_depth=12, min_depth=4)


def eshelby_apply(material, h, n):
    """``C n = W(h) n - (n . L h) h``, vectorized over leading axes."""
    h = np.asarray(h, dtype=float)
    n = np.asarray(n, dtype=float)
    w = energy_density(material, h)
    return w[..., None] * n - np.sum(n * apply_L(material, h), axis=-1)[..., None] * h


def default_contour_radius(material, sys, geom, ell):
    """``min(eps0 / 2, half the elliptic distance to the nearest other source or boundary)``."""
    lam = material.lam
    _, clear, seps = admissibility(geom, sys, lam)
    near = clear[ell]
    for (i, j), s in seps.items():
        if ell in (i, j):
            near = min(near, s)
    return 0.5 * min(sys.epsilon0, near)


def _check_contour_radius(material, sys, geom, ell, R):
    lam = material.lam
    _, clear, seps = admissibility(geom, sys, lam)
    # the ellipse must not enclose or touch another core of radius R
    limit = clear[ell]
    for (i, j), s in seps.items():
        if ell in (i, j):
            limit = min(limit, s - R)
    if not (0.0 < R < limit):
        raise BadCutRadius(f"contour radius R={R} is not admissible for dislocation {ell} "
                           f"(needs 0 < R < {limit:.6g})")


def force_contour(material, sys, response, geom, ell, R=None, spec=None):
    """``int_{boundary of E_R(z_l)} C n ds`` by the periodic trapezoid rule,
    ``n`` the outward normal of the ellipse."""
    if spec is None:
        spec = FEM_CONTOUR_SPEC if response.backend == "fem" else FORCE_CONTOUR_SPEC
    if R is None:
        R = default_contour_radius(material, sys, geom, ell)
    _check_contour_radius(material, sys, geom, ell, R)
    lam = material.lam
    contour = EllipseContour(sys.positions[ell], R, lam)

    def integrand(p, dp):
        h = k_field(sys.positions, sys.burgers, lam, p) + response.grad(p)
        return eshelby_apply(material, h, outward_normal_element(dp))

    value, _ = integrate_contour(contour, integrand, spec)
    return np.asarray(value, dtype=float)


def regular_part(material, sys, response, ell):
    """``h~(z_l) = grad u0(z_l) + sum_{i != l} k_i(z_l)``."""
    z = sys.positions[ell]
    others = np.arange(len(sys)) != ell
    h = np.asarray(response.grad(z), dtype=float).copy()
    if np.any(others):
        h += k_field(sys.positions[others], sys.burgers[others], material.lam, z)
    return h


def force_explicit(material, sys, response, ell):
    """``b_l J L h~(z_l)``."""
    return sys.burgers[ell] * (J @ apply_L(material, regular_part(material, sys, response, ell)))


@dataclass(frozen=True)
class ForceReport:
    contour: np.ndarray
    explicit: np.ndarray
    R: np.ndarray
    discrepancy: np.ndarray

    @property
    def max_discrepancy(self):
        return float(np.max(self.discrepancy, initial=0.0))

    @property
    def relative_discrepancy(self):
        """Per-dislocation ``|contour - explicit| / (1 + |explicit|)``."""
        return self.discrepancy / (1.0 + np.linalg.norm(self.explicit, axis=1))


def forces(material, sys, response, geom, R=None, routes=("contour", "explicit")):
    n = len(sys)
    fc = np.full((n, 2), np.nan)
    fe = np.full((n, 2), np.nan)
    radii = np.full(n, np.nan)
    for ell in range(n):
        if "explicit" in routes:
            fe[ell] = force_explicit(material, sys, response, ell)
        if "contour" in routes:
            radii[ell] = default_contour_radius(material, sys, geom, ell) if R is None else R
            fc[ell] = force_contour(material, sys, response, geom, ell, radii[ell])
    disc = np.linalg.norm(fc - fe, axis=1)
    return ForceReport(fc, fe, radii, disc)


def perturbed(material, sys, geom, ell, disp):
    moved = sys.moved(ell, disp)
    report = validate_system(geom, moved, material, raise_on_error=False)
    if not report.valid:
        raise InadmissiblePerturbation(
            f"moving dislocation {ell} by {np.asarray(disp).tolist()} leaves the admissible set: "
            + "; ".join(report.issues))
    return moved


def grad_U_fd(material, sys, geom, ell, direction, h=None, energy=None, richardson=False,
              backend="auto", resolution=0.05, mesh=None):
    """Central difference ``[U(z_l + h v) - U(z_l - h v)] / (2h)``.

    ``energy(sys) -> U`` defaults to the full pipeline (fresh boundary
    response per configuration; pass ``mesh`` to keep the FEM mesh fixed).
    With ``richardson`` the steps ``h`` and ``h/2`` are combined to cancel
    the ``h^2`` term.
    """
    from .energy import renormalized_energy

    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    if h is None:
        h = 1e-4 * geom_diameter(geom)
    if energy is None:
        def energy(s):
            resp = solve_response(material, s, geom, backend, resolution, mesh=mesh)
            return renormalized_energy(material, s, geom, resp).U_total

    def central(step):
        up = energy(perturbed(material, sys, geom, ell, step * v))
        dn = energy(perturbed(material, sys, geom, ell, -step * v))
        return (up - dn) / (2.0 * step)

    d1 = central(h)
    if not richardson:
        return float(d1)
    d2 = central(0.5 * h)
    return float((4.0 * d2 - d1) / 3.0)


def geom_diameter(geom):
    return float(getattr(geom, "diameter", 2.0))
