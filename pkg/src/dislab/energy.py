"""Renormalized energy ``U = U_S + U_I + U_E`` and the core-regularized energy.

With ``k = sum_i k_i`` and ``h0 = k + grad u0`` the elastic energy of the
punctured cross-section expands as

    J_eps = int_{Omega_eps} W(h0) = sum_i (mu lam b_i^2 / 4 pi) log(1/eps) + U + o(1),

where

    U_S = sum_i [ (mu lam b_i^2 / 4 pi) log R + int_{Omega \\ E_R(z_i)} W(k_i) ]
    U_I = sum_{i<j} int_Omega k_j . L k_i
    U_E = int_Omega W(grad u0) + sum_i int_{boundary} u0 L k_i . n

All area integrals go through :func:`dislab.quadrature.star_integral`.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .bvp import FiniteElementResponse
from .errors import BadCutRadius
from .model import admissibility, apply_L, energy_density
from .quadrature import (DEFAULT_AREA_SPEC, DEFAULT_CONTOUR_SPEC, QuadratureSpec, composite_gauss,
                         integrate_contour, outward_normal_element, star_integral)
from .singular import k_field

# a core this fraction of the clearance is handled in closed form by U_S
SELF_CORE_FRACTION = 0.5


def core_coefficient(material, sys):
    """``sum_i mu lam b_i^2 / (4 pi)``, the coefficient of ``log(1/eps)``."""
    if len(sys) == 0:
        return 0.0
    return float(material.mu * material.lam * np.sum(sys.burgers ** 2) / (4.0 * np.pi))


def annulus_energy(material, b, R, eps):
    """``int_{E_R \\ E_eps} W(k)`` in closed form, ``mu lam b^2/(4 pi) log(R/eps)``."""
    if not (0.0 < eps <= R):
        raise ValueError(f"annulus needs 0 < eps <= R, got eps={eps}, R={R}")
    return material.mu * material.lam * b * b / (4.0 * np.pi) * np.log(R / eps)


def annulus_energy_quadrature(material, b, R, eps, n_tau=64, panels=4, order=12):
    """Same integral by tensor quadrature of ``W(k)`` sampled at physical points
    (trapezoid in the eccentric anomaly, Gauss in ``log r``)."""
    if not (0.0 < eps <= R):
        raise ValueError(f"annulus needs 0 < eps <= R, got eps={eps}, R={R}")
    if eps == R:
        return 0.0
    lam = material.lam
    tau = 2.0 * np.pi * np.arange(n_tau) / n_tau
    s, ws = composite_gauss(np.log(eps), np.log(R), panels, order)
    r = np.exp(s)
    d = np.stack([np.cos(tau), lam * np.sin(tau)], axis=-1)
    pts = r[:, None, None] * d[None, :, :]
    w = energy_density(material, k_field(np.zeros((1, 2)), [b], lam, pts.reshape(-1, 2)))
    jac = (ws * r * lam * r)[:, None] * (2.0 * np.pi / n_tau)
    return float(np.sum(w.reshape(pts.shape[:-1]) * jac))


def _max_core(geom, sys, lam):
    inside, clear, seps = admissibility(geom, sys, lam)
    if not all(inside):
        return 0.0
    return float(min(min(clear, default=np.inf), 0.5 * min(seps.values(), default=np.inf)))


def check_cut_radius(geom, sys, lam, R):
    """``R`` is admissible when the cores ``E_R(z_i)`` are disjoint and inside."""
    rmax = _max_core(geom, sys, lam)
    if not (R > 0.0) or not (R < rmax):
        raise BadCutRadius(f"cut radius R={R} must satisfy 0 < R < {rmax:.6g} "
                           "(disjoint cores inside the domain)")


def default_cut_radius(geom, sys, lam):
    return 0.5 * min(sys.epsilon0, _max_core(geom, sys, lam))


def self_energy(material, sys, geom, R, spec=DEFAULT_AREA_SPEC, terms=False):
    """``U_S``.  For each dislocation the elliptic annulus between ``R`` and a
    safe radius ``rho`` (half the clearance) is exact; the remainder
    ``Omega \\ E_rho`` is integrated numerically, where ``W(k_i)`` is bounded."""
    lam = material.lam
    if len(sys) == 0:
        return [] if terms else 0.0
    check_cut_radius(geom, sys, lam, R)
    out = []
    for z, b in zip(sys.positions, sys.burgers):
        c = material.mu * lam * b * b / (4.0 * np.pi)
        rho = max(SELF_CORE_FRACTION * geom.elliptic_clearance(z, lam), R)
        rest, _ = star_integral(
            lambda p: energy_density(material, k_field(z[None], [b], lam, p)),
            geom.convex_pieces(), z, lam, holes=[rho], spec=spec)
        out.append(c * np.log(R) + annulus_energy(material, b, rho, R) + rest)
    return out if terms else float(sum(out))


def _per_source(material, sys, p):
    """Per-source strains ``(N, M, 2)`` at points ``p``."""
    return np.stack([k_field(z[None], [b], material.lam, p)
                     for z, b in zip(sys.positions, sys.burgers)])


def interaction_energy(material, sys, geom, spec=DEFAULT_AREA_SPEC):
    """``U_I = sum_{i<j} int_Omega k_j . L k_i`` (integrable ``r^-1`` singularities)."""
    n = len(sys)
    if n < 2:
        return 0.0

    def f(p):
        k = _per_source(material, sys, p)
        lk = apply_L(material, k)
        tot = np.zeros(len(p))
        for i in range(n):
            for j in range(i + 1, n):
                tot += np.sum(k[j] * lk[i], axis=-1)
        return tot

    value, _ = star_integral(f, geom.convex_pieces(), sys.positions, material.lam, spec=spec)
    return float(value)


def _boundary_work_analytic(material, sys, response, geom, spec=DEFAULT_CONTOUR_SPEC):
    def integrand(p, dp):
        lk = apply_L(material, k_field(sys.positions, sys.burgers, material.lam, p))
        return response.value(p, check=False) * np.sum(lk * outward_normal_element(dp), axis=-1)

    value, _ = integrate_contour(geom.boundary_contour(), integrand, spec)
    return float(value)


def dirichlet_energy(material, response, geom, spec=DEFAULT_AREA_SPEC):
    """``int_Omega W(grad u0)``."""
    if isinstance(response, FiniteElementResponse):
        return response.dirichlet_energy()
    if len(response.image_positions) == 0:
        return 0.0
    value, _ = star_integral(lambda p: energy_density(material, response.grad(p, check=False)),
                             geom.convex_pieces(), geom.default_center(), material.lam, spec=spec)
    return float(value)


def elastic_energy(material, sys, response, geom, spec=DEFAULT_AREA_SPEC):
    """``U_E = int W(grad u0) + sum_i int_{boundary} u0 L k_i . n``.

    On the finite-element backend both terms are exact for the discrete
    field (element-wise for the first, the assembled load for the second).
    """
    if len(sys) == 0:
        return 0.0
    if isinstance(response, FiniteElementResponse):
        return response.dirichlet_energy() + response.boundary_work()
    return dirichlet_energy(material, response, geom, spec) + \
        _boundary_work_analytic(material, sys, response, geom)


@dataclass(frozen=True)
class EnergyBreakdown:
    core_coefficient: float
    U_S: float
    U_I: float
    U_E: float
    U_total: float
    R_used: float
    backend: str = ""

    def as_dict(self):
        return asdict(self)


def renormalized_energy(material, sys, geom, response, R=None, spec=DEFAULT_AREA_SPEC):
    if R is None:
        R = default_cut_radius(geom, sys, material.lam)
    us = self_energy(material, sys, geom, R, spec)
    ui = interaction_energy(material, sys, geom, spec)
    ue = elastic_energy(material, sys, response, geom, spec)
    return EnergyBreakdown(core_coefficient(material, sys), us, ui, ue, us + ui + ue, float(R),
                           getattr(response, "backend", ""))


def _core_polar(fn, center, eps, lam, n_tau=64, panels=2, order=8):
    """Plain polar quadrature of ``fn`` over the core ``E_eps(center)``."""
    tau = 2.0 * np.pi * np.arange(n_tau) / n_tau
    r, wr = composite_gauss(0.0, eps, panels, order)
    d = np.stack([np.cos(tau), lam * np.sin(tau)], axis=-1)
    pts = center + r[:, None, None] * d[None, :, :]
    vals = fn(pts.reshape(-1, 2)).reshape(pts.shape[:-1])
    return float(np.sum(vals * (wr * lam * r)[:, None]) * 2.0 * np.pi / n_tau)


def regularized_energy(material, sys, geom, response, eps, spec=None, method="auto"):
    """``J_eps = int_{Omega_eps} W(h0)`` with elliptical holes of radius ``eps``.

    ``method="direct"`` integrates ``W(h0)`` itself (analytic backend, smooth
    ``u0``).  ``method="split"`` integrates ``W(k)`` over ``Omega_eps`` and
    adds the ``u0`` contributions through ``U_E`` minus the cores, which
    avoids integrating the piecewise-linear FEM gradient across the domain.
    """
    if len(sys) == 0:
        return 0.0
    if not (0.0 < eps < sys.epsilon0):
        raise ValueError(f"need 0 < eps < epsilon0={sys.epsilon0}, got {eps}")
    if spec is None:
        spec = QuadratureSpec(tol=1e-12, max_depth=8)
    if method == "auto":
        method = "split" if isinstance(response, FiniteElementResponse) else "direct"
    lam = material.lam
    holes = np.full(len(sys), float(eps))
    pieces = geom.convex_pieces()
    if method == "direct":
        def f(p):
            return energy_density(material, k_field(sys.positions, sys.burgers, lam, p)
                                  + response.grad(p, check=False))
        value, _ = star_integral(f, pieces, sys.positions, lam, holes=holes, spec=spec)
        return float(value)
    if method != "split":
        raise ValueError(f"unknown method {method!r}")

    def fk(p):
        return energy_density(material, k_field(sys.positions, sys.burgers, lam, p))

    wk, _ = star_integral(fk, pieces, sys.positions, lam, holes=holes, spec=spec)
    grad = response.element_grad if isinstance(response, FiniteElementResponse) else response.grad

    def fcore(p):
        g = grad(p)
        return np.sum(apply_L(material, k_field(sys.positions, sys.burgers, lam, p)) * g, axis=-1) \
            + energy_density(material, g)

    cores = sum(_core_polar(fcore, z, eps, lam) for z in sys.positions)
    return float(wk + elastic_energy(material, sys, response, geom) - cores)


def expansion_defect(material, sys, geom, response, eps_values, R=None, breakdown=None):
    """``J_eps - c log(1/eps) - U`` for each ``eps``; returns (defects, breakdown)."""
    bd = breakdown or renormalized_energy(material, sys, geom, response, R)
    d = np.array([regularized_energy(material, sys, geom, response, e) - bd.core_coefficient
                  * np.log(1.0 / e) - bd.U_total for e in eps_values])
    return d, bd


def empirical_order(eps_values, defects):
    """Least-squares slope of ``log|defect|`` against ``log eps``."""
    e = np.log(np.asarray(eps_values, dtype=float))
    d = np.log(np.abs(np.asarray(defects, dtype=float)))
    return float(np.polyfit(e, d, 1)[0])
