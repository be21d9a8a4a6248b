"""Fundamental singular strains of screw dislocations and contour quantities.

The strain of a dislocation with Burgers modulus ``b`` at ``z`` is

    k(x; z) = b lam / (2 pi (lam^2 y1^2 + y2^2)) * (-y2, y1),   y = x - z,

the gradient of the multivalued potential ``b/(2 pi) arctan(y2 / (lam y1))``.
It is curl-free and ``L``-divergence-free away from ``z``, has circulation
``b`` around ``z``, and carries no traction across the elliptical level sets
``E_r(z)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SingularPoint
from .model import Dislocation, apply_L
from .quadrature import DEFAULT_CONTOUR_SPEC, integrate_contour, outward_normal_element


@dataclass(frozen=True)
class SingularStrain:
    source: Dislocation
    lam: float = 1.0

    @property
    def center(self):
        return np.asarray(self.source.position)

    @property
    def burgers(self):
        return self.source.burgers

    def __call__(self, x):
        return k_eval(self, x)


def strains_of(sys, lam):
    return [SingularStrain(d, lam) for d in sys.dislocations]


def k_field(positions, burgers, lam, x):
    """Superposition ``sum_i k(x; z_i)`` at one point or an ``(M, 2)`` array."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    out, nbad = kernels.strain_sum(flat, np.asarray(positions, dtype=float).reshape(-1, 2),
                                   np.asarray(burgers, dtype=float).ravel(), float(lam))
    if nbad:
        raise SingularPoint(f"{nbad} evaluation point(s) coincide with a dislocation")
    return out.reshape(x.shape)


def k_eval(strain, x):
    return k_field(strain.center[None], [strain.burgers], strain.lam, x)


def k_jacobian(strain, x):
    """Closed-form ``Dk`` with ``[..., a, b] = d k_a / d x_b``."""
    x = np.asarray(x, dtype=float)
    y = x - strain.center
    y1, y2 = y[..., 0], y[..., 1]
    lam = strain.lam
    q = lam * lam * y1 * y1 + y2 * y2
    if np.any(q == 0):
        raise SingularPoint("Jacobian evaluated at the source")
    c = strain.burgers * lam / (2.0 * np.pi * q * q)
    off = c * (y2 * y2 - lam * lam * y1 * y1)
    diag = 2.0 * lam * lam * c * y1 * y2
    jac = np.empty(x.shape + (2,))
    jac[..., 0, 0] = diag
    jac[..., 0, 1] = off
    jac[..., 1, 0] = off
    jac[..., 1, 1] = -2.0 * c * y1 * y2
    return jac


def div_Lk(material, strain, x):
    """``div(L k)`` from the closed-form Jacobian, returned with the scale
    ``|mu dk1/dx1| + |mu lam^2 dk2/dx2|`` so callers can judge cancellation."""
    jac = k_jacobian(strain, x)
    a = material.mu * jac[..., 0, 0]
    b = material.mu * material.lam ** 2 * jac[..., 1, 1]
    return a + b, np.abs(a) + np.abs(b)


def k_eval_anomaly(strain, r, tau):
    """Strain at ``z + (r cos tau, lam r sin tau)`` in eccentric-anomaly form."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularPoint("eccentric-anomaly radius must be positive")
    tau = np.asarray(tau, dtype=float)
    lam = strain.lam
    c = strain.burgers / (2.0 * np.pi * lam * r)
    return np.stack(np.broadcast_arrays(-c * lam * np.sin(tau), c * np.cos(tau)), axis=-1)


def ellipse_normal(lam, tau):
    tau = np.asarray(tau, dtype=float)
    n = np.stack([lam * np.cos(tau), np.sin(tau)], axis=-1)
    return n / np.sqrt(lam ** 2 * np.cos(tau) ** 2 + np.sin(tau) ** 2)[..., None]


def circulation(field, loop, quadrature=DEFAULT_CONTOUR_SPEC):
    """Counterclockwise line integral of ``field . t`` around ``loop``."""
    value, _ = integrate_contour(loop, lambda p, dp: np.sum(field(p) * dp, axis=-1), quadrature)
    return float(value)


def flux(field, contour, quadrature=DEFAULT_CONTOUR_SPEC):
    """Outward flux ``int field . n ds`` through a counterclockwise contour."""
    value, _ = integrate_contour(
        contour, lambda p, dp: np.sum(field(p) * outward_normal_element(dp), axis=-1), quadrature)
    return float(value)


def flux_Lk(material, strains, contour, quadrature=DEFAULT_CONTOUR_SPEC):
    """``int L(sum_i k_i) . n ds`` over ``contour``."""
    if not strains:
        return 0.0
    pos = np.array([s.center for s in strains])
    b = np.array([s.burgers for s in strains])
    return flux(lambda p: apply_L(material, k_field(pos, b, material.lam, p)), contour, quadrature)
