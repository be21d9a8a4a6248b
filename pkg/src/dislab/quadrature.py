"""Production quadrature: closed contours and punctured planar regions.

Two integrators live here.

* :func:`integrate_contour` runs a refinement ladder on a parametrized closed
  curve: periodic trapezoid for smooth closed curves (ellipses, circles) and
  composite Gauss-Legendre panels for polygons.
* :func:`star_integral` integrates a scalar field with point singularities
  over a domain minus elliptical holes.  The integrand is split by a smooth
  partition of unity ``P_i = rho_i^-4 / sum_j rho_j^-4`` attached to the
  singular points; every piece ``P_i f`` is then integrated in elliptic-polar
  coordinates about its own center, where an ``r^-1`` or ``r^-2`` singularity
  becomes smooth (Gauss in ``r`` or in ``log r``).  Holes around other centers
  are subtracted explicitly, so the punctured region is represented exactly.

Both return ``(value, error_estimate)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import QuadratureFailure

SCHEMES = ("auto", "trapezoid-periodic", "gauss-panel", "triangle-adaptive")


@dataclass(frozen=True)
class QuadratureSpec:
    """Refinement controls shared by the contour and area integrators."""

    scheme: str = "auto"
    tol: float = 1e-10
    max_depth: int = 12
    min_depth: int = 2
    # absolute floor for integrals that vanish identically
    atol: float = 1e-15

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if not self.tol > 0:
            raise ValueError("quadrature tolerance must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_CONTOUR_SPEC = QuadratureSpec(tol=1e-10, max_depth=14)
DEFAULT_AREA_SPEC = QuadratureSpec(tol=1e-11, max_depth=7, min_depth=2)

_GAUSS_CACHE = {}


def gauss_legendre(n):
    """Nodes and weights on [0, 1]."""
    if n not in _GAUSS_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GAUSS_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GAUSS_CACHE[n]


def composite_gauss(a, b, panels, order):
    """Composite Gauss-Legendre nodes on [a, b]; ``a``/``b`` may be arrays
    (broadcast along a leading axis)."""
    x, w = gauss_legendre(order)
    t = (np.arange(panels)[:, None] + x[None, :]).ravel() / panels
    wt = np.tile(w, panels) / panels
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    return a + (b - a) * t, (b - a) * wt


# ---------------------------------------------------------------------------
# contours


class EllipseContour:
    """Counterclockwise ellipse ``c + (r cos t, lam r sin t)``, t in [0, 2pi)."""

    periodic = True

    def __init__(self, center, r, lam=1.0):
        self.center = np.asarray(center, dtype=float)
        self.r = float(r)
        self.lam = float(lam)

    def point(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.center + self.r * np.stack([np.cos(tau), self.lam * np.sin(tau)], axis=-1)

    def tangent(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.r * np.stack([-np.sin(tau), self.lam * np.cos(tau)], axis=-1)

    def nodes(self, level):
        m = 16 * 2 ** level
        tau = 2.0 * np.pi * np.arange(m) / m
        return self.point(tau), self.tangent(tau), np.full(m, 2.0 * np.pi / m)


class PolygonContour:
    """Counterclockwise closed polyline integrated with Gauss panels per edge."""

    periodic = False

    def __init__(self, vertices, order=8):
        self.vertices = np.asarray(vertices, dtype=float)
        self.order = order

    def nodes(self, level):
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        t, w = composite_gauss(0.0, 1.0, 2 ** level, self.order)
        pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        dp = np.repeat((b - a)[:, None, :], t.size, axis=1)
        ww = np.tile(w, len(a))
        return pts.reshape(-1, 2), dp.reshape(-1, 2), ww


def outward_normal_element(dpdt):
    """``n ds / dt`` for a counterclockwise curve with velocity ``dpdt``."""
    return np.stack([dpdt[:, 1], -dpdt[:, 0]], axis=-1)


def integrate_contour(contour, integrand, spec=DEFAULT_CONTOUR_SPEC):
    """Integrate ``integrand(points, dpdt)`` against the curve parameter.

    The integrand receives the node points and the (unnormalized) velocity
    ``d rho / dt``; returning ``F(points) . dpdt`` gives the circulation of F,
    returning ``g(points) * |dpdt|`` gives an arc-length integral, and so on.
    Values may be scalars or vectors per node.
    """
    prev = None
    for level in range(spec.max_depth + 1):
        pts, dp, w = contour.nodes(level)
        vals = np.asarray(integrand(pts, dp), dtype=float)
        wv = w.reshape((-1,) + (1,) * (vals.ndim - 1))
        value = np.sum(wv * vals, axis=0)
        scale = np.sum(wv * np.abs(vals), axis=0)
        if prev is not None and level >= spec.min_depth:
            err = np.max(np.abs(value - prev))
            if err <= max(spec.tol * np.max(scale), spec.atol):
                return value, err
        prev = value
    raise QuadratureFailure(
        f"contour quadrature did not reach tol={spec.tol:g} in {spec.max_depth} levels")


# ---------------------------------------------------------------------------
# star-partition area quadrature


def elliptic_angle(points, center, lam):
    y = np.asarray(points, dtype=float) - center
    return np.arctan2(y[..., 1] / lam, y[..., 0])


def _tau_nodes(piece, center, lam, level, order):
    """Angular nodes/weights of ``piece`` as seen from ``center``."""
    segs = piece.angular_segments(center, lam)
    if segs is None:
        m = 16 * 2 ** level
        tau = 2.0 * np.pi * np.arange(m) / m
        return tau, np.full(m, 2.0 * np.pi / m)
    taus, ws = [], []
    for a, b in segs:
        t, w = composite_gauss(a, b, 2 ** level, order)
        taus.append(t)
        ws.append(w)
    return np.concatenate(taus), np.concatenate(ws)


def _radial_piece(f, piece, centers, i, hole, lam, level, order):
    c = centers[i]
    tau, wt = _tau_nodes(piece, c, lam, level, order)
    d = np.stack([np.cos(tau), lam * np.sin(tau)], axis=-1)
    r_in, r_out = piece.ray_interval(c, d)
    lo = np.maximum(r_in, hole)
    ok = r_out > lo * (1.0 + 1e-15)
    if not np.any(ok):
        return 0.0, 0.0
    tau, wt, d, lo, hi = tau[ok], wt[ok], d[ok], lo[ok], r_out[ok]
    panels = 2 ** level
    use_log = lo > 0.0
    r = np.empty((tau.size, panels * order))
    wr = np.empty_like(r)
    if np.any(use_log):
        s, ws = composite_gauss(np.log(lo[use_log]), np.log(hi[use_log]), panels, order)
        r[use_log] = np.exp(s)
        wr[use_log] = ws * r[use_log]
    if np.any(~use_log):
        rr, wl = composite_gauss(lo[~use_log], hi[~use_log], panels, order)
        r[~use_log] = rr
        wr[~use_log] = wl
    pts = c + r[..., None] * d[:, None, :]
    flat = pts.reshape(-1, 2)
    vals = f(flat) * kernels.partition_weight(flat, centers, lam, i)
    jac = lam * r
    terms = (wt[:, None] * wr * jac).ravel() * vals
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def _hole_piece(f, centers, i, j, hole, lam, level, order):
    """Integral of ``P_i f`` over the hole of radius ``hole`` about center j."""
    c = centers[j]
    m = 16 * 2 ** level
    tau = 2.0 * np.pi * np.arange(m) / m
    wt = np.full(m, 2.0 * np.pi / m)
    r, wr = composite_gauss(0.0, hole, 2 ** level, order)
    d = np.stack([np.cos(tau), lam * np.sin(tau)], axis=-1)
    pts = c + r[None, :, None] * d[:, None, :]
    flat = pts.reshape(-1, 2)
    vals = f(flat) * kernels.partition_weight(flat, centers, lam, i)
    terms = (wt[:, None] * (wr * lam * r)[None, :]).ravel() * vals
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def star_integral(f, pieces, centers, lam, holes=None, spec=DEFAULT_AREA_SPEC, order=12):
    """Integrate ``f`` over the union of convex ``pieces`` minus holes.

    Parameters
    ----------
    f : callable
        Vectorized scalar field, ``f(points (M, 2)) -> (M,)``.  May be
        singular like ``rho^-2`` at the centers that carry a hole and like
        ``rho^-1`` at those that do not.
    pieces : sequence
        Convex pieces covering the domain; each provides
        ``ray_interval(center, directions)`` and ``angular_segments(center, lam)``.
    centers : (N, 2) array
        Partition centers (singular points of ``f``); at least one.
    lam : float
        Aspect ratio of the elliptic coordinates and of the holes.
    holes : sequence of float, optional
        Hole radius per center (0 for none); holes are the ellipses
        ``E_r(center)`` with semi-axes ``(r, lam r)``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n = len(centers)
    holes = np.zeros(n) if holes is None else np.asarray(holes, dtype=float)
    prev, change = None, float("nan")
    for level in range(spec.max_depth + 1):
        total, scale = 0.0, 0.0
        for i in range(n):
            for piece in pieces:
                v, s = _radial_piece(f, piece, centers, i, holes[i], lam, level, order)
                total += v
                scale += s
            for j in range(n):
                if j != i and holes[j] > 0.0:
                    v, s = _hole_piece(f, centers, i, j, holes[j], lam, level, order)
                    total -= v
                    scale += s
        if prev is not None:
            change = abs(total - prev)
            if level >= spec.min_depth and change <= max(spec.tol * scale, spec.atol):
                return total, change
        prev = total
    raise QuadratureFailure(
        f"area quadrature did not reach tol={spec.tol:g} in {spec.max_depth} levels "
        f"(last change {change:.3e})")
