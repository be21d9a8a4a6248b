"""Material law, dislocation configurations and cross-section geometry."""

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BoundaryContact, CoreOverlap, OutsideDomain
from .quadrature import EllipseContour, PolygonContour

# points closer than this (relative to the domain diameter) to the boundary
# do not count as interior
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class Material:
    """Anisotropic antiplane elasticity ``L = diag(mu, mu * lam**2)``.

    ``lam`` is the anisotropy ratio (``lambda`` in the usual notation, renamed
    to stay clear of the Python keyword); ``lam == 1`` is the isotropic case.
    """

    mu: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError(f"need mu > 0 and lambda > 0, got mu={self.mu}, lambda={self.lam}")

    @property
    def diag(self):
        return np.array([self.mu, self.mu * self.lam ** 2])

    @property
    def L(self):
        return np.diag(self.diag)

    @property
    def isotropic(self):
        return self.lam == 1.0


def apply_L(material, h):
    """``L h`` for a 2-vector or an array of them (last axis)."""
    return np.asarray(h, dtype=float) * material.diag


def energy_density(material, h):
    """Stored energy ``W(h) = h . L h / 2`` (vectorized over leading axes)."""
    h = np.asarray(h, dtype=float)
    return 0.5 * np.sum(h * h * material.diag, axis=-1)


@dataclass(frozen=True)
class Dislocation:
    position: tuple
    burgers: float

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 2:
            raise ValueError("dislocation position must be a 2-vector")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "burgers", float(self.burgers))
        if self.burgers == 0.0 or not np.isfinite(self.burgers):
            raise ValueError("Burgers modulus must be finite and nonzero")


@dataclass(frozen=True)
class DislocationSystem:
    """Ordered dislocations with a common core-separation radius ``epsilon0``.

    Burgers moduli are signed.  Admissibility against a domain is checked by
    :func:`validate_system`, not at construction.
    """

    dislocations: tuple = ()
    epsilon0: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "dislocations", tuple(self.dislocations))
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")

    @classmethod
    def from_arrays(cls, positions, burgers, epsilon0):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        burgers = np.broadcast_to(np.asarray(burgers, dtype=float), (len(positions),))
        return cls(tuple(Dislocation(tuple(p), b) for p, b in zip(positions, burgers)), epsilon0)

    def __len__(self):
        return len(self.dislocations)

    @property
    def positions(self):
        return np.array([d.position for d in self.dislocations], dtype=float).reshape(-1, 2)

    @property
    def burgers(self):
        return np.array([d.burgers for d in self.dislocations], dtype=float)

    def with_positions(self, positions):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        return replace(self, dislocations=tuple(
            Dislocation(tuple(p), d.burgers) for p, d in zip(positions, self.dislocations)))

    def moved(self, index, displacement):
        pos = self.positions
        pos[index] += np.asarray(displacement, dtype=float)
        return self.with_positions(pos)


@dataclass(frozen=True)
class Ellipse:
    """Open elliptical core ``{(x1-z1)^2 + ((x2-z2)/lam)^2 < r^2}``."""

    center: tuple
    r: float
    lam: float = 1.0

    @property
    def area(self):
        return np.pi * self.lam * self.r ** 2

    def contains(self, x):
        y = np.asarray(x, dtype=float) - np.asarray(self.center)
        return y[..., 0] ** 2 + (y[..., 1] / self.lam) ** 2 < self.r ** 2

    def boundary_point(self, tau):
        """Point at eccentric anomaly ``tau``."""
        return self.contour().point(tau)

    def contour(self):
        return EllipseContour(self.center, self.r, self.lam)


def core_ellipse(center, r, lam):
    if not r > 0:
        raise ValueError(f"core radius must be positive, got {r}")
    return Ellipse(tuple(float(c) for c in center), float(r), float(lam))


# ---------------------------------------------------------------------------
# geometry


class UnitDisk:
    """The unit disk centered at the origin."""

    kind = "disk"
    diameter = 2.0

    def __eq__(self, other):
        return isinstance(other, UnitDisk)

    def __hash__(self):
        return hash("UnitDisk")

    def __repr__(self):
        return "UnitDisk()"

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0], x[..., 1]) - 1.0

    def contains(self, x):
        return self.signed_distance(x) < -BOUNDARY_RTOL * self.diameter

    def area(self):
        return np.pi

    def default_center(self):
        return np.zeros(2)

    def boundary_contour(self):
        return EllipseContour((0.0, 0.0), 1.0, 1.0)

    def elliptic_clearance(self, z, lam):
        """Largest ``r`` with ``E_r(z)`` inside the closed disk (0 if z is outside)."""
        z = np.asarray(z, dtype=float)
        if not self.contains(z):
            return 0.0
        if lam == 1.0:
            return 1.0 - float(np.hypot(*z))
        # distance in coordinates (x1, x2/lam) where the core is a circle
        y = np.array([z[0], z[1] / lam])

        def dist(t):
            return np.hypot(y[0] - np.cos(t), y[1] - np.sin(t) / lam)

        t = np.linspace(0.0, 2.0 * np.pi, 1441)
        k = int(np.argmin(dist(t)))
        res = minimize_scalar(dist, bounds=(t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]),
                              method="bounded", options={"xatol": 1e-14})
        return float(min(res.fun, dist(t[k])))

    # star-quadrature piece interface: the disk is its own convex piece
    def convex_pieces(self):
        return [self]

    def angular_segments(self, center, lam):
        return None

    def ray_interval(self, c, d):
        a = np.sum(d * d, axis=-1)
        b = 2.0 * d @ c
        cc = float(c @ c) - 1.0
        disc = np.sqrt(np.maximum(b * b - 4.0 * a * cc, 0.0))
        return np.zeros(len(d)), (-b + disc) / (2.0 * a)


def _point_segment_distance(points, a, b):
    """Distances ``(M, E)`` from points to segments ``a[e] -> b[e]``."""
    ab = b - a
    ap = points[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.hypot(*(points[:, None, :] - proj).transpose(2, 0, 1))


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


class ConvexPolygon:
    """Convex counterclockwise polygon used as a star-quadrature piece."""

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices, dtype=float)
        a = self.vertices
        e = np.roll(a, -1, axis=0) - a
        self._normals = np.stack([e[:, 1], -e[:, 0]], axis=-1)
        self._offsets = np.sum(self._normals * a, axis=-1)

    def contains_strict(self, c, tol=0.0):
        return bool(np.all(self._normals @ c - self._offsets < -tol))

    def ray_interval(self, c, d):
        md = d @ self._normals.T  # (M, E)
        s = self._offsets - self._normals @ c  # (E,)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = s[None, :] / md
        upper = np.where(md > 0, t, np.inf).min(axis=1)
        lower = np.maximum(np.where(md < 0, t, -np.inf).max(axis=1), 0.0)
        blocked = np.any((md == 0) & (s[None, :] < 0), axis=1)
        upper = np.where(blocked, 0.0, upper)
        return lower, np.maximum(upper, lower)

    def angular_segments(self, center, lam):
        y = self.vertices - center
        ang = np.arctan2(y[:, 1] / lam, y[:, 0])
        scale = np.max(np.abs(y))
        if self.contains_strict(center, tol=1e-13 * scale * np.max(np.abs(self._normals))):
            a = np.sort(ang)
            a = np.append(a, a[0] + 2.0 * np.pi)
            return [(a[k], a[k + 1]) for k in range(len(a) - 1) if a[k + 1] > a[k]]
        cen = self.vertices.mean(axis=0) - center
        ref = np.arctan2(cen[1] / lam, cen[0])
        rel = np.sort(np.angle(np.exp(1j * (ang - ref)))) + ref
        return [(rel[k], rel[k + 1]) for k in range(len(rel) - 1) if rel[k + 1] > rel[k]]


def ear_clip(vertices):
    """Triangulate a simple counterclockwise polygon; returns index triples."""
    v = np.asarray(vertices, dtype=float)
    idx = list(range(len(v)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(v) ** 2:
            raise ValueError("ear clipping failed; polygon is not simple")
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = v[i0], v[i1], v[i2]
            if cross(a, b, c) <= 0:
                continue
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = v[j]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    inside = True
                    break
            if not inside:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
    tris.append(tuple(idx))
    return np.array(tris, dtype=int)


class Polygon:
    """Simple counterclockwise polygon cross-section."""

    kind = "polygon"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices given as (x, y) pairs")
        if _signed_area(v) <= 0:
            raise ValueError("polygon vertices must be counterclockwise")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(i - j) in (1, n - 1):
                    continue
                if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise ValueError("polygon is not simple (edges intersect)")
        self.vertices = v
        self.diameter = float(np.max(np.hypot(*(v[:, None] - v[None]).transpose(2, 0, 1))))
        self._pieces = None

    def __eq__(self, other):
        return isinstance(other, Polygon) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return f"Polygon({self.vertices.tolist()})"

    @property
    def edges(self):
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def area(self):
        return _signed_area(self.vertices)

    def is_convex(self):
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cr = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cr >= 0))

    def _inside(self, x):
        x = np.atleast_2d(x)
        a, b = self.edges
        xi, yi = x[:, None, 0], x[:, None, 1]
        cond = (a[None, :, 1] > yi) != (b[None, :, 1] > yi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a[None, :, 0] + (yi - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                b[None, :, 1] - a[None, :, 1])
        return (np.count_nonzero(cond & (xi < xint), axis=1) % 2) == 1

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        a, b = self.edges
        d = _point_segment_distance(flat, a, b).min(axis=1)
        s = np.where(self._inside(flat), -d, d)
        return s.reshape(x.shape[:-1])

    def contains(self, x):
        return self.signed_distance(x) < -BOUNDARY_RTOL * self.diameter

    def default_center(self):
        for piece in self.convex_pieces():
            c = piece.vertices.mean(axis=0)
            if self.contains(c):
                return c
        return self.vertices.mean(axis=0)

    def boundary_contour(self):
        return PolygonContour(self.vertices)

    def elliptic_clearance(self, z, lam):
        z = np.asarray(z, dtype=float)
        if not self.contains(z):
            return 0.0
        s = np.array([1.0, 1.0 / lam])
        a, b = self.edges
        return float(_point_segment_distance((z * s)[None], a * s, b * s).min())

    def convex_pieces(self):
        if self._pieces is None:
            if self.is_convex():
                self._pieces = [ConvexPolygon(self.vertices)]
            else:
                self._pieces = [ConvexPolygon(self.vertices[t]) for t in ear_clip(self.vertices)]
        return self._pieces


DomainGeometry = Union[UnitDisk, Polygon]


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    epsilon0: float
    max_epsilon0: float
    min_separation: float = np.inf
    min_clearance: float = np.inf
    issues: tuple = field(default_factory=tuple)


def _elliptic_distance(a, b, lam):
    return float(np.hypot(a[0] - b[0], (a[1] - b[1]) / lam))


def admissibility(geom, sys, lam):
    """Core clearances and pair separations in the metric where cores are circles."""
    pos = sys.positions
    inside = [bool(geom.contains(p)) for p in pos]
    clear = [geom.elliptic_clearance(p, lam) if ins else 0.0 for p, ins in zip(pos, inside)]
    seps = {}
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            seps[(i, j)] = _elliptic_distance(pos[i], pos[j], lam)
    return inside, clear, seps


def validate_system(geom, sys, material, raise_on_error=True):
    """Check that every core ``E_eps0(z_i)`` is inside ``geom`` and the cores
    are pairwise disjoint.

    Returns a :class:`ValidationReport`; with ``raise_on_error`` (default) the
    first violation raises :class:`OutsideDomain`, :class:`BoundaryContact` or
    :class:`CoreOverlap` instead, with ``max_epsilon0`` attached.
    """
    lam = material.lam
    eps = sys.epsilon0
    inside, clear, seps = admissibility(geom, sys, lam)
    min_clear = min(clear, default=np.inf)
    min_sep = min(seps.values(), default=np.inf)
    max_eps = 0.0 if not all(inside) else float(min(min_clear, 0.5 * min_sep))
    issues = []
    for i, ins in enumerate(inside):
        if not ins:
            issues.append(OutsideDomain(f"dislocation {i} at {sys.positions[i].tolist()} is not "
                                        f"inside the domain", max_eps))
    for i, c in enumerate(clear):
        if inside[i] and c <= eps:
            issues.append(BoundaryContact(
                f"core of dislocation {i} (radius {eps:g}) reaches the boundary; "
                f"clearance is {c:.6g}", max_eps))
    for (i, j), s in seps.items():
        if s <= 2.0 * eps:
            issues.append(CoreOverlap(
                f"cores of dislocations {i} and {j} overlap: separation {s:.6g} <= 2*{eps:g}",
                max_eps))
    if issues and raise_on_error:
        raise issues[0]
    return ValidationReport(not issues, eps, max_eps, min_sep, min_clear,
                            tuple(str(e) for e in issues))


def is_admissible(geom, sys, material):
    return validate_system(geom, sys, material, raise_on_error=False).valid


def geometry_from_spec(kind, vertices=None):
    if kind == "disk":
        return UnitDisk()
    if kind == "polygon":
        if vertices is None:
            raise ValueError("polygon geometry needs vertices")
        return Polygon(vertices)
    raise ValueError(f"unknown geometry type {kind!r}")


__all__ = [
    "Material", "Dislocation", "DislocationSystem", "Ellipse", "UnitDisk", "Polygon",
    "ConvexPolygon", "DomainGeometry", "ValidationReport", "apply_L", "energy_density",
    "core_ellipse", "validate_system", "is_admissible", "geometry_from_spec", "ear_clip",
]
