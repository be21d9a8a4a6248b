"""Independent oracles and named verification suites.

The oracles share no code with the production quadrature: area integrals
are nested :func:`scipy.integrate.quad` calls in polar coordinates with the
holes cut out ray by ray, and derivatives are plain central differences.
They are slow on purpose.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .bvp import solve_disk_analytic, solve_fem
from .energy import (annulus_energy, annulus_energy_quadrature, core_coefficient,
                     empirical_order, regularized_energy, renormalized_energy, self_energy)
from .errors import QuadratureFailure
from .force import force_contour, force_explicit, grad_U_fd
from .model import (Dislocation, DislocationSystem, Material, Polygon, UnitDisk, ear_clip,
                    validate_system)
from .quadrature import EllipseContour
from .singular import SingularStrain, circulation, flux_Lk, k_eval, k_jacobian, strains_of


@dataclass(frozen=True)
class CheckResult:
    check: str
    value_lhs: float
    value_rhs: float
    abs_diff: float
    tolerance: float
    passed: bool

    def row(self):
        return asdict(self)


def compare(name, lhs, rhs, tol, relative=False):
    diff = float(abs(lhs - rhs))
    bound = tol * (1.0 + abs(rhs)) if relative else tol
    return CheckResult(name, float(lhs), float(rhs), diff, float(bound), bool(diff <= bound))


# ---------------------------------------------------------------------------
# area oracle


def _ray_ellipse(c, d, center, r, lam):
    """Parameters ``s`` where ``c + s d`` crosses the ellipse ``E_r(center)`` (or None)."""
    w = np.array([1.0, 1.0 / lam ** 2])
    y = c - center
    a = np.sum(w * d * d)
    b = 2.0 * np.sum(w * d * y)
    cc = np.sum(w * y * y) - r * r
    disc = b * b - 4.0 * a * cc
    if disc <= 0.0:
        return None
    q = np.sqrt(disc)
    return (-b - q) / (2.0 * a), (-b + q) / (2.0 * a)


def _region_pieces(geom):
    """Star-shaped pieces as (center, outer-radius function)."""
    if isinstance(geom, UnitDisk):
        def rmax(t, c=np.zeros(2)):
            return 1.0
        return [(np.zeros(2), rmax)]
    tris = [geom.vertices[list(t)] for t in ear_clip(geom.vertices)]
    pieces = []
    for tri in tris:
        c = tri.mean(axis=0)

        def rmax(t, c=c, tri=tri):
            d = np.array([np.cos(t), np.sin(t)])
            best = np.inf
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                e = b - a
                m = np.array([[d[0], -e[0]], [d[1], -e[1]]])
                det = np.linalg.det(m)
                if abs(det) < 1e-300:
                    continue
                s, u = np.linalg.solve(m, a - c)
                if s > 0 and -1e-12 <= u <= 1 + 1e-12:
                    best = min(best, s)
            return best
        pieces.append((c, rmax))
    return pieces


def area_quadrature(f, geom, holes=(), lam=1.0, tol=1e-10, limit=200):
    """Oracle for ``int_{geom minus holes} f dx``; ``holes`` is a list of
    ``(center, r)`` ellipses ``E_r(center)`` with aspect ``lam``.

    Returns ``(value, error_estimate)``.  Raises :class:`QuadratureFailure`
    if the nested adaptive rule reports an error above ``tol * (1 + |value|)``.
    """
    holes = [(np.asarray(c, dtype=float), float(r)) for c, r in holes]
    total, err = 0.0, 0.0
    for c, rmax in _region_pieces(geom):
        def inner(t, c=c, rmax=rmax):
            d = np.array([np.cos(t), np.sin(t)])
            R = rmax(t)
            cuts = []
            for hc, hr in holes:
                s = _ray_ellipse(c, d, hc, hr, lam)
                if s is not None and s[1] > 0.0 and s[0] < R:
                    cuts.append((max(s[0], 0.0), min(s[1], R)))
            cuts.sort()
            segs, lo = [], 0.0
            for a, b in cuts:
                if a > lo:
                    segs.append((lo, a))
                lo = max(lo, b)
            if lo < R:
                segs.append((lo, R))
            val = 0.0
            for a, b in segs:
                v, _ = integrate.quad(lambda r: f(c + r * d) * r, a, b, epsabs=tol * 1e-3,
                                      epsrel=tol * 0.1, limit=limit)
                val += v
            return val

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e = integrate.quad(inner, 0.0, 2.0 * np.pi, epsabs=tol * 1e-2, epsrel=tol,
                                  limit=limit)
        total += v
        err += e
    if err > tol * (1.0 + abs(total)):
        raise QuadratureFailure(f"oracle error estimate {err:.3e} above tolerance")
    return total, err


def annulus_oracle(material, b, R, eps, tol=1e-11):
    """``int_{E_R \\ E_eps} W(k)`` by 2-D adaptive quadrature in elliptic
    coordinates with the closed-form integrand ``mu b^2 / (8 pi^2 r^2) * lam r``."""
    lam = material.lam

    def integrand(r, t):
        return material.mu * b * b / (8.0 * np.pi ** 2 * r * r) * lam * r

    v, e = integrate.dblquad(integrand, 0.0, 2.0 * np.pi, eps, R, epsabs=0.0, epsrel=tol)
    return v, e


def ellipse_integral(f, center, eps, lam, tol=1e-12):
    """``int_{E_eps(center)} f`` for smooth ``f`` (elliptic-polar dblquad)."""
    c = np.asarray(center, dtype=float)

    def integrand(r, t):
        return f(c + r * np.array([np.cos(t), lam * np.sin(t)])) * lam * r

    v, _ = integrate.dblquad(integrand, 0.0, 2.0 * np.pi, 0.0, eps, epsabs=1e-15, epsrel=tol)
    return v


def ellipse_boundary_integral(g, center, eps, lam, tol=1e-12):
    """``int_{boundary E_eps(center)} g(x, n) ds`` with ``n`` the outward normal."""
    c = np.asarray(center, dtype=float)

    def integrand(t):
        x = c + eps * np.array([np.cos(t), lam * np.sin(t)])
        nds = eps * np.array([lam * np.cos(t), np.sin(t)])
        return g(x, nds)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v, _ = integrate.quad(integrand, 0.0, 2.0 * np.pi, epsabs=1e-15, epsrel=tol, limit=200)
    return v


# ---------------------------------------------------------------------------
# transport lemma and source derivative


@dataclass(frozen=True)
class TransportReport:
    lhs_core: float
    rhs_core: float
    lhs_complement: float
    rhs_complement: float
    h: float

    @property
    def diff_core(self):
        return abs(self.lhs_core - self.rhs_core)

    @property
    def diff_complement(self):
        return abs(self.lhs_complement - self.rhs_complement)


def moving_domain_derivative_check(f, center, eps, v, h, lam=1.0, geom=None, df_dxi=None):
    """Central difference of ``xi -> int_{E_eps(center + xi v)} f(x, xi)`` against
    ``int_E d_xi f + int_{boundary E} f v . n``, and the same for the
    complement ``Omega \\ E`` where the boundary term changes sign.

    ``df_dxi(x, xi)`` is the partial derivative in ``xi``; by default it is
    taken by a central difference of step ``h`` as well.
    """
    geom = UnitDisk() if geom is None else geom
    c = np.asarray(center, dtype=float)
    v = np.asarray(v, dtype=float)
    if df_dxi is None:
        def df_dxi(x, xi):
            return (f(x, xi + h) - f(x, xi - h)) / (2.0 * h)

    def core(xi):
        return ellipse_integral(lambda x: f(x, xi), c + xi * v, eps, lam)

    def punctured(xi):
        return area_quadrature(lambda x: f(x, xi), geom, holes=[(c + xi * v, eps)], lam=lam,
                               tol=1e-12)[0]

    lhs_core = (core(h) - core(-h)) / (2.0 * h)
    vol = ellipse_integral(lambda x: df_dxi(x, 0.0), c, eps, lam)
    bnd = ellipse_boundary_integral(lambda x, nds: f(x, 0.0) * (v @ nds), c, eps, lam)
    rhs_core = vol + bnd
    lhs_comp = (punctured(h) - punctured(-h)) / (2.0 * h)
    vol_all = area_quadrature(lambda x: df_dxi(x, 0.0), geom, tol=1e-12)[0]
    rhs_comp = vol_all - vol - bnd
    return TransportReport(lhs_core, rhs_core, lhs_comp, rhs_comp, h)


def dvl_k_check(strain, v, h, points):
    """Residuals of ``d/dxi k(x; z + xi v) = -Dk(x) v`` and of the material
    derivative ``d/dxi k(x + xi v; z + xi v) = 0``, both by central differences.

    Returns ``(max_shift_residual, max_material_residual)``.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(points, dtype=float)
    z = np.asarray(strain.center, dtype=float)

    def shifted(dz, dx=0.0):
        s = SingularStrain(Dislocation(tuple(z + dz), strain.burgers), strain.lam)
        return k_eval(s, x + dx)

    fd = (shifted(h * v) - shifted(-h * v)) / (2.0 * h)
    exact = -np.einsum("mab,b->ma", k_jacobian(strain, x), v)
    mat = (shifted(h * v, h * v) - shifted(-h * v, -h * v)) / (2.0 * h)
    return float(np.max(np.abs(fd - exact))), float(np.max(np.abs(mat)))


# ---------------------------------------------------------------------------
# random systems


def random_system(rng, n, geom=None, epsilon0=0.03, lam=1.0, margin=2.0, tries=1000):
    """Admissible random system: positions uniform in the domain, moduli in
    ``+-[0.5, 1.5]``, cores kept ``margin`` times further apart than needed."""
    geom = UnitDisk() if geom is None else geom
    lo, hi = _bbox(geom)
    mat = Material(1.0, lam)
    for _ in range(tries):
        pos = rng.uniform(lo, hi, size=(n, 2))
        b = rng.uniform(0.5, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
        sys = DislocationSystem.from_arrays(pos, b, epsilon0 * margin)
        if validate_system(geom, sys, mat, raise_on_error=False).valid:
            return DislocationSystem.from_arrays(pos, b, epsilon0)
    raise RuntimeError("could not draw an admissible system")


def _bbox(geom):
    if isinstance(geom, UnitDisk):
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    return geom.vertices.min(axis=0), geom.vertices.max(axis=0)


def unit_square():
    return Polygon([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])


# ---------------------------------------------------------------------------
# suites


def suite_annulus(rng, draws=10):
    """Sampled-strain annulus quadrature and the oracle against the closed form."""
    out = []
    for _ in range(draws):
        mat = Material(rng.uniform(0.5, 3.0), rng.uniform(0.3, 3.0))
        b = rng.uniform(0.2, 2.0)
        eps = rng.uniform(0.01, 0.2)
        R = eps * rng.uniform(1.5, 20.0)
        ref = annulus_energy(mat, b, R, eps)
        out.append(compare("annulus", annulus_energy_quadrature(mat, b, R, eps), ref,
                           1e-9 * abs(ref)))
        out.append(compare("annulus-oracle", annulus_oracle(mat, b, R, eps)[0], ref,
                           1e-9 * abs(ref)))
    return out


def suite_circulation(rng, draws=10):
    out = []
    for _ in range(draws):
        lam = rng.uniform(0.5, 2.0)
        sys = random_system(rng, int(rng.integers(1, 4)), lam=lam)
        c = rng.uniform(-0.5, 0.5, size=2)
        r = rng.uniform(0.1, 0.9)
        loop = EllipseContour(c, r, rng.uniform(0.5, 2.0))
        inside = [bool(np.sum(((z - c) / np.array([r, r * loop.lam])) ** 2) < 1.0)
                  for z in sys.positions]
        if any(abs(np.sum(((z - c) / np.array([r, r * loop.lam])) ** 2) - 1.0) < 0.05
               for z in sys.positions):
            continue
        strains = strains_of(sys, lam)
        val = circulation(lambda p: sum(k_eval(s, p) for s in strains), loop)
        out.append(compare("circulation", val, float(np.sum(sys.burgers[inside])), 1e-10))
    return out


def suite_noflux(rng, draws=5):
    out = []
    for _ in range(draws):
        lam = rng.uniform(0.3, 3.0)
        mat = Material(rng.uniform(0.5, 2.0), lam)
        s = SingularStrain(Dislocation((0.1, -0.2), rng.uniform(0.5, 1.5)), lam)
        val = flux_Lk(mat, [s], EllipseContour(s.center, rng.uniform(0.01, 0.5), lam))
        out.append(compare("no-flux", val, 0.0, 1e-10))
    return out


def suite_compatibility(rng, draws=3):
    out = []
    for geom, name in ((UnitDisk(), "disk"), (unit_square(), "square")):
        for _ in range(draws):
            lam = rng.uniform(0.5, 2.0)
            sys = random_system(rng, int(rng.integers(1, 4)), geom, lam=lam)
            val = flux_Lk(Material(1.0, lam), strains_of(sys, lam), geom.boundary_contour())
            out.append(compare(f"compatibility-{name}", val, 0.0, 1e-8))
    return out


def suite_r_independence(rng, draws=2):
    out = []
    mat = Material()
    for _ in range(draws):
        sys = random_system(rng, int(rng.integers(1, 4)), epsilon0=0.05)
        resp = solve_disk_analytic(mat, sys)
        radii = (0.01, 0.02, 0.04)
        us = [self_energy(mat, sys, UnitDisk(), R) for R in radii]
        out.append(compare("r-independence-energy", us[0], us[-1], 1e-6, relative=True))
        for ell in range(len(sys)):
            fs = [force_contour(mat, sys, resp, UnitDisk(), ell, R) for R in radii]
            out.append(compare("r-independence-force", float(np.linalg.norm(fs[0] - fs[-1])), 0.0,
                               1e-6 * (1.0 + np.linalg.norm(fs[-1]))))
    return out


def suite_route_equivalence(rng, draws=5, fem=False, resolution=0.05):
    out = []
    mat = Material()
    for _ in range(draws):
        sys = random_system(rng, int(rng.integers(1, 4)))
        resp = solve_fem(mat, sys, UnitDisk(), resolution) if fem else solve_disk_analytic(mat, sys)
        tol = 1e-4 if fem else 1e-8
        for ell in range(len(sys)):
            fc = force_contour(mat, sys, resp, UnitDisk(), ell)
            fe = force_explicit(mat, sys, resp, ell)
            out.append(compare("route-equivalence" + ("-fem" if fem else ""),
                               float(np.linalg.norm(fc - fe)), 0.0,
                               tol * (1.0 + np.linalg.norm(fe))))
    return out


def fd_order(errors, ratio=2.0):
    e = np.asarray(errors, dtype=float)
    return float(np.mean(np.log(e[:-1] / e[1:]) / np.log(ratio)))


def suite_gradu(rng, draws=2, h=0.01):
    """``-dU/dv`` by central differences over ``h, h/2, h/4`` against ``v . j``."""
    out = []
    mat = Material()
    geom = UnitDisk()
    for _ in range(draws):
        sys = random_system(rng, int(rng.integers(2, 4)), epsilon0=0.03, margin=3.0)
        resp = solve_disk_analytic(mat, sys)
        ell = int(rng.integers(len(sys)))
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        fv = float(v @ force_explicit(mat, sys, resp, ell))
        errs, last = [], None
        for step in (h, h / 2, h / 4):
            last = -grad_U_fd(mat, sys, geom, ell, v, h=step)
            errs.append(abs(last - fv))
        out.append(compare("gradU", last, fv, 1e-5 * (1 + abs(fv))))
        order = fd_order(errs)
        out.append(CheckResult("gradU-order", order, 2.0, abs(order - 2.0), 0.3,
                               bool(abs(order - 2.0) <= 0.3)))
    return out


def transport_cases():
    """The three listed integrands ``f(x, xi)`` with exact ``d_xi f``."""
    return {
        "one": (lambda x, xi: 1.0, lambda x, xi: 0.0),
        "x1": (lambda x, xi: x[0], lambda x, xi: 0.0),
        "xi*x2": (lambda x, xi: xi * x[1], lambda x, xi: x[1]),
    }


def suite_transport(rng, h=1e-3):
    out = []
    c = np.array([0.2, -0.1])
    v = rng.normal(size=2)
    v /= np.linalg.norm(v)
    for name, (f, df) in transport_cases().items():
        rep = moving_domain_derivative_check(f, c, 0.3, v, h, lam=1.5, df_dxi=df)
        out.append(compare(f"transport-{name}", rep.lhs_core, rep.rhs_core, h * h))
        out.append(compare(f"transport-{name}-complement", rep.lhs_complement, rep.rhs_complement,
                           max(h * h, 1e-9)))
    return out


def suite_dvlk(rng):
    out = []
    for lam in (1.0, 3.0):
        s = SingularStrain(Dislocation((0.0, 0.0), 1.0), lam)
        pts = rng.uniform(0.3, 1.0, size=(20, 2)) * rng.choice([-1, 1], size=(20, 2))
        v = rng.normal(size=2)
        errs = [dvl_k_check(s, v, h, pts)[0] for h in (1e-2, 5e-3, 2.5e-3)]
        order = fd_order(errs)
        out.append(CheckResult(f"dvlk-order-lam{lam:g}", order, 2.0, abs(order - 2.0), 0.3,
                               bool(abs(order - 2.0) <= 0.3)))
        mat_res = dvl_k_check(s, v, 1e-3, pts)[1]
        out.append(compare(f"dvlk-material-lam{lam:g}", mat_res, 0.0, 1e-8))
    return out


def suite_expansion(rng, eps_values=(0.08, 0.04, 0.02, 0.01)):
    mat = Material()
    sys = DislocationSystem.from_arrays([[0.3, 0.1], [-0.2, -0.35]], [1.0, -0.7], 0.1)
    resp = solve_disk_analytic(mat, sys)
    bd = renormalized_energy(mat, sys, UnitDisk(), resp)
    d = [regularized_energy(mat, sys, UnitDisk(), resp, e) - core_coefficient(mat, sys)
         * np.log(1.0 / e) - bd.U_total for e in eps_values]
    order = empirical_order(eps_values, d)
    return [CheckResult("expansion-order", order, 0.9, max(0.0, 0.9 - order), 0.0, order >= 0.9)]


def suite_image_force(rng):
    mat = Material()
    sys = DislocationSystem.from_arrays([[0.5, 0.0]], [1.0], 0.1)
    resp = solve_disk_analytic(mat, sys)
    ref = np.array([1.0 / (3.0 * np.pi), 0.0])
    fc = force_contour(mat, sys, resp, UnitDisk(), 0)
    fe = force_explicit(mat, sys, resp, 0)
    return [compare("image-force-contour", float(np.linalg.norm(fc - ref)), 0.0, 1e-6),
            compare("image-force-explicit", float(np.linalg.norm(fe - ref)), 0.0, 1e-6)]


SUITES = {
    "annulus": suite_annulus,
    "circulation": suite_circulation,
    "no-flux": suite_noflux,
    "compatibility": suite_compatibility,
    "r-independence": suite_r_independence,
    "route-equivalence": suite_route_equivalence,
    "gradU": suite_gradu,
    "transport": suite_transport,
    "dvlk": suite_dvlk,
    "expansion": suite_expansion,
    "image-force": suite_image_force,
}


def run_suites(names, rng):
    unknown = [n for n in names if n not in SUITES and n != "all"]
    if unknown:
        raise KeyError(", ".join(unknown))
    if "all" in names:
        names = list(SUITES)
    results = []
    for n in names:
        results.extend(SUITES[n](rng))
    return results


__all__ = [
    "CheckResult", "area_quadrature", "annulus_oracle", "moving_domain_derivative_check",
    "dvl_k_check", "TransportReport", "random_system", "run_suites", "SUITES", "compare",
    "ellipse_integral", "ellipse_boundary_integral", "fd_order", "unit_square",
]
