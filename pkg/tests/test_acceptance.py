"""Acceptance criteria, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line (value, tolerance, wall
time against the runtime budget).  Under pytest the lines are printed in the
terminal summary; ``python3 tests/test_acceptance.py`` runs them standalone.
Tolerances and budgets are fixed by the acceptance list and must not be
loosened here.
"""

import time

import numpy as np

from dislab.bvp import solve_disk_analytic, solve_fem
from dislab.dynamics import ENERGY_RTOL, evolve
from dislab.energy import (annulus_energy, annulus_energy_quadrature, empirical_order,
                           expansion_defect, self_energy)
from dislab.force import force_contour, force_explicit, forces, grad_U_fd
from dislab.model import DislocationSystem, Material, Polygon, UnitDisk
from dislab.problem import Problem
from dislab.quadrature import EllipseContour
from dislab.singular import circulation, flux_Lk, k_field, strains_of
from dislab.verify import annulus_oracle, fd_order, moving_domain_derivative_check, transport_cases

RESULTS = []
DISK = UnitDisk()
ISO = Material(1.0, 1.0)
SQUARE = Polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
L_SHAPE = Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])


def record(name, ok, detail, t0, budget):
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < budget
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}  [{elapsed:.1f}s / {budget:g}s]")
    assert ok, RESULTS[-1]


def disk_system(rng, n, eps=0.03, rmax=0.7, gap=0.25):
    while True:
        pos = rng.uniform(-rmax, rmax, (n, 2))
        far = all(np.hypot(*(pos[i] - pos[j])) > gap for i in range(n) for j in range(i))
        if np.all(np.hypot(pos[:, 0], pos[:, 1]) < rmax) and far:
            b = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
            return DislocationSystem.from_arrays(pos, b, eps)


def test_annulus_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        m = Material(rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0))
        b, R = rng.uniform(-3, 3), rng.uniform(0.05, 1.0)
        eps = R * rng.uniform(0.01, 0.95)
        exact = annulus_energy(m, b, R, eps)
        for q in (annulus_energy_quadrature(m, b, R, eps), annulus_oracle(m, b, R, eps)[0]):
            worst = max(worst, abs(q - exact) / abs(exact))
    record("annulus identity", worst <= 1e-9, f"max rel err {worst:.2e} <= 1e-9 (20 draws)", t0, 10)


def test_circulation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst, cases = 0.0, 0
    while cases < 20:
        lam = rng.uniform(0.3, 3.0)
        sys = disk_system(rng, rng.integers(1, 4))
        c, r = rng.uniform(-0.6, 0.6, 2), rng.uniform(0.05, 0.8)
        y = (sys.positions - c) / [1.0, lam]
        rho = np.hypot(y[:, 0], y[:, 1])
        # keep sources clear of the loop itself
        if np.any(np.abs(rho - r) < 0.03):
            continue
        enclosed = float(sys.burgers[rho < r].sum())
        got = circulation(lambda p: k_field(sys.positions, sys.burgers, lam, p),
                          EllipseContour(c, r, lam))
        worst = max(worst, abs(got - enclosed))
        cases += 1
    record("circulation", worst <= 1e-10, f"max abs err {worst:.2e} <= 1e-10 (20 loops)", t0, 5)


def test_compatibility():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for geom in (DISK, SQUARE):
        for _ in range(5):
            m = Material(rng.uniform(0.5, 2.0), rng.uniform(0.3, 3.0))
            sys = disk_system(rng, rng.integers(1, 4))
            worst = max(worst, abs(flux_Lk(m, strains_of(sys, m.lam), geom.boundary_contour())))
    record("compatibility", worst < 1e-8, f"max |flux| {worst:.2e} < 1e-8 (disk + square)", t0, 5)


def test_r_independence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    worst_u, worst_f = 0.0, 0.0
    for _ in range(3):
        sys = disk_system(rng, rng.integers(1, 4), eps=0.12)
        resp = solve_disk_analytic(ISO, sys)
        radii = (0.02, 0.04, 0.08)
        us = [self_energy(ISO, sys, DISK, R) for R in radii]
        worst_u = max(worst_u, (max(us) - min(us)) / abs(us[0]))
        for ell in range(len(sys)):
            fs = np.array([force_contour(ISO, sys, resp, DISK, ell, R=R) for R in radii])
            spread = np.max(np.linalg.norm(fs - fs[0], axis=1))
            worst_f = max(worst_f, spread / np.linalg.norm(fs[0]))
    ok = worst_u < 1e-6 and worst_f < 1e-6
    record("R-independence", ok, f"U_S rel spread {worst_u:.2e}, force rel spread {worst_f:.2e} "
           "< 1e-6 (R = 0.02, 0.04, 0.08)", t0, 30)


def test_route_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    worst_a = 0.0
    for _ in range(10):
        sys = disk_system(rng, rng.integers(1, 4))
        rep = forces(ISO, sys, solve_disk_analytic(ISO, sys), DISK)
        worst_a = max(worst_a, np.max(rep.discrepancy / np.linalg.norm(rep.explicit, axis=1)))
    worst_f = 0.0
    fem_cases = [
        (ISO, DISK, [[0.4, 0.1], [-0.3, -0.3]], [1.0, -0.5]),
        (Material(1.3, 1.8), SQUARE, [[0.3, 0.2], [-0.4, -0.3], [0.1, -0.6]], [1.0, -0.5, 0.8]),
        (Material(0.8, 0.6), L_SHAPE, [[0.5, 0.5], [1.5, 0.4], [0.4, 1.5]], [1.0, 1.0, -1.0]),
    ]
    for m, geom, pos, b in fem_cases:
        sys = DislocationSystem.from_arrays(pos, b, 0.03)
        rep = forces(m, sys, solve_fem(m, sys, geom, 0.02), geom)
        worst_f = max(worst_f, np.max(rep.discrepancy / np.linalg.norm(rep.explicit, axis=1)))
    ok = worst_a <= 1e-8 and worst_f <= 1e-4
    record("route equivalence", ok, f"analytic max rel {worst_a:.2e} <= 1e-8 (10 systems); "
           f"FEM h=0.02 max rel {worst_f:.2e} <= 1e-4 (3 systems)", t0, 300)


def test_gradient_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    orders = []
    for _ in range(4):
        sys = disk_system(rng, rng.integers(1, 4))
        ell = int(rng.integers(len(sys)))
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        target = -v @ force_explicit(ISO, sys, solve_disk_analytic(ISO, sys), ell)
        errs = [abs(grad_U_fd(ISO, sys, DISK, ell, v, h=h) - target) for h in (0.02, 0.01, 0.005)]
        orders.append(fd_order(errs))
    dev = max(abs(o - 2.0) for o in orders)
    record("gradient consistency", dev <= 0.3,
           f"FD orders {', '.join(f'{o:.3f}' for o in orders)} within 2.0 +- 0.3", t0, 120)


def test_expansion():
    t0 = time.perf_counter()
    sys = DislocationSystem.from_arrays([[0.3, 0.1], [-0.2, -0.35]], [1.0, -0.7], 0.1)
    eps = [0.08, 0.04, 0.02, 0.01]
    d, _ = expansion_defect(ISO, sys, DISK, solve_disk_analytic(ISO, sys), eps)
    order = empirical_order(eps, d)
    record("expansion", order >= 0.9, f"empirical order {order:.3f} >= 0.9 "
           f"(defects {', '.join(f'{x:.2e}' for x in d)})", t0, 120)


def test_image_force():
    t0 = time.perf_counter()
    sys = DislocationSystem.from_arrays([[0.5, 0.0]], [1.0], 0.05)
    resp = solve_disk_analytic(ISO, sys)
    ref = 1.0 / (3.0 * np.pi)
    fc, fe = force_contour(ISO, sys, resp, DISK, 0), force_explicit(ISO, sys, resp, 0)
    err = max(abs(np.linalg.norm(f) - ref) for f in (fc, fe))
    along_x = all(f[0] > 0 and abs(f[1]) <= 1e-6 for f in (fc, fe))
    fem = force_explicit(ISO, sys, solve_fem(ISO, sys, DISK, 0.02), 0)
    fem_rel = abs(np.linalg.norm(fem) - ref) / ref
    ok = err <= 1e-6 and along_x and fem_rel <= 0.02 and fem[0] > 0
    record("image force", ok, f"|f| - 1/(3pi): {err:.2e} <= 1e-6 both routes, +x; "
           f"FEM h=0.02 rel {fem_rel:.2e} <= 2%", t0, 60)


def test_transport_lemma():
    t0 = time.perf_counter()
    c, v = np.array([0.2, -0.1]), np.array([0.6, 0.8])
    worst = 0.0
    for f, df in transport_cases().values():
        for h in (4e-3, 2e-3, 1e-3):
            rep = moving_domain_derivative_check(f, c, 0.3, v, h, lam=1.5, df_dxi=df)
            worst = max(worst, rep.diff_core / h ** 2, rep.diff_complement / h ** 2)
    record("transport lemma", worst <= 1.0, f"max |lhs - rhs| / h^2 = {worst:.2e} <= 1 "
           "(3 integrands, core + complement, h = 4e-3..1e-3)", t0, 30)


def test_dynamics_descent():
    t0 = time.perf_counter()
    prob = Problem()
    sys = disk_system(np.random.default_rng(0), 3)
    traj = evolve(prob, sys, 0.002, 200)
    U = np.array(traj.energies)
    rise = float(np.max(np.diff(U) - ENERGY_RTOL * (1 + np.abs(U[:-1]))))
    full = len(traj) == 201 and traj.reason == "max-steps"
    sym = DislocationSystem.from_arrays([[0.2, 0.25], [0.2, -0.25], [-0.3, 0.0]],
                                        [1.0, 1.0, -1.0], 0.03)
    st = evolve(prob, sym, 0.002, 200)
    asym = max(max(abs(p[0, 0] - p[1, 0]), abs(p[0, 1] + p[1, 1]), abs(p[2, 1]))
               for p in st.positions)
    ok = full and rise <= 0 and asym <= 1e-12 and len(st) > 10
    record("dynamics descent", ok, f"{len(traj) - 1} accepted steps, max excess rise {rise:.2e} "
           f"<= 0; symmetric run ({len(st) - 1} steps, {st.reason}) asymmetry {asym:.1e} <= 1e-12",
           t0, 300)


if __name__ == "__main__":
    import sys as _sys

    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    print("\n".join(RESULTS))
    _sys.exit(1 if failed else 0)
