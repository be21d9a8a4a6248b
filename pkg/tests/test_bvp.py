import numpy as np
import pytest

from dislab.bvp import (h0_eval, image_system, neumann_data, solve_disk_analytic, solve_fem,
                        solve_response, weak_residual)
from dislab.errors import OutsideDomain, SingularPoint, WrongBackend
from dislab.model import DislocationSystem, Material, Polygon, UnitDisk
from dislab.quadrature import EllipseContour, star_integral
from dislab.singular import circulation, k_eval, SingularStrain
from dislab.model import Dislocation

ISO = Material(1.0, 1.0)
DISK = UnitDisk()


def system(pos, b, eps=0.03):
    return DislocationSystem.from_arrays(pos, b, eps)


def boundary_points(rng, n=64):
    t = rng.uniform(0, 2 * np.pi, n)
    y = np.stack([np.cos(t), np.sin(t)], axis=-1)
    return y, y


def interior_probes(rng, n, sys, rmax=0.85, gap=0.15):
    out = []
    while len(out) < n:
        p = rng.uniform(-rmax, rmax, 2)
        if np.hypot(*p) < rmax and np.all(np.linalg.norm(sys.positions - p, axis=1) > gap):
            out.append(p)
    return np.array(out)


def test_neumann_data_examples(rng):
    y, n = boundary_points(rng)
    np.testing.assert_allclose(neumann_data(ISO, system([[0, 0]], [1.0]), y, n), 0, atol=1e-15)
    assert neumann_data(ISO, system([[0.5, 0]], [1.0]), [1.0, 0.0], [1.0, 0.0]) == pytest.approx(
        0.0, abs=1e-16)


def test_image_system():
    zs, bs = image_system(system([[0.5, 0], [0, 0], [0, -0.25]], [1.0, 2.0, -0.5]))
    np.testing.assert_allclose(zs, [[2, 0], [0, -4]])
    np.testing.assert_allclose(bs, [-1.0, 0.5])


def test_analytic_center_dislocation_has_no_response(rng):
    r = solve_disk_analytic(ISO, system([[0, 0]], [1.0]))
    x = interior_probes(rng, 10, system([[5, 5]], [1.0]))
    np.testing.assert_array_equal(r.grad(x), 0.0)


def test_analytic_traction_free(rng):
    for _ in range(5):
        pos = rng.uniform(-0.5, 0.5, size=(3, 2))
        sys = system(pos, rng.uniform(-2, 2, 3))
        r = solve_disk_analytic(ISO, sys)
        y, n = boundary_points(rng)
        lh = h0_eval(ISO, sys, r, y)
        assert np.max(np.abs(np.sum(lh * n, axis=1))) < 1e-10
        # the same statement through the Neumann datum
        np.testing.assert_allclose(np.sum(r.grad(y) * n, axis=1), neumann_data(ISO, sys, y, n),
                                   atol=1e-12)


def test_analytic_gradient_at_source():
    sys = system([[0.5, 0]], [1.0])
    r = solve_disk_analytic(ISO, sys)
    np.testing.assert_allclose(r.image_positions, [[2, 0]])
    np.testing.assert_allclose(r.image_burgers, [-1])
    g = r.grad([0.5, 0.0])
    ref = -k_eval(SingularStrain(Dislocation((2, 0), 1.0), 1.0), (0.5, 0))
    np.testing.assert_allclose(g, ref, rtol=1e-15)
    np.testing.assert_allclose(g, [0, 1 / (2 * np.pi * 1.5)], rtol=1e-14)


def test_analytic_superposition(rng):
    a, b = system([[0.3, 0.1]], [1.0]), system([[-0.2, 0.4]], [-1.5])
    both = system([[0.3, 0.1], [-0.2, 0.4]], [1.0, -1.5])
    x = interior_probes(rng, 10, both)
    ra, rb, rab = (solve_disk_analytic(ISO, s) for s in (a, b, both))
    np.testing.assert_allclose(rab.grad(x), ra.grad(x) + rb.grad(x), rtol=1e-13)


def test_analytic_value_is_mean_zero_potential(rng):
    sys = system([[0.4, 0.2], [-0.3, -0.1]], [1.0, 0.7])
    r = solve_disk_analytic(ISO, sys)
    mean, _ = star_integral(lambda p: r.value(p, check=False), DISK.convex_pieces(),
                            DISK.default_center(), 1.0)
    scale = np.max(np.abs(r.value(interior_probes(rng, 20, sys, gap=0.0))))
    assert abs(mean) < 1e-8 * scale
    # the potential differentiates to the reported gradient
    x, h = interior_probes(rng, 5, sys), 1e-5
    fd = np.stack([(r.value(x + h * e) - r.value(x - h * e)) / (2 * h) for e in np.eye(2)], -1)
    np.testing.assert_allclose(fd, r.grad(x), atol=1e-8)


def test_analytic_backend_errors():
    sys = system([[0.2, 0]], [1.0])
    with pytest.raises(WrongBackend):
        solve_disk_analytic(Material(1.0, 2.0), sys)
    sq = Polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    with pytest.raises(WrongBackend):
        solve_disk_analytic(ISO, sys, sq)
    with pytest.raises(WrongBackend):
        solve_response(ISO, sys, DISK, backend="spectral")
    r = solve_disk_analytic(ISO, sys)
    with pytest.raises(OutsideDomain):
        r.grad([1.1, 0.0])
    r.grad([1.0, 0.0])


def test_h0_singular_and_empty(rng):
    sys = system([[0.2, 0.1]], [1.0])
    r = solve_disk_analytic(ISO, sys)
    with pytest.raises(SingularPoint):
        h0_eval(ISO, sys, r, [0.2, 0.1])
    empty = DislocationSystem((), 0.03)
    r0 = solve_disk_analytic(ISO, empty)
    np.testing.assert_array_equal(h0_eval(ISO, empty, r0, rng.uniform(-0.5, 0.5, (5, 2))), 0.0)


def test_h0_circulation_equals_burgers():
    sys = system([[0.3, 0.1], [-0.4, 0.0]], [1.3, -0.4])
    r = solve_disk_analytic(ISO, sys)
    f = lambda p: h0_eval(ISO, sys, r, p)
    assert circulation(f, EllipseContour((0.3, 0.1), 0.2)) == pytest.approx(1.3, abs=1e-10)
    assert circulation(f, EllipseContour((-0.4, 0.0), 0.2)) == pytest.approx(-0.4, abs=1e-10)
    assert circulation(f, EllipseContour((0.0, -0.6), 0.2)) == pytest.approx(0.0, abs=1e-10)


# ---------------------------------------------------------------------------
# finite elements


def test_fem_zero_dislocations():
    r = solve_fem(ISO, DislocationSystem((), 0.03), DISK, 0.1)
    np.testing.assert_array_equal(r.u, 0.0)


def test_fem_matches_analytic_at_h002(rng):
    sys = system([[0.5, 0.0]], [1.0])
    exact = solve_disk_analytic(ISO, sys)
    fem = solve_fem(ISO, sys, DISK, 0.02)
    x = interior_probes(rng, 10, sys)
    g, ge = fem.grad(x), exact.grad(x)
    rel = np.linalg.norm(g - ge, axis=1) / np.linalg.norm(ge, axis=1)
    assert rel.max() < 0.02
    # at the source itself
    gz, gz_exact = fem.grad(np.array([[0.5, 0.0]]))[0], exact.grad([0.5, 0.0])
    assert np.linalg.norm(gz - gz_exact) < 0.02 * np.linalg.norm(gz_exact)


def test_fem_gradient_converges_at_first_order(rng):
    sys = system([[0.4, 0.2], [-0.3, -0.2]], [1.0, -0.6])
    exact = solve_disk_analytic(ISO, sys)
    x = interior_probes(rng, 10, sys)
    ge = exact.grad(x)
    hs = [0.1, 0.05, 0.025]
    errs = [np.max(np.linalg.norm(solve_fem(ISO, sys, DISK, h).grad(x) - ge, axis=1)) for h in hs]
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.0


def test_fem_symmetric_pair():
    sys = system([[0.3, 0.0], [-0.3, 0.0]], [1.0, 1.0])
    r = solve_fem(ISO, sys, DISK, 0.05)
    g = r.grad(np.array([[0.0, 0.0]]))[0]
    # the mesh is only approximately symmetric
    assert abs(g[1]) < 1e-3
    # a reflection reverses orientation, so the potential of a mirror-symmetric
    # configuration is odd in x2 (its gradient field is mirror-symmetric)
    p = np.array([[0.1, 0.3], [-0.5, 0.4], [0.6, 0.2]])
    q = p * [1, -1]
    np.testing.assert_allclose(r.value(p), -r.value(q), atol=1e-3 * np.abs(r.u).max())
    exact = solve_disk_analytic(ISO, sys)
    np.testing.assert_allclose(exact.value(p), -exact.value(q), atol=1e-12)
    gp, gq = r.grad(p), r.grad(q)
    np.testing.assert_allclose(gp * [-1, 1], gq, atol=1e-3)


def test_fem_uniqueness_across_initial_guesses(rng):
    sys = system([[0.3, 0.2]], [1.0])
    r1 = solve_fem(ISO, sys, DISK, 0.08)
    r2 = solve_fem(ISO, sys, DISK, 0.08, initial_guess=rng.normal(size=r1.mesh.n_vertices))
    assert np.max(np.abs(r1.u - r2.u)) < 1e-7 * np.abs(r1.u).max()


def test_fem_weak_residual_and_mean(rng):
    sys = system([[0.3, 0.2], [-0.2, -0.4]], [1.0, -2.0])
    r = solve_fem(Material(1.4, 2.0), sys, DISK, 0.06)
    res = weak_residual(r)
    assert np.linalg.norm(res) <= 1e-8 * np.linalg.norm(r.load)
    assert abs(r.normalization["mean"]) < 1e-8 * np.abs(r.u).max()
    assert abs(r.normalization["compatibility_residual"]) < 1e-6 * np.abs(r.load).sum()


def test_fem_on_polygon_is_traction_free_in_weak_sense():
    sq = Polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    sys = system([[0.2, 0.1]], [1.0])
    r = solve_response(ISO, sys, sq, resolution=0.1)
    assert r.backend == "fem"
    np.testing.assert_allclose(r.u.sum() * 0, 0)
    assert abs(r.normalization["compatibility_residual"]) < 1e-8
