import numpy as np
import pytest

from dislab.dynamics import ENERGY_RTOL, evolve, state_of, step
from dislab.errors import AdmissibilityError, StepCollapse
from dislab.model import DislocationSystem, Material, UnitDisk
from dislab.problem import Problem

PROB = Problem()


def system(pos, b, eps=0.03):
    return DislocationSystem.from_arrays(pos, b, eps)


def test_center_dislocation_is_stationary():
    sys = system([[0, 0]], [1.0])
    s0 = state_of(PROB, sys)
    for dt in (1e-3, 1.0, 100.0):
        s1, used = step(PROB, s0, dt)
        assert used == dt
        np.testing.assert_array_equal(s1.sys.positions, sys.positions)
    traj = evolve(PROB, sys, 0.1, 5)
    assert traj.reason == "force-threshold"
    assert len(traj) == 2
    np.testing.assert_array_equal(traj.positions[0], traj.positions[1])


def test_symmetric_pair_stays_mirror_symmetric():
    traj = evolve(PROB, system([[0.3, 0.0], [-0.3, 0.0]], [1.0, 1.0]), 0.01, 30)
    assert len(traj) > 5
    for p in traj.positions:
        assert abs(p[0, 0] + p[1, 0]) <= 1e-12
        assert abs(p[0, 1]) <= 1e-12 and abs(p[1, 1]) <= 1e-12


def test_energy_descent_on_random_run(rng):
    pos = [[0.3, 0.2], [-0.25, 0.3], [0.0, -0.35]]
    traj = evolve(PROB, system(pos, [1.0, -1.0, 0.5]), 0.005, 40)
    U = np.array(traj.energies)
    assert np.all(np.diff(U) <= ENERGY_RTOL * (1 + np.abs(U[:-1])))


def test_opposite_sign_pair_collides():
    traj = evolve(PROB, system([[0.15, 0.0], [-0.15, 0.0]], [1.0, -1.0]), 0.002, 500)
    assert traj.reason == "near-collision"
    sep = [np.linalg.norm(p[0] - p[1]) for p in traj.positions]
    assert all(a > b for a, b in zip(sep, sep[1:]))
    assert sep[-1] < 2 * 0.03 * 1.5


def test_off_center_dislocation_runs_to_the_boundary():
    traj = evolve(PROB, system([[0.5, 0.1]], [1.0]), 0.05, 500)
    assert traj.reason == "boundary-approach"
    r = [np.hypot(*p[0]) for p in traj.positions]
    assert all(a < b for a, b in zip(r, r[1:]))
    # initial motion is along the image force
    d = traj.positions[1][0] - traj.positions[0][0]
    f0 = traj.forces[0][0]
    assert d @ f0 > 0.999 * np.linalg.norm(d) * np.linalg.norm(f0)


def test_max_steps_zero():
    sys = system([[0.4, 0.0]], [1.0])
    traj = evolve(PROB, sys, 0.1, 0)
    assert len(traj) == 1
    assert traj.reason == "max-steps"
    rows = traj.rows()
    assert rows[0] == ["step", "t", "x_0", "y_0", "fx_0", "fy_0", "U_total", "reason"]
    assert rows[-1][-1] == "max-steps"


def test_determinism():
    sys = system([[0.3, 0.2], [-0.2, -0.3]], [1.0, 0.5])
    a = evolve(PROB, sys, 0.01, 10)
    b = evolve(PROB, sys, 0.01, 10)
    assert a.rows() == b.rows()


def test_inadmissible_start_rejected():
    with pytest.raises(AdmissibilityError):
        evolve(PROB, system([[0.99, 0.0]], [1.0]), 0.01, 5)


def test_mobility_scales_first_step():
    sys = system([[0.4, 0.0]], [1.0])
    s0 = state_of(PROB, sys)
    s1, _ = step(PROB, s0, 0.01, mobility=[2.0])
    s2, _ = step(PROB, s0, 0.02)
    np.testing.assert_allclose(s1.sys.positions, s2.sys.positions, rtol=1e-15)


def test_overlong_step_is_halved():
    sys = system([[0.8, 0.0]], [1.0])
    s0 = state_of(PROB, sys)
    s1, used = step(PROB, s0, 10.0)
    assert used < 10.0
    assert PROB.validate(s1.sys, raise_on_error=False).valid


def test_step_collapse(monkeypatch):
    sys = system([[0.4, 0.0]], [1.0])
    s0 = state_of(PROB, sys)

    class Rising(Problem):
        def energy(self, sys, R=None, response=None):
            bd = super().energy(sys, R, response)
            return type(bd)(**{**bd.as_dict(), "U_total": bd.U_total + 1.0})

    with pytest.raises(StepCollapse):
        step(Rising(), s0, 0.01)
