"""Gradient-flow dynamics ``dz_l/dt = m_l j_l`` by forward Euler.

A step is rejected (and ``dt`` halved) when it leaves the admissible set or
raises the renormalized energy by more than ``1e-10 (1 + |U|)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DislabError, StepCollapse
from .model import admissibility

ENERGY_RTOL = 1e-10
COLLAPSE_FACTOR = 1e-12

REASONS = ("max-steps", "force-threshold", "near-collision", "boundary-approach")


@dataclass(frozen=True)
class FlowState:
    sys: object
    t: float
    U: float
    forces: np.ndarray


def state_of(problem, sys, t=0.0):
    resp = problem.solve(sys)
    U = problem.energy(sys, response=resp).U_total
    return FlowState(sys, t, U, problem.explicit_forces(sys, resp))


def _mobility(mobility, n):
    m = np.ones(n) if mobility is None else np.broadcast_to(np.asarray(mobility, float), (n,))
    return m[:, None]


def step(problem, state, dt, mobility=None):
    """One accepted forward-Euler step; returns ``(new_state, dt_used)``."""
    sys = state.sys
    m = _mobility(mobility, len(sys))
    trial = dt
    while trial >= COLLAPSE_FACTOR * dt:
        moved = sys.with_positions(sys.positions + trial * m * state.forces)
        if problem.validate(moved, raise_on_error=False).valid:
            try:
                new = state_of(problem, moved, state.t + trial)
            except DislabError:
                new = None
            if new is not None and new.U <= state.U + ENERGY_RTOL * (1.0 + abs(state.U)):
                return new, trial
        trial *= 0.5
    raise StepCollapse(f"step size fell below {COLLAPSE_FACTOR:g} * dt = {COLLAPSE_FACTOR * dt:g} "
                       f"at t={state.t:g}")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    forces: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    reason: str = ""

    def record(self, state, dt=0.0):
        self.times.append(state.t)
        self.positions.append(state.sys.positions.copy())
        self.forces.append(np.asarray(state.forces).copy())
        self.energies.append(state.U)
        self.dts.append(dt)

    def __len__(self):
        return len(self.times)

    def rows(self):
        """Trajectory CSV rows: step, t, x_i, y_i, fx_i, fy_i, U_total, reason."""
        n = self.positions[0].shape[0] if self.positions else 0
        header = ["step", "t"]
        for i in range(n):
            header += [f"x_{i}", f"y_{i}", f"fx_{i}", f"fy_{i}"]
        header += ["U_total", "reason"]
        out = [header]
        last = len(self) - 1
        for k in range(len(self)):
            row = [k, self.times[k]]
            for i in range(n):
                row += [*self.positions[k][i], *self.forces[k][i]]
            row += [self.energies[k], self.reason if k == last else ""]
            out.append(row)
        return out


def stop_reason(state, problem, force_tol, margin):
    sys = state.sys
    eps = sys.epsilon0
    _, clear, seps = admissibility(problem.geom, sys, problem.material.lam)
    if seps and min(seps.values()) < 2.0 * eps * (1.0 + margin):
        return "near-collision"
    if clear and min(clear) < eps * (1.0 + margin):
        return "boundary-approach"
    if len(sys) == 0 or np.max(np.linalg.norm(state.forces, axis=1)) < force_tol:
        return "force-threshold"
    return None


def evolve(problem, sys, dt, max_steps, force_tol=1e-8, margin=0.5, mobility=None):
    """Iterate :func:`step` until a stop condition fires or ``max_steps`` is used up.

    Conditions are checked after every accepted step, so any run with
    ``max_steps >= 1`` records at least the initial and one stepped sample.
    Collision and boundary stops trigger once a separation drops below
    ``2 eps0 (1 + margin)`` or a clearance below ``eps0 (1 + margin)``; the
    band keeps the last accepted configuration safely admissible.
    """
    problem.validate(sys)
    state = state_of(problem, sys)
    traj = Trajectory()
    traj.record(state)
    for _ in range(max_steps):
        state, used = step(problem, state, dt, mobility)
        traj.record(state, used)
        reason = stop_reason(state, problem, force_tol, margin)
        if reason:
            traj.reason = reason
            return traj
    traj.reason = "max-steps"
    return traj
