"""Hamiltonian systems: Hamilton equations, action and the Poincare 1-form.

Trajectories are integrated with classical RK4 on the augmented state
``(q, p, S)`` where ``dS/dt = p . dH/dp - H`` is the Lagrangian, so the
accumulated action and the phase-space state share the same stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .expr import SingularEvaluationError, as_expression, differentiate, evaluate
from .io import write_csv

__all__ = [
    "HamiltonianSystem",
    "PhaseTrajectory",
    "HamiltonJacobiReport",
    "hamilton_rhs",
    "integrate_hamilton",
    "poincare_residual",
    "hamilton_jacobi_residual",
    "phase_divergence",
]


class HamiltonianSystem:
    """``H(t, q_1..q_m, p_1..p_m)`` with cached partials.

    With one degree of freedom the default names are ``q`` and ``p``;
    otherwise ``q1..qm`` and ``p1..pm``.
    """

    def __init__(self, H, q: Sequence[str] = None, p: Sequence[str] = None,
                 t: str = "t", dof: int = None):
        self.H = as_expression(H)
        if q is None:
            dof = dof or (len(p) if p is not None else 1)
            q = ["q"] if dof == 1 else [f"q{j + 1}" for j in range(dof)]
        if p is None:
            p = ["p"] if len(q) == 1 else [f"p{j + 1}" for j in range(len(q))]
        self.q_names = tuple(q)
        self.p_names = tuple(p)
        self.t_name = t
        if len(self.q_names) != len(self.p_names):
            raise ValueError("need as many momenta as coordinates")
        declared = set(self.q_names) | set(self.p_names) | {t}
        if len(declared) != 2 * len(self.q_names) + 1:
            raise ValueError("variable names must be distinct")
        extra = set(self.H.free_variables) - declared
        if extra:
            raise ValueError(f"H references undeclared variables {sorted(extra)}")
        self.H_q = tuple(differentiate(self.H, n) for n in self.q_names)
        self.H_p = tuple(differentiate(self.H, n) for n in self.p_names)
        self.H_t = differentiate(self.H, t)

    @property
    def dof(self) -> int:
        return len(self.q_names)

    @property
    def autonomous(self) -> bool:
        return self.t_name not in self.H.free_variables

    def env(self, t, q, p) -> dict[str, float]:
        env = {self.t_name: float(t)}
        env.update(zip(self.q_names, map(float, np.atleast_1d(q))))
        env.update(zip(self.p_names, map(float, np.atleast_1d(p))))
        return env

    def energy(self, t, q, p) -> float:
        return evaluate(self.H, self.env(t, q, p))


def hamilton_rhs(sys: HamiltonianSystem, t, q, p) -> tuple[np.ndarray, np.ndarray]:
    env = sys.env(t, q, p)
    dq = np.array([evaluate(e, env) for e in sys.H_p])
    dp = -np.array([evaluate(e, env) for e in sys.H_q])
    return dq, dp


@dataclass
class PhaseTrajectory:
    dt: float
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    S: np.ndarray
    H: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.t)

    def endpoint(self):
        return self.t[-1], self.q[-1].copy(), self.p[-1].copy()

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.H - self.H[0])))

    def csv_header(self, sys: HamiltonianSystem = None) -> list[str]:
        m = self.q.shape[1]
        qn = sys.q_names if sys else [f"q{j + 1}" for j in range(m)]
        pn = sys.p_names if sys else [f"p{j + 1}" for j in range(m)]
        return ["t", *qn, *pn, "S", "H"]

    def to_csv(self, path, sys: HamiltonianSystem = None) -> None:
        rows = ([self.t[k], *self.q[k], *self.p[k], self.S[k], self.H[k]] for k in range(len(self)))
        write_csv(path, self.csv_header(sys), rows)


def integrate_hamilton(sys: HamiltonianSystem, q0, p0, t0: float, dt: float,
                       steps: int) -> PhaseTrajectory:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    m = sys.dof
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    if q0.size != m or p0.size != m:
        raise ValueError(f"initial state must have {m} coordinates and momenta")

    def f(t, y):
        q, p = y[:m], y[m:2 * m]
        env = sys.env(t, q, p)
        hp = np.array([evaluate(e, env) for e in sys.H_p])
        hq = np.array([evaluate(e, env) for e in sys.H_q])
        lag = float(np.dot(p, hp)) - evaluate(sys.H, env)
        return np.concatenate([hp, -hq, [lag]])

    ys = np.empty((steps + 1, 2 * m + 1))
    ys[0] = np.concatenate([q0, p0, [0.0]])
    ts = t0 + dt * np.arange(steps + 1)
    for k in range(steps):
        t, y = ts[k], ys[k]
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise ArithmeticError(f"non-finite state after step {k + 1}")
        ys[k + 1] = y
    q, p, S = ys[:, :m], ys[:, m:2 * m], ys[:, 2 * m]
    H = np.array([sys.energy(ts[k], q[k], p[k]) for k in range(steps + 1)])
    return PhaseTrajectory(dt, ts, q, p, S, H)


def poincare_residual(sys: HamiltonianSystem, traj: PhaseTrajectory) -> float:
    """Max over steps of ``|dS - (-H dt + p . dq)| / dt``.

    The right-hand side uses midpoint quadrature: ``H`` evaluated at the
    averaged state and time, ``p`` averaged over the step.
    """
    if len(traj) < 2:
        return 0.0
    worst = 0.0
    for k in range(len(traj) - 1):
        dt = traj.t[k + 1] - traj.t[k]
        qm = 0.5 * (traj.q[k] + traj.q[k + 1])
        pm = 0.5 * (traj.p[k] + traj.p[k + 1])
        hm = sys.energy(traj.t[k] + 0.5 * dt, qm, pm)
        form = -hm * dt + float(np.dot(pm, traj.q[k + 1] - traj.q[k]))
        dS = traj.S[k + 1] - traj.S[k]
        worst = max(worst, abs(dS - form) / dt)
    return worst


@dataclass
class HamiltonJacobiReport:
    max_residual: float
    location: dict[str, float] | None
    skipped: list[dict[str, float]]

    def __float__(self):
        return self.max_residual


def hamilton_jacobi_residual(sys: HamiltonianSystem, s_field, sample_points: Iterable
                             ) -> HamiltonJacobiReport:
    """Max of ``|ds/dt + H(t, q, ds/dq)|`` over ``sample_points``.

    Each sample is a mapping with the time and coordinate names, or a
    sequence ``(t, q_1, ..., q_m)``. Singular samples are skipped and listed.
    """
    s = as_expression(s_field)
    names = (sys.t_name,) + sys.q_names
    extra = set(s.free_variables) - set(names)
    if extra:
        raise ValueError(f"s references variables other than t and q: {sorted(extra)}")
    s_t = differentiate(s, sys.t_name)
    s_q = [differentiate(s, n) for n in sys.q_names]
    worst, where, skipped = 0.0, None, []
    for pt in sample_points:
        if isinstance(pt, dict):
            env = {k: float(pt[k]) for k in names}
        else:
            env = dict(zip(names, map(float, pt)))
        try:
            p = [evaluate(e, env) for e in s_q]
            r = abs(evaluate(s_t, env) + sys.energy(env[sys.t_name], [env[n] for n in sys.q_names], p))
        except SingularEvaluationError:
            skipped.append(env)
            continue
        if where is None or r > worst:
            worst, where = r, env
    return HamiltonJacobiReport(worst, where, skipped)


def phase_divergence(sys: HamiltonianSystem):
    """Symbolic divergence of the Hamiltonian vector field (identically zero)."""
    total = as_expression(0.0)
    for qn, pn, hq, hp in zip(sys.q_names, sys.p_names, sys.H_q, sys.H_p):
        total = total + differentiate(hp, qn) - differentiate(hq, pn)
    return total
