"""Brute-force verification of the analytic solvers.

Three independent checks:

* fixed-step RK4 integration of the state-costate system
  ``y' = -lambda``, ``lambda' = -A y - omega``;
* shooting for ``lambda(0)`` such that ``lambda(t_f) = 0``, exploiting
  linearity so a single linear solve suffices;
* unilateral-deviation tests of each player's cost functional.

Shooting is done over several segments when the fastest mode grows by more
than ``cosh(4)`` across the horizon. A single forward sweep amplifies
rounding by ``cosh(sqrt(delta_max) t_f)``, which on dense topologies
(``~2e8`` at ``t_f = 10``) swamps the 1e-7 accuracy target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .general_game import InfoMatrix, build_info_matrix
from .model import Scenario, TrajectoryTable

MIN_STEPS = 2000
SEGMENT_GROWTH = 4.0


class OracleDivergence(ArithmeticError):
    """Integration produced non-finite values even after step refinement."""


def _as_info(A, omega=None) -> InfoMatrix:
    if isinstance(A, InfoMatrix):
        return A
    A = np.atleast_2d(np.asarray(A, dtype=float))
    w = np.zeros(A.shape[0]) if omega is None else np.atleast_1d(np.asarray(omega, dtype=float))
    return InfoMatrix(A, w)


def _system(info: InfoMatrix):
    """``z' = M z + c`` for ``z = (y, lambda)``."""
    n = info.A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, n:] = -np.eye(n)
    M[n:, :n] = -info.A
    c = np.concatenate([np.zeros(n), -info.omega_vec])
    return M, c


@dataclass(frozen=True)
class OdeRun:
    """Grid solution of the state-costate system."""

    t: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    h: float
    order: int = 4
    residual: float = 0.0

    @property
    def lambda_tf(self) -> np.ndarray:
        return self.lam[-1]

    @property
    def steps(self) -> int:
        return self.t.size - 1


def _local_residual(M, c, Z, h) -> float:
    """Largest deviation of one grid step from the exact propagator."""
    m = M.shape[0]
    aug = np.zeros((m + 1, m + 1))
    aug[:m, :m] = M
    aug[:m, m] = c
    E = expm(h * aug)
    pred = Z[:-1] @ E[:m, :m].T + E[:m, m]
    scale = 1.0 + np.abs(Z[:-1]).max(axis=1)
    return float(np.max(np.abs(Z[1:] - pred).max(axis=1) / scale))


def integrate_forward(A, y0, lambda0, t_f, steps: int = MIN_STEPS, omega=None) -> OdeRun:
    """Classical RK4 from ``(y0, lambda0)`` on ``steps`` uniform steps.

    ``A`` is an :class:`InfoMatrix` or a bare matrix (with forcing ``omega``,
    default zero). On a non-finite result the step is halved once.
    """
    if steps < 100:
        raise ValueError("steps must be at least 100")
    info = _as_info(A, omega)
    n = info.A.shape[0]
    M, c = _system(info)
    z0 = np.concatenate([np.atleast_1d(y0), np.atleast_1d(lambda0)]).astype(float)
    for attempt in range(2):
        h = t_f / steps
        Z = _kernels.rk4_affine(M, c, z0, h, steps)
        if np.all(np.isfinite(Z)):
            break
        steps *= 2
    else:
        raise OracleDivergence("non-finite state after step refinement")
    t = np.linspace(0.0, t_f, steps + 1)
    res = _local_residual(M, c, Z, h)
    return OdeRun(t, Z[:, :n], Z[:, n:], h, 4, res)


@dataclass(frozen=True)
class OracleSolution:
    """Shooting solution; ``evaluate`` interpolates with one partial RK4 step."""

    info: InfoMatrix
    run: OdeRun
    lambda0: np.ndarray
    d: np.ndarray
    segments: int
    t_f: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "t_f", float(self.run.t[-1]))

    @property
    def y0(self) -> np.ndarray:
        return self.run.y[0]

    @property
    def n(self) -> int:
        return self.d.size

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        run = self.run
        k = np.clip(np.floor(tt / run.h + 1e-9).astype(int), 0, run.steps)
        tau = (tt - run.t[k])[:, None]
        M, c = _system(self.info)
        z = np.hstack([run.y[k], run.lam[k]])
        k1 = z @ M.T + c
        k2 = (z + tau / 2 * k1) @ M.T + c
        k3 = (z + tau / 2 * k2) @ M.T + c
        k4 = (z + tau * k3) @ M.T + c
        z = z + tau / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        n = self.n
        y, u = z[:, :n], -z[:, n:]
        return (y[0], u[0]) if scalar else (y, u)

    def sample(self, M: int = 1000) -> TrajectoryTable:
        t = np.linspace(0.0, self.t_f, M)
        y, u = self.evaluate(t)
        return TrajectoryTable.from_y(t, y, u, self.d)


def _plan(info: InfoMatrix, t_f: float, steps: int | None, segments: int | None):
    smax = float(np.sqrt(np.max(np.abs(np.diag(info.A)))))
    if segments is None:
        segments = max(1, math.ceil(smax * t_f / SEGMENT_GROWTH))
    if steps is None:
        # keep h * sqrt(delta_max) <= 0.005 so truncation stays far below 1e-7
        steps = max(MIN_STEPS, math.ceil(200.0 * smax * t_f))
    steps = segments * math.ceil(steps / segments)
    return steps, segments


def shoot(info, y0, t_f, steps: int | None = None, segments: int | None = None, d=None) -> OracleSolution:
    """Find ``lambda(0)`` with ``lambda(t_f) = 0`` and return the dense run.

    On each of ``K`` equal segments the RK4 map is ``z -> Phi z + p``.
    ``Phi`` and ``p`` come from ``2n + 1`` integrations (one per unit
    vector plus the zero start). The node values then satisfy a sparse
    linear system: ``y`` fixed at the first node, continuity across nodes
    and ``lambda = 0`` at the end. One solve gives every node, and ``K``
    final integrations give the trajectory.
    """
    info = _as_info(info)
    n = info.A.shape[0]
    y0 = np.asarray(y0, dtype=float)
    steps, K = _plan(info, t_f, steps, segments)
    m = steps // K
    h = t_f / steps
    M, c = _system(info)
    p = _kernels.rk4_affine(M, c, np.zeros(2 * n), h, m)[-1]
    zero_c = np.zeros(2 * n)
    Phi = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = 1.0
        Phi[:, k] = _kernels.rk4_affine(M, zero_c, e, h, m)[-1]
    N = 2 * n * K
    G = np.zeros((N, N))
    b = np.zeros(N)
    G[:n, :n] = np.eye(n)
    b[:n] = y0
    row = n
    for k in range(K - 1):
        G[row:row + 2 * n, 2 * n * k:2 * n * (k + 1)] = -Phi
        G[row:row + 2 * n, 2 * n * (k + 1):2 * n * (k + 2)] = np.eye(2 * n)
        b[row:row + 2 * n] = p
        row += 2 * n
    G[row:, 2 * n * (K - 1):] = Phi[n:, :]
    b[row:] = -p[n:]
    nodes = np.linalg.solve(G, b).reshape(K, 2 * n)
    nodes[0, :n] = y0
    pieces = [_kernels.rk4_affine(M, c, nodes[k], h, m)[: (m if k < K - 1 else m + 1)] for k in range(K)]
    Z = np.vstack(pieces)
    if not np.all(np.isfinite(Z)):
        raise OracleDivergence("non-finite state in shooting run")
    run = OdeRun(np.linspace(0.0, t_f, steps + 1), Z[:, :n], Z[:, n:], h, 4, _local_residual(M, c, Z, h))
    if d is None:
        d = np.linalg.solve(info.A, info.omega_vec)
    return OracleSolution(info, run, nodes[0, n:].copy(), np.asarray(d, dtype=float), K)


def shoot_lambda0(A, y0, d, t_f, steps: int | None = None, segments: int | None = None) -> np.ndarray:
    """``lambda(0)`` meeting the terminal condition, found by shooting."""
    info = _as_info(A)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    info = InfoMatrix(info.A, info.A @ d)
    return shoot(info, y0, t_f, steps, segments, d=d).lambda0


def solve_oracle(scenario: Scenario, steps: int | None = None, segments: int | None = None) -> OracleSolution:
    """Oracle solution of a scenario; also the fallback for degenerate spectra."""
    info = build_info_matrix(scenario)
    return shoot(info, scenario.y0, scenario.t_f, steps, segments, d=scenario.d)


# -- Nash certification -----------------------------------------------------


@dataclass(frozen=True)
class DeviationReport:
    player: int
    J: float
    deltas: np.ndarray
    epsilon: float

    @property
    def min_delta(self) -> float:
        return float(np.min(self.deltas))

    @property
    def tolerance(self) -> float:
        return 1e-6 * (1.0 + abs(self.J))

    @property
    def passed(self) -> bool:
        return self.min_delta >= -self.tolerance


def _cumtrapz(f, t):
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t)[:, None], axis=0)
    return out


def player_cost(scenario: Scenario, i: int, t, y, u) -> float:
    """``J_i = int sum_j w_ij (sum_{k=j+1}^{i} e_k)^2 + u_i^2`` by trapezoid."""
    e = y + scenario.d
    integrand = u[:, i - 1] ** 2
    for j, w in scenario.topology.neighbor_sets[i].items():
        integrand = integrand + w * np.sum(e[:, j:i], axis=1) ** 2
    return float(np.trapezoid(integrand, t))


def tent_basis(t, t_f, n_bumps):
    """Hat functions with unit peak on an even partition of ``(0, t_f)``."""
    width = t_f / (n_bumps + 1)
    centers = width * np.arange(1, n_bumps + 1)
    return np.clip(1.0 - np.abs(t[None, :] - centers[:, None]) / width, 0.0, None)


def certify_nash(scenario: Scenario, solution, i: int, n_bumps: int = 20, eps: float = 1e-3, M: int = 4001) -> DeviationReport:
    """Perturb ``u_i`` by ``+-eps`` tents, others fixed, and record ``J_i`` changes.

    States are rebuilt from the controls by cumulative trapezoid so that the
    baseline and every perturbation share one discretisation.
    """
    t = np.linspace(0.0, scenario.t_f, M)
    _, u = solution.evaluate(t)
    y = scenario.y0 + _cumtrapz(u, t)
    J0 = player_cost(scenario, i, t, y, u)
    deltas = []
    for bump in tent_basis(t, scenario.t_f, n_bumps):
        dy = _cumtrapz(bump[:, None], t)[:, 0]
        for sign in (1.0, -1.0):
            u2 = u.copy()
            y2 = y.copy()
            u2[:, i - 1] += sign * eps * bump
            y2[:, i - 1] += sign * eps * dy
            deltas.append(player_cost(scenario, i, t, y2, u2) - J0)
    return DeviationReport(i, J0, np.array(deltas), eps)


@dataclass(frozen=True)
class OpenLoopPlay:
    """Controls generated by propagating an arbitrary ``lambda(0)`` forward.

    Used as a negative control: unless ``lambda0`` is the equilibrium value
    the terminal condition fails and some player can improve.
    """

    ef: object
    info: InfoMatrix
    lambda0: np.ndarray
    y0: np.ndarray
    d: np.ndarray
    t_f: float

    def evaluate(self, t):
        from .general_game import eval_trajectory

        return eval_trajectory(self, t, literal=True)


def corrupted(solution, factor: float = 1.1) -> OpenLoopPlay:
    """Copy of a general-game solution with ``lambda(0)`` scaled by ``factor``."""
    return OpenLoopPlay(solution.ef, solution.info, factor * solution.lambda0, solution.y0, solution.d, solution.t_f)
