"""Unconstrained MPC baseline on the discretised platoon.

The extended state is ``x = (x_0, ..., x_n, 1)``. Player ``i`` commands the
velocity difference ``u_i`` to its predecessor, which moves vehicles
``i..n`` together: ``x(k+1) = x(k) + sum_i T_s b_i u_i(k)``.

Each player minimises

    x(k)^T Q_i x(k) + X^T Phi_i X + U_i^T U_i,    X = A x(k) + B_i U_i,

over its own ``N`` future inputs, ignoring the other players' inputs in the
prediction. The minimiser is
``U_i* = -(I + B_i^T Phi_i B_i)^{-1} B_i^T Phi_i A x(k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Scenario, TrajectoryTable


class MpcDivergence(RuntimeError):
    """Closed-loop spacing errors grew beyond ten times their initial size."""


@dataclass(frozen=True)
class MpcConfig:
    N: int = 5
    T_s: float = 0.1
    t_f: float | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("prediction horizon N must be a positive integer")
        if not self.T_s > 0:
            raise ValueError("sampling time T_s must be positive")


@dataclass(frozen=True)
class QMatrix:
    """Stage weight of player ``i`` over the extended state."""

    player: int
    Q: np.ndarray

    def cost(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)


@dataclass(frozen=True)
class PredictionStack:
    N: int
    T_s: float
    A_pred: np.ndarray
    B: tuple[np.ndarray, ...]
    Phi: tuple[np.ndarray, ...]
    gains: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.B)


def offsets(scenario: Scenario, i: int, j: int) -> float:
    """``d_ij = d_{j+1} + ... + d_i``: target of ``x_i - x_j``."""
    return float(np.sum(scenario.d[j:i]))


def spacing_cost(scenario: Scenario, i: int, x) -> float:
    """``sum_j w_ij (x_i - x_j + d_ij)^2`` for absolute positions ``x``."""
    x = np.asarray(x, dtype=float)
    return float(sum(w * (x[i] - x[j] + offsets(scenario, i, j)) ** 2 for j, w in scenario.topology.neighbor_sets[i].items()))


def q_from_links(n: int, i: int, links, offset) -> np.ndarray:
    """``sum_j w_ij g g^T`` with ``g = e_i - e_j + offset(j) e_{n+1}``.

    ``links`` maps observed vehicle ``j`` to weight ``w_ij``.
    """
    Q = np.zeros((n + 2, n + 2))
    for j, w in links.items():
        g = np.zeros(n + 2)
        g[i] = 1.0
        g[j] = -1.0
        g[n + 1] = offset(j)
        Q += w * np.outer(g, g)
    return Q


def build_q(scenario: Scenario, i: int) -> QMatrix:
    """Stage weight ``Q_i`` with ``x^T Q_i x`` equal to :func:`spacing_cost`.

    The upper-left block is the per-player Laplacian ``L_i``; the trailing
    column holds the offsets ``d_ij``. The identity is checked on ten random
    extended states before returning.
    """
    n = scenario.n
    Q = q_from_links(n, i, scenario.topology.neighbor_sets[i], lambda j: offsets(scenario, i, j))
    rng = np.random.default_rng(i)
    for _ in range(10):
        x = np.append(rng.normal(size=n + 1), 1.0)
        ref = spacing_cost(scenario, i, x[:-1])
        assert abs(x @ Q @ x - ref) <= 1e-10 * (1.0 + abs(ref)), "Q_i does not reproduce the spacing cost"
    Q.flags.writeable = False
    return QMatrix(i, Q)


def input_vector(n: int, i: int) -> np.ndarray:
    """``b_i``: ones in the slots of vehicles ``i..n``, zero for leader and constant."""
    b = np.zeros(n + 2)
    b[i:n + 1] = 1.0
    return b


def build_stack(scenario: Scenario, config: MpcConfig, qs=None) -> PredictionStack:
    n, N, Ts = scenario.n, int(config.N), config.T_s
    m = n + 2
    if qs is None:
        qs = [build_q(scenario, i) for i in range(1, n + 1)]
    A_pred = np.tile(np.eye(m), (N, 1))
    Bs, Phis, gains = [], [], []
    for i in range(1, n + 1):
        bh = Ts * input_vector(n, i)
        B = np.zeros((N * m, N))
        for r in range(N):
            for c in range(r + 1):
                B[r * m:(r + 1) * m, c] = bh
        Phi = np.kron(np.eye(N), qs[i - 1].Q)
        H = np.eye(N) + B.T @ Phi @ B
        # H is identity plus PSD, so it is always invertible
        assert np.min(np.linalg.eigvalsh(H)) >= 1.0 - 1e-9
        K = -np.linalg.solve(H, B.T @ Phi @ A_pred)
        Bs.append(B)
        Phis.append(Phi)
        gains.append(K)
    return PredictionStack(N, Ts, A_pred, tuple(Bs), tuple(Phis), tuple(gains))


def predicted_cost(stack: PredictionStack, q: QMatrix, x_k, U) -> float:
    """Compact cost of player ``q.player`` for its input sequence ``U``."""
    i = q.player - 1
    X = stack.A_pred @ x_k + stack.B[i] @ U
    return float(x_k @ q.Q @ x_k + X @ stack.Phi[i] @ X + U @ U)


def mpc_step(stack: PredictionStack, qs, x_k) -> np.ndarray:
    """Optimal input sequences, one row of length ``N`` per player."""
    x_k = np.asarray(x_k, dtype=float)
    if x_k[-1] != 1.0:
        raise ValueError("extended state must end with the constant 1")
    return np.array([K @ x_k for K in stack.gains])


@dataclass(frozen=True)
class MpcRun:
    table: TrajectoryTable
    x: np.ndarray
    config: MpcConfig

    @property
    def effort(self) -> float:
        return control_effort(self.table)


def control_effort(table: TrajectoryTable) -> float:
    """``int sum_i u_i^2 dt`` by composite trapezoid on the table's grid."""
    return table.control_effort()


def mpc_rollout(scenario: Scenario, config: MpcConfig, x_init=None) -> MpcRun:
    """Closed loop on the ``T_s`` grid; the leader slot stays fixed.

    Row ``k`` of the table holds the state at ``k T_s`` and the input
    applied from that instant, so the last row carries the input the
    controller would issue at the final state. ``x_init`` overrides the
    scenario's initial positions (leader first).
    """
    n = scenario.n
    t_f = scenario.t_f if config.t_f is None else config.t_f
    steps = int(np.floor(t_f / config.T_s + 1e-9))
    qs = [build_q(scenario, i) for i in range(1, n + 1)]
    stack = build_stack(scenario, config, qs)
    bh = np.array([config.T_s * input_vector(n, i) for i in range(1, n + 1)])
    x = np.append(scenario.x0 if x_init is None else np.asarray(x_init, dtype=float), 1.0)
    e0 = np.abs(np.diff(x[:n + 1]) + scenario.d)
    limit = 10.0 * np.where(e0 > 0, e0, max(float(e0.max()), 1e-12))
    X = np.empty((steps + 1, n + 2))
    U = np.empty((steps + 1, n))
    for k in range(steps + 1):
        X[k] = x
        u = mpc_step(stack, qs, x)[:, 0]
        U[k] = u
        e = np.diff(x[:n + 1]) + scenario.d
        if np.any(np.abs(e) > limit):
            raise MpcDivergence(f"spacing error exceeded ten times its initial value at step {k}")
        x = x + u @ bh
    t = config.T_s * np.arange(steps + 1)
    y = np.diff(X[:, :n + 1], axis=1)
    return MpcRun(TrajectoryTable.from_y(t, y, U, scenario.d), X, config)


@dataclass(frozen=True)
class ComparisonReport:
    game_effort: float
    mpc_effort: float
    game_terminal_error: float
    mpc_terminal_error: float
    game_method: str
    game_max_u: float
    mpc_max_u: float

    @property
    def game_cheaper(self) -> bool:
        return self.game_effort < self.mpc_effort

    def converged(self, tol: float = 0.05) -> bool:
        return self.game_terminal_error < tol and self.mpc_terminal_error < tol


def compare(scenario: Scenario, config: MpcConfig | None = None, samples: int | None = None) -> ComparisonReport:
    """Control effort and terminal error of the game solution against MPC."""
    from .solve import solve

    config = config or MpcConfig()
    sol, used = solve(scenario)
    M = samples or max(1000, int(np.ceil(100 * scenario.t_f)) + 1)
    game = sol.sample(M)
    run = mpc_rollout(scenario, config)
    return ComparisonReport(
        game_effort=game.control_effort(),
        mpc_effort=run.effort,
        game_terminal_error=float(np.max(np.abs(game.e[-1]))),
        mpc_terminal_error=float(np.max(np.abs(run.table.e[-1]))),
        game_method=used,
        game_max_u=float(np.max(np.abs(game.u))),
        mpc_max_u=float(np.max(np.abs(run.table.u))),
    )
