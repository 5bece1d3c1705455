"""Internal and string stability, graph Laplacians and algebraic connectivity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .model import Scenario, TopologyGraph, TopologyKind, TrajectoryTable

DEFAULT_THRESHOLD = 0.01
EXTENDED_HORIZON = 30.0
MAX_HORIZON = 960.0


class DisconnectedTopology(ValueError):
    """The information graph splits into several components."""


@dataclass(frozen=True)
class LaplacianBundle:
    """``L = D W D^T`` over the listed nodes (rows of ``D_inc``)."""

    nodes: tuple[int, ...]
    D_inc: np.ndarray
    W: np.ndarray
    L: np.ndarray
    sigma2: float

    def quadratic(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.L @ x)


def build_laplacian(
    topology: TopologyGraph, include_virtual_leader: bool = True, check_connected: bool = True
) -> LaplacianBundle:
    """Incidence matrix with head = follower (+1) and tail = observed vehicle (-1).

    Without the virtual leader, node 0 and its links are dropped. Links of
    weight zero are kept in ``D_inc`` but play no part in connectivity.
    With ``check_connected=False`` a disconnected graph is accepted and its
    ``sigma2`` is (numerically) zero.
    """
    nodes = tuple(range(0 if include_virtual_leader else 1, topology.n + 1))
    index = {v: k for k, v in enumerate(nodes)}
    edges = [e for e in topology.edges if e[1] in index]
    D = np.zeros((len(nodes), len(edges)))
    w = np.zeros(len(edges))
    for k, (i, j, wt) in enumerate(edges):
        D[index[i], k] = 1.0
        D[index[j], k] = -1.0
        w[k] = wt
    W = np.diag(w)
    L = (D * w) @ D.T
    pos = [(index[i], index[j]) for i, j, wt in edges if wt > 0]
    if len(nodes) > 1:
        rows = [a for a, _ in pos]
        cols = [b for _, b in pos]
        g = coo_matrix((np.ones(len(pos)), (rows, cols)), shape=(len(nodes), len(nodes)))
        ncomp, labels = connected_components(g, directed=False)
        if ncomp > 1 and check_connected:
            main = labels[index[nodes[0]]]
            stray = sorted(nodes[k] for k in range(len(nodes)) if labels[k] != main)
            raise DisconnectedTopology(f"topology is disconnected: vehicles {stray} are isolated from vehicle {nodes[0]}")
        sigma2 = float(np.linalg.eigvalsh(L)[1])
    else:
        sigma2 = float("nan")
    return LaplacianBundle(nodes, D, W, L, sigma2)


def topology_summary(topology: TopologyGraph) -> dict:
    """Link count and mean link weight (zero-weight links included)."""
    w = np.array([e[2] for e in topology.edges])
    return {"links": int(w.size), "mean_weight": float(w.mean())}


@dataclass(frozen=True)
class StabilityReport:
    """Convergence metrics of one trajectory.

    ``convergence_times[i]`` is ``nan`` when vehicle ``i + 1`` is still
    above the threshold at the end of the horizon.
    """

    threshold: float
    horizon: float
    terminal_error: np.ndarray
    convergence_times: np.ndarray

    @property
    def converged(self) -> np.ndarray:
        return np.isfinite(self.convergence_times)

    @property
    def internally_stable(self) -> bool:
        return bool(np.all(self.converged))

    @property
    def mean_time(self) -> float:
        """Mean convergence time; ``nan`` unless every vehicle converged."""
        if not self.internally_stable:
            return float("nan")
        return float(np.mean(self.convergence_times))

    @property
    def mean_time_capped(self) -> float:
        """Mean with unconverged vehicles counted at the horizon."""
        return float(np.mean(np.where(self.converged, self.convergence_times, self.horizon)))


def internal_stability(traj: TrajectoryTable, threshold: float = DEFAULT_THRESHOLD) -> StabilityReport:
    """Time after which each ``|e_i|`` stays below ``threshold`` through the end."""
    last = _kernels.last_above(traj.e, threshold)
    M = traj.t.size
    times = np.empty(last.size)
    for k, idx in enumerate(last):
        if idx < 0:
            times[k] = 0.0
        elif idx >= M - 1:
            times[k] = np.nan
        else:
            times[k] = traj.t[idx + 1]
    return StabilityReport(threshold, float(traj.t[-1]), np.abs(traj.e[-1]).copy(), times)


def timing_samples(t_f: float) -> int:
    """Grid for convergence timing: 100 samples per second, at least 1000."""
    return max(1000, int(math.ceil(100 * t_f)) + 1)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Timing at the scenario horizon and, if needed, on a longer re-solve."""

    base: StabilityReport
    final: StabilityReport
    method: str

    @property
    def extended(self) -> bool:
        return self.final is not self.base

    @property
    def mean_time(self) -> float:
        return self.final.mean_time


def convergence_study(scenario: Scenario, threshold: float = DEFAULT_THRESHOLD, method: str = "auto") -> ConvergenceStudy:
    """Mean convergence time, re-solving on a longer horizon when needed.

    If a vehicle is unconverged at ``t_f`` the game is re-solved with
    ``t_f = 30``; should that still leave vehicles above the threshold the
    horizon keeps doubling (up to 960 s).
    """
    from .solve import solve

    def run(sc):
        sol, used = solve(sc, method)
        return internal_stability(sol.sample(timing_samples(sc.t_f)), threshold), used

    base, used = run(scenario)
    final = base
    horizon = max(EXTENDED_HORIZON, scenario.t_f)
    while not final.internally_stable and horizon <= MAX_HORIZON:
        if horizon > scenario.t_f:
            final, used = run(scenario.with_horizon(horizon))
        horizon *= 2
    return ConvergenceStudy(base, final, used)


@dataclass(frozen=True)
class StringStabilityReport:
    """Adjacent initial-error ratios ``|e_i(0)| / |e_{i-1}(0)|`` for ``i >= 2``."""

    ratios: np.ndarray
    degenerate: np.ndarray
    homogeneous: np.ndarray

    @property
    def pair_pass(self) -> np.ndarray:
        return (self.ratios <= 1.0 + 1e-12) & ~self.degenerate

    @property
    def passed(self) -> bool:
        ok = self.pair_pass | self.degenerate
        return bool(np.all(ok))


def string_ratios(e0, omega) -> StringStabilityReport:
    """Ratios ``|e_i(0)| / |e_{i-1}(0)|`` from initial errors and PF weights."""
    e0 = np.abs(np.asarray(e0, dtype=float))
    omega = np.asarray(omega, dtype=float)
    prev, cur = e0[:-1], e0[1:]
    degenerate = prev == 0.0
    ratios = np.full(prev.shape, np.nan)
    ratios[~degenerate] = cur[~degenerate] / prev[~degenerate]
    return StringStabilityReport(ratios, degenerate, omega[1:] == omega[:-1])


def string_stability_pf(scenario: Scenario) -> StringStabilityReport:
    """PF sufficient condition ``|y_i(0) + d_i| <= |y_{i-1}(0) + d_{i-1}|``.

    Entry ``k`` refers to the pair of vehicles ``(k + 1, k + 2)``. A zero
    predecessor error makes the ratio undefined; such pairs are flagged
    degenerate and excluded from the verdict.
    """
    if scenario.topology.kind is not TopologyKind.PF:
        raise ValueError("string stability test applies to PF topologies only")
    nb = scenario.topology.neighbor_sets
    omega = [nb[i][i - 1] for i in range(1, scenario.n + 1)]
    return string_ratios(scenario.e0, omega)
