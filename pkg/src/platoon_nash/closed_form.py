"""Analytic Nash trajectories for predecessor-following topologies.

Under PF each spacing error decays independently,
``e_i(t) = alpha_i(t) e_i(0)``. Under TPF the errors are coupled through a
lower-triangular matrix ``A`` and ``e(t) = P(t) e(0)`` with
``P(t) = V diag(alpha_k(t)) V^{-1}``, ``alpha_k`` using ``sqrt(delta_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matfun import EigenFactorization, eig_lower_triangular, scalar_alpha, scalar_alpha_dot
from .model import Scenario, TopologyKind, TrajectoryTable


class TopologyMismatch(ValueError):
    """Solver called on a scenario of the wrong topology kind."""


def _grid(t):
    t = np.asarray(t, dtype=float)
    return t, t.ndim == 0


@dataclass(frozen=True)
class PfSolution:
    """Per-vehicle PF closed form; evaluable at any ``t`` in ``[0, t_f]``."""

    omega: np.ndarray
    d: np.ndarray
    y0: np.ndarray
    t_f: float

    @property
    def n(self) -> int:
        return self.d.size

    def alpha(self, t):
        t, scalar = _grid(t)
        a = scalar_alpha(self.omega, np.atleast_1d(t)[:, None], self.t_f)
        return a[0] if scalar else a

    def alpha_dot(self, t):
        t, scalar = _grid(t)
        a = scalar_alpha_dot(self.omega, np.atleast_1d(t)[:, None], self.t_f)
        return a[0] if scalar else a

    def evaluate(self, t):
        """Return ``(y, u)``; rows follow ``t`` when it is an array."""
        e0 = self.y0 + self.d
        y = self.alpha(t) * e0 - self.d
        u = self.alpha_dot(t) * e0
        if np.ndim(t) == 0:
            # alpha(0) is exactly 1, but (y0 + d) - d can differ from y0 by one ulp
            if float(t) == 0.0:
                y = self.y0.copy()
        else:
            y[np.asarray(t) == 0.0] = self.y0
        return y, u

    def error(self, t):
        return self.alpha(t) * (self.y0 + self.d)

    def sample(self, M: int = 1000) -> TrajectoryTable:
        t = np.linspace(0.0, self.t_f, M)
        y, u = self.evaluate(t)
        return TrajectoryTable.from_y(t, y, u, self.d)


@dataclass(frozen=True)
class TpfSolution:
    """Modal closed form ``e(t) = V diag(alpha_k(t)) Vinv e(0)``."""

    ef: EigenFactorization
    A: np.ndarray
    d: np.ndarray
    y0: np.ndarray
    t_f: float

    @property
    def n(self) -> int:
        return self.d.size

    def _modal(self, t, deriv=False):
        t, scalar = _grid(t)
        f = scalar_alpha_dot if deriv else scalar_alpha
        a = f(self.ef.delta, np.atleast_1d(t)[:, None], self.t_f)
        return a, scalar

    def evaluate(self, t):
        z0 = self.ef.Vinv @ (self.y0 + self.d)
        a, scalar = self._modal(t)
        ad, _ = self._modal(t, deriv=True)
        e = (a * z0) @ self.ef.V.T
        u = (ad * z0) @ self.ef.V.T
        y = e - self.d
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        y[tt == 0.0] = self.y0
        return (y[0], u[0]) if scalar else (y, u)

    def alpha_coefficient(self, i: int, j: int, t: float) -> float:
        """Coefficient of ``y_i(0)`` in ``y_j(t)`` (1-based vehicle indices).

        Equals ``sum_k eta_k^j zeta_i^k alpha_k^k(t)`` where ``eta`` and
        ``zeta`` are the entries of ``V`` and ``Vinv``.
        """
        a = scalar_alpha(self.ef.delta, t, self.t_f)
        return float(np.sum(self.ef.V[j - 1, :] * self.ef.Vinv[:, i - 1] * a))

    def sample(self, M: int = 1000) -> TrajectoryTable:
        t = np.linspace(0.0, self.t_f, M)
        y, u = self.evaluate(t)
        return TrajectoryTable.from_y(t, y, u, self.d)


def assemble_P(sol: TpfSolution, t: float) -> np.ndarray:
    """``P(t) = V diag(alpha_k(t)) Vinv`` so that ``y = P y0 + (P - I) d``."""
    if isinstance(sol, PfSolution):
        return np.diag(sol.alpha(t))
    P = sol.ef.apply(scalar_alpha(sol.ef.delta, t, sol.t_f))
    return np.tril(P)


def solve_pf(scenario: Scenario) -> PfSolution:
    topo = scenario.topology
    if topo.kind is not TopologyKind.PF:
        raise TopologyMismatch(f"solve_pf needs a PF topology, got {topo.kind.value}")
    omega = np.array([topo.neighbor_sets[i][i - 1] for i in range(1, scenario.n + 1)])
    if np.any(omega <= 0):
        raise TopologyMismatch("PF weights must be positive")
    return PfSolution(omega, scenario.d.copy(), scenario.y0.copy(), scenario.t_f)


def tpf_matrix(scenario: Scenario) -> np.ndarray:
    """Lower-bidiagonal TPF information matrix.

    Diagonal ``omega_i + omega_tilde_i`` and subdiagonal ``omega_tilde_i``;
    the (2, 1) entry is zero since vehicle 2 has no second predecessor.
    """
    n = scenario.n
    nb = scenario.topology.neighbor_sets
    A = np.zeros((n, n))
    for i in range(1, n + 1):
        w1 = nb[i].get(i - 1, 0.0)
        w2 = nb[i].get(i - 2, 0.0)
        A[i - 1, i - 1] = w1 + w2
        if i >= 3:
            A[i - 1, i - 2] = w2
    return A


def solve_tpf(scenario: Scenario) -> TpfSolution:
    """Raises :class:`~platoon_nash.matfun.NearDegenerateSpectrum` if two
    diagonal entries of the TPF matrix coincide."""
    topo = scenario.topology
    if topo.kind not in (TopologyKind.TPF, TopologyKind.PF):
        raise TopologyMismatch(f"solve_tpf needs a TPF topology, got {topo.kind.value}")
    A = tpf_matrix(scenario)
    if scenario.n < 3 or topo.kind is TopologyKind.PF:
        # diagonal matrix: modal basis is the identity, no gap condition
        delta = np.diag(A).copy()
        eye = np.eye(scenario.n)
        ef = EigenFactorization(delta, eye, eye.copy())
    else:
        ef = eig_lower_triangular(A)
    return TpfSolution(ef, A, scenario.d.copy(), scenario.y0.copy(), scenario.t_f)
