"""Semi-analytic Nash solver for arbitrary rearward topologies.

The necessary conditions give the linear two-point boundary-value problem

    y' = -lambda,    lambda' = -A (y + d) = -A y - omega,    omega = A d,

with ``y(0)`` given and ``lambda(t_f) = 0``. Writing ``C(t) = cosh(A^{1/2} t)``
and ``S(t) = sinh(A^{1/2} t) A^{-1/2}``, the state-costate transition blocks
are ``Phi11 = Phi22 = C``, ``Phi12 = -S``, ``Phi21 = -A S`` and the forcing
blocks are ``Psi1 = -(I - C) A^{-1}``, ``Psi2 = -S``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matfun import (
    OVERFLOW_ARG,
    EigenFactorization,
    cosh_sinhc,
    eig_lower_triangular,
    forward_solve,
    scalar_alpha,
    scalar_alpha_dot,
)
from .model import Scenario, TrajectoryTable


@dataclass(frozen=True)
class InfoMatrix:
    """Information matrix ``A`` and forcing vector ``omega = A d``."""

    A: np.ndarray
    omega_vec: np.ndarray


def info_matrix_from_topology(topology) -> np.ndarray:
    """``A[i, k] = sum of w_ij over neighbours j < k`` (1-based ``k <= i``).

    Expanding ``sum_j w_ij (sum_{k=j+1}^{i} e_k)`` as a linear form in ``e``
    gives exactly these coefficients; the diagonal is the row sum.
    """
    n = topology.n
    A = np.zeros((n, n))
    for i, j, w in topology.edges:
        # neighbour j contributes w to columns j+1..i
        A[i - 1, j:i] += w
    return A


def build_info_matrix(scenario: Scenario) -> InfoMatrix:
    A = info_matrix_from_topology(scenario.topology)
    if np.any(np.diag(A) <= 0):
        raise ValueError("every vehicle needs a positive total link weight")
    A.flags.writeable = False
    w = A @ scenario.d
    w.flags.writeable = False
    return InfoMatrix(A, w)


@dataclass(frozen=True)
class GeneralSolution:
    ef: EigenFactorization
    info: InfoMatrix
    lambda0: np.ndarray
    y0: np.ndarray
    d: np.ndarray
    t_f: float

    @property
    def n(self) -> int:
        return self.d.size

    def blocks(self, t: float):
        """Return ``(Phi11, Phi12, Phi21, Phi22, Psi1, Psi2)`` at time ``t``."""
        c, s = cosh_sinhc(self.ef.sqrt_delta, t)
        C, S = self.ef.apply(c), self.ef.apply(s)
        A = self.info.A
        # (I - C) A^{-1} in modal form: (1 - cosh) / delta
        IC_Ainv = self.ef.apply((1.0 - c) / self.ef.delta)
        return C, -S, -A @ S, C, -IC_Ainv, -S

    def evaluate(self, t):
        """``(y, u)`` at scalar ``t`` or rows over an array of times."""
        return eval_trajectory(self, t)

    def costate(self, t):
        return -eval_trajectory(self, t)[1]

    def sample(self, M: int = 1000) -> TrajectoryTable:
        t = np.linspace(0.0, self.t_f, M)
        y, u = self.evaluate(t)
        return TrajectoryTable.from_y(t, y, u, self.d)


def solve_general(scenario: Scenario) -> GeneralSolution:
    """Solve ``Phi22(t_f) lambda0 = -Phi21(t_f) y0 - Psi2(t_f) omega``.

    ``Phi22(t_f)`` is lower-triangular, so a forward substitution suffices.

    Raises
    ------
    NearDegenerateSpectrum
        When the information matrix has (nearly) repeated row sums.
    """
    info = build_info_matrix(scenario)
    ef = eig_lower_triangular(info.A)
    y0 = scenario.y0.copy()
    if np.max(ef.sqrt_delta) * scenario.t_f <= OVERFLOW_ARG:
        c, s = cosh_sinhc(ef.sqrt_delta, scenario.t_f)
        Phi22 = np.tril(ef.apply(c))
        S = ef.apply(s)
        rhs = info.A @ (S @ y0) + S @ info.omega_vec
        lambda0 = forward_solve(Phi22, rhs)
    else:
        # same solve carried out mode by mode: sqrt(delta) tanh(sqrt(delta) t_f)
        th = np.tanh(ef.sqrt_delta * scenario.t_f)
        lambda0 = ef.apply(ef.sqrt_delta * th) @ (y0 + scenario.d)
    return GeneralSolution(ef, info, lambda0, y0, scenario.d.copy(), scenario.t_f)


def eval_trajectory(sol: GeneralSolution, t, literal: bool = False):
    """State and control ``(y, u)`` with ``u = -lambda``.

    In modal coordinates ``q = Vinv (.)`` every block is diagonal:
    ``y = C y0 - S lambda0 - (I - C) A^{-1} omega`` and
    ``lambda = -A S y0 + C lambda0 - S omega``. With ``literal=True`` these
    are evaluated term by term, which cancels growing modes of size
    ``cosh(sqrt(delta) t)`` against each other and loses accuracy on long
    horizons. By default ``lambda0`` is folded in through
    ``cosh(a) cosh(b) - sinh(a) sinh(b) = cosh(a - b)``, leaving only the
    bounded factors ``cosh(sqrt(delta)(t_f - t)) / cosh(sqrt(delta) t_f)``
    and its derivative.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tt = np.atleast_1d(t)[:, None]
    ef = sol.ef
    delta = ef.delta
    if literal:
        qy0 = ef.Vinv @ sol.y0
        ql0 = ef.Vinv @ sol.lambda0
        qw = ef.Vinv @ sol.info.omega_vec
        c, s = cosh_sinhc(ef.sqrt_delta, tt)
        qy = c * qy0 - s * ql0 - (1.0 - c) / delta * qw
        ql = -delta * s * qy0 + c * ql0 - s * qw
        y = qy @ ef.V.T
        u = -(ql @ ef.V.T)
    else:
        qe0 = ef.Vinv @ (sol.y0 + sol.d)
        y = (scalar_alpha(delta, tt, sol.t_f) * qe0) @ ef.V.T - sol.d
        u = (scalar_alpha_dot(delta, tt, sol.t_f) * qe0) @ ef.V.T
    y[np.atleast_1d(t) == 0.0] = sol.y0
    return (y[0], u[0]) if scalar else (y, u)
