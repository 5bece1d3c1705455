"""Dense-matrix helpers for lower-triangular information matrices.

The information matrices of rearward topologies are lower-triangular, so
their eigenvalues are the diagonal entries and eigenvectors follow from
back-substitution. Matrix hyperbolic functions are then evaluated in the
modal basis, with scalar factors computed in an exp-normalised form that
cannot overflow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAP_TOL = 1e-8
OVERFLOW_ARG = 700.0


class NearDegenerateSpectrum(ArithmeticError):
    """Two eigenvalues coincide to within the relative gap tolerance."""


class SingularTriangular(ArithmeticError):
    """A triangular matrix has a zero diagonal entry."""


@dataclass(frozen=True)
class EigenFactorization:
    """``A = V diag(delta) Vinv`` with unit-lower-triangular ``V``."""

    delta: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray

    @property
    def n(self) -> int:
        return self.delta.size

    @property
    def sqrt_delta(self) -> np.ndarray:
        return np.sqrt(self.delta)

    def reassemble(self) -> np.ndarray:
        return (self.V * self.delta) @ self.Vinv

    def apply(self, diag: np.ndarray) -> np.ndarray:
        """``V diag(diag) Vinv`` for a vector of modal factors."""
        return (self.V * diag) @ self.Vinv


def eig_lower_triangular(A, gap_tol: float = GAP_TOL) -> EigenFactorization:
    """Eigen-decompose a lower-triangular matrix with distinct diagonal.

    Column ``k`` of ``V`` solves ``(A - delta_k I) v = 0`` with ``v_k = 1``
    and ``v_i = 0`` for ``i < k``; the remaining entries come from forward
    substitution down the rows.

    Raises
    ------
    NearDegenerateSpectrum
        If two diagonal entries agree to relative gap ``gap_tol``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    if np.any(np.triu(A, 1) != 0):
        raise ValueError("matrix is not lower-triangular")
    delta = np.diag(A).copy()
    if np.any(delta <= 0):
        raise ValueError("diagonal must be strictly positive")
    for a in range(n):
        for b in range(a + 1, n):
            scale = max(abs(delta[a]), abs(delta[b]))
            if abs(delta[a] - delta[b]) <= gap_tol * scale:
                raise NearDegenerateSpectrum(
                    f"eigenvalues {a + 1} and {b + 1} coincide ({delta[a]!r} vs {delta[b]!r})"
                )
    V = np.zeros((n, n))
    for k in range(n):
        V[k, k] = 1.0
        for i in range(k + 1, n):
            V[i, k] = A[i, k:i] @ V[k:i, k] / (delta[k] - delta[i])
    Vinv = tri_inverse(V)
    for a in (delta, V, Vinv):
        a.flags.writeable = False
    return EigenFactorization(delta, V, Vinv)


def tri_inverse(L) -> np.ndarray:
    """Inverse of a lower-triangular matrix by column-wise forward substitution.

    Entries above the diagonal of the result are exact zeros.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    diag = np.diag(L)
    if np.any(diag == 0):
        raise SingularTriangular("zero diagonal entry")
    X = np.zeros((n, n))
    for k in range(n):
        X[k, k] = 1.0 / diag[k]
        for i in range(k + 1, n):
            X[i, k] = -(L[i, k:i] @ X[k:i, k]) / diag[i]
    return X


def forward_solve(L, b) -> np.ndarray:
    """Solve ``L x = b`` for lower-triangular ``L``."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    for i in range(b.shape[0]):
        x[i] = (b[i] - L[i, :i] @ x[:i]) / L[i, i]
    return x


def cosh_sinhc(s, t):
    """``(cosh(s t), sinh(s t) / s)`` elementwise for ``s > 0``, ``t >= 0``.

    Both are finite for ``s t`` up to :data:`OVERFLOW_ARG`.
    """
    s = np.asarray(s, dtype=float)
    x = s * t
    if np.any(x > OVERFLOW_ARG):
        raise OverflowError(f"hyperbolic argument {np.max(x):.1f} exceeds {OVERFLOW_ARG}")
    # 0.5 e^x (1 +/- e^{-2x}); sinh via expm1 keeps precision near zero.
    half = 0.5 * np.exp(x)
    em = np.exp(-2.0 * x)
    c = half * (1.0 + em)
    sh = np.where(x < 1.0, 0.5 * (np.expm1(x) - np.expm1(-x)), half * (1.0 - em))
    return c, sh / s


def hyp_pair(ef: EigenFactorization, t: float):
    """``(cosh(A^{1/2} t), sinh(A^{1/2} t) A^{-1/2})`` through the modal basis."""
    if t < 0:
        raise ValueError("t must be non-negative")
    c, s = cosh_sinhc(ef.sqrt_delta, t)
    return ef.apply(c), ef.apply(s)


def scalar_alpha(omega, t, t_f):
    """``cosh(sqrt(omega)(t_f - t)) / cosh(sqrt(omega) t_f)`` without overflow."""
    s = np.sqrt(omega)
    t = np.asarray(t, dtype=float)
    return (np.exp(-s * t) + np.exp(-s * (2.0 * t_f - t))) / (1.0 + np.exp(-2.0 * s * t_f))


def scalar_alpha_dot(omega, t, t_f):
    """Time derivative of :func:`scalar_alpha`."""
    s = np.sqrt(omega)
    t = np.asarray(t, dtype=float)
    return -s * (np.exp(-s * t) - np.exp(-s * (2.0 * t_f - t))) / (1.0 + np.exp(-2.0 * s * t_f))
