"""Pure-Python/numpy versions of the hot loops.

Used when the compiled extension is not importable. Signatures and results
match ``_ckernels`` to rounding.
"""
import numpy as np


def rk4_affine(M, c, z0, h, steps):
    """Classical RK4 for ``z' = M z + c`` on a fixed step.

    Returns an array of shape ``(steps + 1, m)`` holding every grid state.
    """
    M = np.ascontiguousarray(M, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    out = np.empty((steps + 1, M.shape[0]))
    z = np.array(z0, dtype=float)
    out[0] = z
    half = 0.5 * h
    for k in range(steps):
        k1 = M @ z + c
        k2 = M @ (z + half * k1) + c
        k3 = M @ (z + half * k2) + c
        k4 = M @ (z + h * k3) + c
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = z
    return out


def last_above(E, threshold):
    """Index of the last row where ``|E[:, j]| >= threshold``, per column.

    ``-1`` means the column never reaches the threshold.
    """
    E = np.abs(np.asarray(E, dtype=float))
    rows, cols = E.shape
    out = np.full(cols, -1, dtype=np.int64)
    for j in range(cols):
        hit = np.nonzero(E[:, j] >= threshold)[0]
        if hit.size:
            out[j] = hit[-1]
    return out
