# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in :mod:`platoon_nash._kernels`."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _affine(const double[:, ::1] M, const double[::1] c,
                         const double[::1] z, double[::1] out, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = c[i]
        for j in range(m):
            acc += M[i, j] * z[j]
        out[i] = acc


def rk4_affine(M, c, z0, double h, Py_ssize_t steps):
    cdef double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t m = Mv.shape[0]
    out_arr = np.empty((steps + 1, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] z = np.array(z0, dtype=np.float64)
    cdef double[::1] tmp = np.empty(m)
    cdef double[::1] k1 = np.empty(m)
    cdef double[::1] k2 = np.empty(m)
    cdef double[::1] k3 = np.empty(m)
    cdef double[::1] k4 = np.empty(m)
    cdef Py_ssize_t k, i
    cdef double half = 0.5 * h, sixth = h / 6.0
    with nogil:
        for i in range(m):
            out[0, i] = z[i]
        for k in range(steps):
            _affine(Mv, cv, z, k1, m)
            for i in range(m):
                tmp[i] = z[i] + half * k1[i]
            _affine(Mv, cv, tmp, k2, m)
            for i in range(m):
                tmp[i] = z[i] + half * k2[i]
            _affine(Mv, cv, tmp, k3, m)
            for i in range(m):
                tmp[i] = z[i] + h * k3[i]
            _affine(Mv, cv, tmp, k4, m)
            for i in range(m):
                z[i] = z[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                out[k + 1, i] = z[i]
    return out_arr


def last_above(E, double threshold):
    cdef double[:, :] Ev = np.asarray(E, dtype=np.float64)
    cdef Py_ssize_t rows = Ev.shape[0], cols = Ev.shape[1]
    out_arr = np.full(cols, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t r, j
    cdef double v
    with nogil:
        for j in range(cols):
            r = rows - 1
            while r >= 0:
                v = Ev[r, j]
                if v < 0:
                    v = -v
                if v >= threshold:
                    out[j] = r
                    break
                r -= 1
    return out_arr
