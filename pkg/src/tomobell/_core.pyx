# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-chunk accumulation of the Bell-estimator integrands.

Fuses kernel evaluation, integrand assembly and compensated (Neumaier)
summation into one pass over the events, without temporaries. Numerically
equivalent to :mod:`tomobell._fallback`.
"""
import numpy as np

from libc.math cimport cos, sin, sqrt, fabs
from scipy.special.cython_special cimport dawsn


cdef struct Consts:
    double scale   # 1 / (2 sqrt(g))
    double c0      # 1 / (4 g)
    double c1      # 1 / (16 g^2)
    double cr      # 1 / (8 g^1.5)


cdef inline Consts _consts(double eta) noexcept nogil:
    cdef Consts c
    cdef double g = 0.125 - 0.5 * (1.0 - eta) / (4.0 * eta)
    c.scale = 1.0 / (2.0 * sqrt(g))
    c.c0 = 1.0 / (4.0 * g)
    c.c1 = 1.0 / (16.0 * g * g)
    c.cr = 1.0 / (8.0 * g * sqrt(g))
    return c


cdef inline void _profiles(double x, Consts* c, double* k0, double* k1, double* r) noexcept nogil:
    cdef double y = x * c.scale
    cdef double y2 = y * y
    cdef double f = dawsn(y)
    k0[0] = (1.0 - 2.0 * y * f) * c.c0
    k1[0] = k0[0] - (1.0 - y2 - f * (3.0 * y - 2.0 * y2 * y)) * c.c1
    r[0] = (y + (1.0 - 2.0 * y2) * f) * c.cr


cdef inline void _neumaier(double v, double* s, double* comp) noexcept nogil:
    cdef double t = s[0] + v
    if fabs(s[0]) >= fabs(v):
        comp[0] += (s[0] - t) + v
    else:
        comp[0] += (v - t) + s[0]
    s[0] = t


def accumulate_chunk(const double[:, ::1] x, const double[:, ::1] phase, double eta,
                     const double[::1] cos2a, const double[::1] sin2a,
                     const double[::1] cos2b, const double[::1] sin2b):
    """See :func:`tomobell._fallback.accumulate_chunk`."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t npairs = cos2a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double k0[4]
    cdef double k1[4]
    cdef double r[4]
    cdef double p11, diag_a, off_a, diag_b, off_b, num
    cdef Consts c

    if not (0.5 < eta <= 1.0):
        raise ValueError(f"kernel divergence: eta must lie in (0.5, 1], got {eta}")
    c = _consts(eta)
    if phase.shape[0] != n or x.shape[1] != 4 or phase.shape[1] != 4:
        raise ValueError("x and phase must be matching (n, 4) arrays")
    if sin2a.shape[0] != npairs or cos2b.shape[0] != npairs or sin2b.shape[0] != npairs:
        raise ValueError("angle arrays must have equal length")

    sums_arr = np.zeros(1 + npairs)
    comps_arr = np.zeros(1 + npairs)
    cdef double[::1] sums = sums_arr
    cdef double[::1] comps = comps_arr

    with nogil:
        for i in range(n):
            for j in range(4):
                _profiles(x[i, j], &c, &k0[j], &k1[j], &r[j])
            p11 = (k1[0] * k0[2] + k0[0] * k1[2]) * (k1[1] * k0[3] + k0[1] * k1[3])
            _neumaier(p11, &sums[0], &comps[0])
            diag_a = k1[0] * k0[2] - k0[0] * k1[2]
            off_a = 2.0 * r[0] * r[2] * cos(phase[i, 0] - phase[i, 2])
            diag_b = k0[1] * k1[3] - k1[1] * k0[3]
            off_b = 2.0 * r[1] * r[3] * cos(phase[i, 1] - phase[i, 3])
            for k in range(npairs):
                num = (cos2a[k] * diag_a + sin2a[k] * off_a) * (cos2b[k] * diag_b + sin2b[k] * off_b)
                _neumaier(num, &sums[1 + k], &comps[1 + k])
        for k in range(npairs + 1):
            sums[k] += comps[k]
    return sums_arr


def kernel_table(const double[:, ::1] x, const double[:, ::1] phase, double eta):
    """See :func:`tomobell._fallback.kernel_table` (2-d input only)."""
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double a, b, rr
    cdef Consts c
    if not (0.5 < eta <= 1.0):
        raise ValueError(f"kernel divergence: eta must lie in (0.5, 1], got {eta}")
    c = _consts(eta)
    out_arr = np.empty((n, m, 4))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i in range(n):
            for j in range(m):
                _profiles(x[i, j], &c, &a, &b, &rr)
                out[i, j, 0] = a
                out[i, j, 1] = b
                out[i, j, 2] = rr * cos(phase[i, j])
                out[i, j, 3] = -rr * sin(phase[i, j])
    return out_arr
