# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pixel evaluation of a decoded CGP phenotype.

Mirrors ``chainfocus.cgp._kernel_py`` operation for operation; the only
expected differences come from libm versus numpy trig routines.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, tan, sqrt, fabs, fmod, rint, isfinite, M_PI

cnp.import_array()


cdef inline double _clamp(double v) noexcept nogil:
    if not isfinite(v):
        return 0.0
    if v < 0.0:
        return 0.0
    if v > 255.0:
        return 255.0
    return v


cdef inline double _apply(long k, double a, double b, double pm) noexcept nogil:
    cdef double v
    if k == 1:
        v = <double>((<long long>rint(a)) | (<long long>rint(b)))
    elif k == 2:
        v = <double>((<long long>rint(pm)) & (<long long>rint(a)))
    elif k == 3:
        v = fmod(a + b, 255.0)
    elif k == 4:
        v = a - b if a > b else b - a
    elif k == 5:
        v = 255.0 - a
    elif k == 6:
        v = fabs(cos(a) * 255.0)
    elif k == 7:
        v = fabs(tan((fmod(a, 45.0) * M_PI) / 180.0) * 255.0)
    elif k == 8:
        v = fmod(fabs(tan(a) * 255.0), 255.0)
    elif k == 9:
        v = sqrt((a - pm) * (a - pm) + (b - pm) * (b - pm))
    elif k == 10:
        v = fmod(a, pm + 1.0) + (255.0 - pm)
    elif k == 11:
        v = (a + b) / 2.0
    elif k == 12:
        if a > b:
            v = 255.0 * ((b + 1.0) / (a + 1.0))
        else:
            v = 255.0 * ((a + 1.0) / (b + 1.0))
    elif k == 13:
        v = fmod(sqrt(fabs((a - pm * pm) + (b - pm * pm))), 255.0)
    else:
        v = 0.0
    return _clamp(v)


def apply_function(long k, double a, double b, double pm):
    if k < 1 or k > 13:
        raise ValueError(f"function gene {k} outside 1..13")
    return _apply(k, a, b, pm)


def render_hsv(const cnp.int64_t[:] func, const cnp.int64_t[:] src_a, const cnp.int64_t[:] src_b,
               const double[:] pm, const cnp.int64_t[:] out_src, Py_ssize_t width, Py_ssize_t height):
    cdef Py_ssize_t n = func.shape[0]
    out = np.empty((height, width, 3), dtype=np.float64)
    buf = np.empty(n + 2, dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double[::1] v = buf
    cdef Py_ssize_t r, c, j
    with nogil:
        for r in range(height):
            for c in range(width):
                v[0] = (<double>c / <double>width) * 255.0
                v[1] = (<double>r / <double>height) * 255.0
                for j in range(n):
                    v[j + 2] = _apply(func[j], v[src_a[j]], v[src_b[j]], pm[j])
                o[r, c, 0] = v[out_src[0]]
                o[r, c, 1] = v[out_src[1]]
                o[r, c, 2] = v[out_src[2]]
    return out
