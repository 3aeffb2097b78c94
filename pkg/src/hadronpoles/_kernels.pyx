# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``; same conventions, same signatures."""
import numpy as np
from libc.math cimport sqrt, log, M_PI

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex clog(double complex)
    double complex conj(double complex)
    double creal(double complex)
    double cimag(double complex)

BACKEND = "cython"

cdef double complex NAN_C = float("nan") + 1j * float("nan")


cdef inline double complex _log_ratio_real(double x, double sign) nogil:
    cdef double v = (x - 1.0) / x
    if v > 0.0:
        return log(v)
    return log(-v) + 1j * M_PI * sign


cdef inline void _xpm(double complex b, double complex r, double complex s, double m2,
                      double complex* xp, double complex* xm) nogil:
    # smaller root from x+ x- = m2^2/s to avoid cancellation
    cdef double complex u = b + r, v = b - r
    if creal(r) == 0.0 and cimag(s) == 0.0:
        # real s between pseudothreshold and threshold: exact conjugate pair
        xp[0] = u / (2.0 * s)
        xm[0] = conj(xp[0])
        return
    if creal(u) * creal(u) + cimag(u) * cimag(u) >= creal(v) * creal(v) + cimag(v) * cimag(v):
        xp[0] = u / (2.0 * s)
        xm[0] = 2.0 * m2 * m2 / u
    else:
        xp[0] = 2.0 * m2 * m2 / v
        xm[0] = v / (2.0 * s)


cdef double BIG = 4.0
cdef enum:
    NSERIES = 30
cdef double F_COEF[NSERIES]
cdef double H_COEF[NSERIES]
for _j in range(NSERIES):
    F_COEF[_j] = 1.0 / (_j + 1)
    H_COEF[_j] = 1.0 / ((_j + 3) * (_j + 2))


cdef inline void _terms(double complex x, int sign, double complex* f, double complex* h) nogil:
    # f = -x L, h = x (x - 1) L + x - 1/2 with L = log((x - 1)/x); series in 1/x for |x| > 4
    cdef double complex y, L, af, ah
    cdef int j
    if creal(x) * creal(x) + cimag(x) * cimag(x) > BIG * BIG:
        y = 1.0 / x
        af = 0.0
        ah = 0.0
        for j in range(NSERIES - 1, -1, -1):
            af = af * y + F_COEF[j]
            ah = ah * y + H_COEF[j]
        f[0] = af
        h[0] = y * ah
        return
    if sign != 0:
        L = _log_ratio_real(creal(x), <double>sign)
    else:
        L = clog((x - 1.0) / x)
    f[0] = -x * L
    h[0] = x * (x - 1.0) * L + x - 0.5


cdef inline int _setup(double complex s, double m1, double m2, double complex* xp, double complex* xm,
                       double complex* r) nogil:
    # returns 1 when both roots are real (i0 prescription needed)
    cdef double complex b = s + m2 * m2 - m1 * m1
    cdef double complex lam = (s - (m1 + m2) * (m1 + m2)) * (s - (m1 - m2) * (m1 - m2))
    cdef double rr
    if cimag(s) == 0.0:
        if creal(lam) >= 0.0:
            rr = sqrt(creal(lam))
            r[0] = rr
            _xpm(creal(b), rr, creal(s), m2, xp, xm)
            return 1
        r[0] = 1j * sqrt(-creal(lam))
    else:
        r[0] = csqrt(lam)
    _xpm(b, r[0], s, m2, xp, xm)
    return 0


cdef int _g(double complex s, double m1, double m2, double complex* out) nogil:
    cdef bint flip = cimag(s) < 0.0
    cdef double complex xp, xm, r, fp, fm, hp, hm
    cdef int real
    if flip:
        s = conj(s)
    if creal(s) == 0.0 and cimag(s) == 0.0:
        return -1
    real = _setup(s, m1, m2, &xp, &xm, &r)
    _terms(xp, real, &fp, &hp)
    _terms(xm, -real, &fm, &hm)
    out[0] = fp + fm
    if flip:
        out[0] = conj(out[0])
    return 0


cdef int _dg(double complex s, double m1, double m2, double complex* out) nogil:
    cdef bint flip = cimag(s) < 0.0
    cdef double complex xp, xm, r, fp, fm, hp, hm
    cdef int real
    if flip:
        s = conj(s)
    if creal(s) == 0.0 and cimag(s) == 0.0:
        return -1
    real = _setup(s, m1, m2, &xp, &xm, &r)
    if creal(r) == 0.0 and cimag(r) == 0.0:
        return -1
    _terms(xp, real, &fp, &hp)
    _terms(xm, -real, &fm, &hm)
    out[0] = (hp - hm) / r
    if flip:
        out[0] = conj(out[0])
    return 0


def loop_g(s, double m1, double m2):
    cdef double complex out
    if _g(<double complex>complex(s), m1, m2, &out) != 0:
        raise ZeroDivisionError("loop function formula is singular at s = 0")
    return complex(out)


def loop_dg(s, double m1, double m2):
    cdef double complex out
    if _dg(<double complex>complex(s), m1, m2, &out) != 0:
        raise ZeroDivisionError("dG/ds diverges at a branch point")
    return complex(out)


def loop_g_array(s, double m1, double m2):
    arr = np.ascontiguousarray(s, dtype=np.complex128)
    out = np.empty(arr.size, dtype=np.complex128)
    cdef double complex[::1] flat = arr.reshape(-1)
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef double complex v
    with nogil:
        for i in range(n):
            if _g(flat[i], m1, m2, &v) != 0:
                v = NAN_C
            res[i] = v
    return out.reshape(arr.shape)


def loop_dg_array(s, double m1, double m2):
    arr = np.ascontiguousarray(s, dtype=np.complex128)
    out = np.empty(arr.size, dtype=np.complex128)
    cdef double complex[::1] flat = arr.reshape(-1)
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef double complex v
    with nogil:
        for i in range(n):
            if _dg(flat[i], m1, m2, &v) != 0:
                v = NAN_C
            res[i] = v
    return out.reshape(arr.shape)
