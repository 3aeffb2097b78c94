"""Pure-Python/NumPy implementation of the first-sheet loop function.

``loop_g`` returns ``16 pi^2 G(s) - const`` evaluated as
``- x+ log((x+ - 1)/x+) - x- log((x- - 1)/x-)``; callers add the
subtraction constant ``a + log(m1^2/Lambda^2)`` and the prefactor.
Real ``s`` is read as ``s + i0`` (equivalently ``m2^2 - i0``).  For
``Im s < 0`` Schwarz reflection is used.
"""
import cmath
import math

import numpy as np

BACKEND = "python"

_IPI = 1j * math.pi


def _log_ratio_real(x, sign):
    """log((x - 1)/x) for real x carrying an infinitesimal imaginary part of ``sign``."""
    v = (x - 1.0) / x
    if v > 0.0:
        return complex(math.log(v), 0.0)
    return complex(math.log(-v), math.pi * sign)


def _roots(s, m1, m2):
    b = s + m2 * m2 - m1 * m1
    lam = (s - (m1 + m2) ** 2) * (s - (m1 - m2) ** 2)
    return b, lam


def _xpm(b, r, s, m2):
    """Roots ``(b +- r)/(2s)``; the smaller one from ``x+ x- = m2^2/s`` to avoid cancellation."""
    if isinstance(r, complex) and r.real == 0.0 and s.imag == 0.0:
        # real s between pseudothreshold and threshold: exact conjugate pair
        xp = (b + r) / (2.0 * s)
        return xp, xp.conjugate()
    if abs(b + r) >= abs(b - r):
        return (b + r) / (2.0 * s), 2.0 * m2 * m2 / (b + r)
    return 2.0 * m2 * m2 / (b - r), (b - r) / (2.0 * s)


_BIG = 4.0
_NSERIES = 30
_F_COEF = [1.0 / (j + 1) for j in range(_NSERIES)]
_H_COEF = [1.0 / ((j + 3) * (j + 2)) for j in range(_NSERIES)]


def _horner(coef, y):
    acc = 0.0
    for c in reversed(coef):
        acc = acc * y + c
    return acc


def _terms(x, sign=None):
    """``f = -x L`` and ``h = x (x - 1) L + x - 1/2`` with ``L = log((x - 1)/x)``.

    ``G`` is a sum of ``f(x+-)`` and ``dG/ds = (h(x+) - h(x-))/r``.  For
    ``|x| > 4`` both come from their series in ``y = 1/x``,
    ``f = sum y^j/(j+1)`` and ``h = y sum y^j/((j+2)(j+3))``, which avoids
    the cancellation of the direct forms.  ``sign`` selects the ``i0`` side
    for real ``x``.
    """
    if abs(x) > _BIG:
        y = 1.0 / x
        return complex(_horner(_F_COEF, y)), complex(y * _horner(_H_COEF, y))
    L = _log_ratio_real(x, sign) if sign is not None else cmath.log((x - 1.0) / x)
    return -x * L, x * (x - 1.0) * L + x - 0.5


def _setup(s, m1, m2):
    """``(x+, x-, r, real_sign)``; ``real_sign`` is True when both roots are real."""
    b, lam = _roots(s, m1, m2)
    if s.imag == 0.0:
        if lam.real >= 0.0:
            r = math.sqrt(lam.real)
            xp, xm = _xpm(b.real, r, s.real, m2)
            return xp, xm, r, True
        r = 1j * math.sqrt(-lam.real)
    else:
        r = cmath.sqrt(lam)
    xp, xm = _xpm(b, r, s, m2)
    return xp, xm, r, False


def loop_g(s, m1, m2):
    s = complex(s)
    if s.imag < 0.0:
        return loop_g(s.conjugate(), m1, m2).conjugate()
    if s == 0:
        raise ZeroDivisionError("loop function formula is singular at s = 0")
    xp, xm, _, real = _setup(s, m1, m2)
    fp = _terms(xp, 1.0 if real else None)[0]
    fm = _terms(xm, -1.0 if real else None)[0]
    return fp + fm


def loop_dg(s, m1, m2):
    """d/ds of ``loop_g``; raises at the branch points where it diverges."""
    s = complex(s)
    if s.imag < 0.0:
        return loop_dg(s.conjugate(), m1, m2).conjugate()
    if s == 0:
        raise ZeroDivisionError("loop function formula is singular at s = 0")
    xp, xm, r, real = _setup(s, m1, m2)
    if r == 0:
        raise ZeroDivisionError("dG/ds diverges at a branch point")
    hp = _terms(xp, 1.0 if real else None)[1]
    hm = _terms(xm, -1.0 if real else None)[1]
    return (hp - hm) / r


def loop_g_array(s, m1, m2):
    s = np.asarray(s, dtype=complex)
    out = np.empty(s.shape, dtype=complex)
    flat = out.reshape(-1)
    for i, v in enumerate(s.reshape(-1)):
        try:
            flat[i] = loop_g(v, m1, m2)
        except ZeroDivisionError:
            flat[i] = complex("nan+nanj")
    return out


def loop_dg_array(s, m1, m2):
    s = np.asarray(s, dtype=complex)
    out = np.empty(s.shape, dtype=complex)
    flat = out.reshape(-1)
    for i, v in enumerate(s.reshape(-1)):
        try:
            flat[i] = loop_dg(v, m1, m2)
        except ZeroDivisionError:
            flat[i] = complex("nan+nanj")
    return out
