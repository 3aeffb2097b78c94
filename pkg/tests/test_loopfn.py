"""Loop function: dispersive oracle, unitarity, scale invariance and continuity."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hadronpoles import loopfn
from hadronpoles.core import Channel, SheetedPoint, phase_space
from hadronpoles.errors import AmbiguousBranchError, SingularKinematicsError

CH_EQ = Channel(139.57, 139.57)
CH_UNEQ = Channel(139.57, 493.68)
SCHEME = loopfn.SubtractionScheme((-1.3,), 900.0)


def dispersive(channel, s, s0):
    """G(s) - G(s0) from a once-subtracted dispersion relation with Im G = -rho."""
    th = channel.threshold_s

    def integrand(x, part):
        rho = phase_space(channel, SheetedPoint(x)).real
        v = -rho / ((x - s) * (x - s0))
        return v.real if part == 0 else v.imag

    # tangent map for the infinite range
    def mapped(t, part):
        x = th + math.tan(t) ** 2 * 1e6
        return integrand(x, part) * 2 * math.tan(t) / math.cos(t) ** 2 * 1e6

    re = quad(mapped, 0, math.pi / 2, args=(0,), limit=400, epsabs=0, epsrel=1e-12)[0]
    im = quad(mapped, 0, math.pi / 2, args=(1,), limit=400, epsabs=0, epsrel=1e-12)[0]
    return (s - s0) / math.pi * complex(re, im)


@pytest.mark.parametrize("channel", [CH_EQ, CH_UNEQ])
@pytest.mark.parametrize("s", [400.0 ** 2 + 5e4j, 900.0 ** 2 + 2e5j, -2e5 + 1e4j, 50.0 ** 2 + 1e3j])
def test_matches_dispersion_relation(channel, s):
    s0 = -1e5
    lhs = loopfn.G(channel, SCHEME, SheetedPoint(s)) - loopfn.G(channel, SCHEME, SheetedPoint(s0))
    rhs = dispersive(channel, s, s0)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1e-4)


def test_below_threshold_real():
    for s in [1e3, 2e4, CH_UNEQ.threshold_s * 0.9]:
        assert loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s)).imag == 0.0


def test_unitarity_sign():
    s = 1000.0 ** 2
    g = loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s))
    assert g.imag == pytest.approx(loopfn.IM_G_SIGN * phase_space(CH_UNEQ, SheetedPoint(s)).real, rel=1e-12)


def test_schwarz_reflection():
    s = 800.0 ** 2 + 3e4j
    a = loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s))
    b = loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s.conjugate()))
    assert a == pytest.approx(b.conjugate(), rel=1e-14)


def test_sheet_two_is_continuation_from_above():
    s = 800.0 ** 2
    for eps in (1e-2, 1e-3):
        above = loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s + 1j * eps))
        below = loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(s - 1j * eps, ("II",)))
        assert abs(above - below) < 1e-8


def test_derivative_errors_at_branch_points():
    with pytest.raises(AmbiguousBranchError):
        loopfn.dG_ds(CH_UNEQ, SCHEME, SheetedPoint(CH_UNEQ.threshold_s))
    with pytest.raises(SingularKinematicsError):
        loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(0.0))


def test_array_matches_scalar():
    s = np.array([200.0 ** 2, 700.0 ** 2 + 1e4j, 900.0 ** 2 - 2e4j, 0.0])
    arr = loopfn.G_array(CH_UNEQ, SCHEME, s, "II")
    for v, a in zip(s[:3], arr[:3]):
        assert a == pytest.approx(loopfn.G(CH_UNEQ, SCHEME, SheetedPoint(v, ("II",))), rel=1e-13)
    assert np.isnan(arr[3])


@settings(max_examples=60, deadline=None)
@given(st.floats(-3e6, 3e6), st.floats(-2e6, 2e6), st.sampled_from(["I", "II"]))
def test_lambda_invariance(re, im, sheet):
    s = complex(re, im)
    if abs(s) < 1.0:
        return
    p = SheetedPoint(s, (sheet,))
    other = SCHEME.rescaled(2500.0)
    assert abs(loopfn.G(CH_UNEQ, SCHEME, p) - loopfn.G(CH_UNEQ, other, p)) <= 1e-12 * max(1.0, abs(loopfn.G(CH_UNEQ, SCHEME, p)))


@settings(max_examples=60, deadline=None)
@given(st.floats(-3e6, 3e6), st.floats(1e3, 2e6), st.sampled_from(["I", "II"]), st.booleans())
def test_derivative_against_difference(re, im, sheet, lower):
    s = complex(re, -im if lower else im)
    p = SheetedPoint(s, (sheet,))
    h = 1e-4 * abs(s.imag)
    fd = (loopfn.G(CH_UNEQ, SCHEME, p.moved(s + h)) - loopfn.G(CH_UNEQ, SCHEME, p.moved(s - h))) / (2 * h)
    an = loopfn.dG_ds(CH_UNEQ, SCHEME, p)
    assert abs(an - fd) <= 1e-6 * abs(an) + 1e-14


mpmath = pytest.importorskip("mpmath")


def _mp_loop(s, m1, m2):
    s, m1, m2 = mpmath.mpc(s), mpmath.mpf(m1), mpmath.mpf(m2)
    b = s + m2 ** 2 - m1 ** 2
    r = mpmath.sqrt((s - (m1 + m2) ** 2) * (s - (m1 - m2) ** 2))
    xp, xm = (b + r) / (2 * s), (b - r) / (2 * s)
    return -xp * mpmath.log((xp - 1) / xp) - xm * mpmath.log((xm - 1) / xm)


@settings(max_examples=60, deadline=None)
@given(st.floats(-4e6, 4e6), st.floats(1e-3, 4e6), st.floats(50.0, 1000.0), st.floats(50.0, 1000.0))
def test_kernel_against_high_precision(re, im, m1, m2):
    from hadronpoles import kernels
    s = complex(re, im)
    with mpmath.workdps(40):
        g = complex(_mp_loop(s, m1, m2))
        dg = complex(mpmath.diff(lambda z: _mp_loop(z, m1, m2), mpmath.mpc(s)))
    assert abs(kernels.loop_g(s, m1, m2) - g) <= 1e-13 * max(1.0, abs(g))
    assert abs(kernels.loop_dg(s, m1, m2) - dg) <= 1e-10 * abs(dg)
