import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from hadronpoles import saturation as sat
from hadronpoles.errors import ConfigurationError

M_TH, MU, KR = 3871.7, 966.0, 20.0


def system(**kw):
    base = dict(M_R=M_TH + 0.3, Gamma=1.2, k_R_abs=KR, mu=MU, M_th=M_TH, k_threshold=3871.0, X=0.9)
    base.update(kw)
    return sat.SaturationSystem(**base)


def test_kernel_against_direct_quadrature():
    s = system()
    k = s.k_func

    def f(W):
        return k(W) / W ** 2 * s.Gamma / ((s.M_R - W) ** 2 + s.Gamma ** 2 / 4)

    direct = 0.0
    for lo, hi in ((3871.0, s.M_R), (s.M_R, s.M_R + 50.0), (s.M_R + 50.0, 1e5)):
        direct += quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=500)[0]
    direct += quad(f, 1e5, math.inf, epsabs=1e-22, epsrel=1e-6, limit=500)[0]
    expected = KR * s.M_R ** 2 / (math.pi * MU) * direct
    assert sat.gamma2_kernel(s) == pytest.approx(expected, rel=1e-8)


def test_cutoff_converges_to_open_integral():
    a = sat.gamma2_kernel(system())
    b = sat.gamma2_kernel(system(cutoff=M_TH + 1e7))
    assert b < a and b == pytest.approx(a, rel=1e-2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_round_trip(X1, X2):
    def resid(G):
        s = system(Gamma=G)
        return X1 * sat.gamma1(1.0, MU, s.k_func(s.M_R), KR) + X2 * sat.gamma2_kernel(s) - G
    G = brentq(resid, 1e-6, 50.0, xtol=1e-15, rtol=1e-15)
    r = sat.solve_saturation(system(Gamma=G, X=X1 + X2))
    assert r.feasible
    assert abs(r.X1 - X1) < 1e-8 and abs(r.X2 - X2) < 1e-8
    assert r.Gamma1 + r.Gamma2 == pytest.approx(G, rel=1e-12)


def test_branching_closure():
    s = system(X=None, branching_ratio=0.3)
    r = sat.solve_saturation(s)
    assert r.Gamma1 == pytest.approx(0.3 * s.Gamma) and r.Gamma2 == pytest.approx(0.7 * s.Gamma)


def test_infeasible_reports_frontier():
    r = sat.solve_saturation(system(Gamma=500.0))
    assert not r.feasible and r.frontier[0] < r.frontier[1] and r.notes


def test_closure_must_be_unique():
    with pytest.raises(ConfigurationError):
        sat.solve_saturation(system(branching_ratio=0.2))
    with pytest.raises(ConfigurationError):
        system(Gamma=-1.0)


def test_relativistic_momentum():
    k = sat.relativistic_momentum(139.57, 139.57)
    assert k(2 * 139.57) == 0.0
    assert k(775.0) == pytest.approx(math.sqrt(775.0 ** 2 / 4 - 139.57 ** 2), rel=1e-14)
