import cmath
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadronpoles import amplitudes as amp, poles
from hadronpoles.errors import ContourInvalidError, MultiPoleContaminationWarning, SearchFailedError

from tests_helpers import bound_model

RES_START = 930.0 ** 2 - 1.4e5j


def test_find_root_polynomial():
    r = poles.find_root(lambda z: (z - 2 - 1j) * (z + 5), 1.5 + 0.7j, scale=1.0)
    assert abs(r.z - (2 + 1j)) < 1e-10


def test_find_root_falls_back_to_muller_at_stationary_start():
    r = poles.find_root(lambda z: z * z - 4.0, 0j, scale=1.0)
    assert r.method == "muller"
    assert abs(abs(r.z) - 2.0) < 1e-10


def test_find_root_reports_failure():
    with pytest.raises(SearchFailedError):
        poles.find_root(lambda z: 1.0 + 0 * z, 1.0 + 1j, scale=1.0, max_iter=20)


def test_resonance_pole_and_conjugate(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    assert p.det_residual < 1e-8
    w = np.sqrt(p.value)
    assert 900 < w.real < 960 and -100 < w.imag < -50
    q = poles.find_pole(bare_pole_model, ("II", "I"), RES_START.conjugate())
    assert abs(q.value - p.value.conjugate()) < 1e-8 * abs(p.value)


def test_zero_count_matches(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    assert poles.count_zeros(bare_pole_model, ("II", "I"), p.value, 1e4) == 1


def test_residue_methods_agree_and_rank_one(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    sets = [poles.extract_couplings(bare_pole_model, p, m) for m in ("contour", "pole-factor", "finite-difference")]
    for cs in sets:
        assert cs.rank1_residual < 1e-8
        np.testing.assert_allclose(cs.g, sets[0].g, rtol=1e-6)
        np.testing.assert_allclose(np.outer(cs.g, cs.g), -cs.residue, rtol=1e-8, atol=1e-8 * np.abs(cs.residue).max())


def test_residue_matches_laurent_coefficient(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    R = poles.extract_couplings(bare_pole_model, p).residue
    h = 1e-3 * abs(p.value.imag)
    T = bare_pole_model.T_matrix(p.location.moved(p.value + h * 1j))
    np.testing.assert_allclose(T * (h * 1j), R, rtol=5e-3)


def test_contour_radius_guard(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    dist = bare_pole_model.distance_to_nonanalyticity(p.location)
    with pytest.raises(ContourInvalidError):
        poles.extract_couplings(bare_pole_model, p, radius=1.5 * dist)
    with pytest.raises(ValueError):
        poles.extract_couplings(bare_pole_model, p, method="simpson")


def test_multi_pole_contamination_warns(pipi_kk, scheme2):
    from hadronpoles import loopfn
    from hadronpoles.core import SheetedPoint
    # decoupled channels, each bound just below 250 and 252 MeV
    G1 = loopfn.G_channels(pipi_kk, scheme2, SheetedPoint(250.0 ** 2, ("I", "I")))[0].real
    G2 = loopfn.G_channels(pipi_kk, scheme2, SheetedPoint(252.0 ** 2, ("I", "I")))[1].real
    m = amp.CoupledChannelModel(pipi_kk, scheme2, amp.ConstantKernel(np.diag([-1 / G1, -1 / G2])))
    p = poles.find_pole(m, ("I", "I"), 249.0 ** 2)
    radius = 0.9 * m.distance_to_nonanalyticity(p.location)
    assert radius > 252.0 ** 2 - 250.0 ** 2
    with pytest.warns(MultiPoleContaminationWarning):
        cs = poles.extract_couplings(m, p, radius=radius)
    assert cs.rank1_residual > 1e-3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert poles.extract_couplings(m, p, radius=100.0).rank1_residual < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=1e3, allow_nan=False), min_size=1, max_size=4))
def test_factorization_recovers_rank_one(gs):
    g = np.array(gs)
    R = -np.outer(g, g)
    h, resid = poles.factorize_residue(R)
    assert resid < 1e-12
    np.testing.assert_allclose(np.outer(h, h), -R, rtol=1e-10, atol=1e-12 * np.abs(R).max())


def test_bound_state_couplings_real(pipi_kk, scheme2):
    m = bound_model(pipi_kk, scheme2)
    p = poles.find_pole(m, ("I", "I"), 249.0 ** 2)
    assert abs(np.sqrt(p.value) - 250.0) < 1e-8
    g = poles.extract_couplings(m, p).g
    assert np.max(np.abs(g.imag)) < 1e-8 * np.max(np.abs(g))
    assert np.all(poles.partial_widths(m, p, poles.extract_couplings(m, p)) == 0)


def test_search_rejects_threshold(constant_model):
    with pytest.raises(SearchFailedError):
        poles.find_pole(amp.EREModel(-0.1, 0.0, 500.0), ("I",), 0.0 + 0j, max_iter=5)
