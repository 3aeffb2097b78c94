import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadronpoles import amplitudes as amp, compositeness as comp, poles
from hadronpoles.errors import ConfigurationError, DegenerateInputError

MU = 469.459
RES_START = 930.0 ** 2 - 1.4e5j


@pytest.fixture
def resonance_report(bare_pole_model):
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    return comp.compositeness_sum_rule(bare_pole_model, p, poles.extract_couplings(bare_pole_model, p))


def test_sum_rule_for_resonance(resonance_report):
    assert resonance_report.sum_residual < 1e-8
    assert resonance_report.applicable
    assert np.all(resonance_report.X_abs_i > 0)


def test_phase_normalization_makes_X_real(resonance_report):
    n = comp.phase_normalize(resonance_report)
    x = n.X_normalized_i
    assert np.all(np.abs(x.imag) < 1e-14 * np.abs(x)) and np.all(x.real >= 0)
    np.testing.assert_allclose(np.abs(x), resonance_report.X_abs_i, rtol=1e-14)


def test_phase_transform_report_matches_transformed_model(bare_pole_model, resonance_report):
    phases = np.array([0.4, -1.1])
    p = poles.find_pole(bare_pole_model, ("II", "I"), RES_START)
    pm = comp.PhaseTransformedModel(bare_pole_model, phases)
    direct = comp.compositeness_sum_rule(pm, p, poles.extract_couplings(pm, p))
    mapped = comp.phase_transform_report(resonance_report, phases)
    np.testing.assert_allclose(direct.X_i, mapped.X_i, rtol=1e-10)


def test_applicability_flags_wrong_region(bare_pole_model):
    from hadronpoles.core import SheetedPoint
    ok, _ = comp.applicability(bare_pole_model, SheetedPoint(1200.0 ** 2 - 1e4j, ("II", "I")))
    assert not ok
    ok, note = comp.applicability(bare_pole_model, SheetedPoint(900.0 ** 2 - 1e4j, ("I", "II")))
    assert not ok and "adjacent" in note


def test_report_serializes(resonance_report):
    import json
    d = json.loads(json.dumps(resonance_report.to_dict()))
    assert d["sheet"] == ["II", "I"] and len(d["X_i"]) == 2


# ------------------------------------------------------------------ ERE


def test_ere_reference_values():
    p = comp.ere_from_pole(100 - 20j)
    assert p.a == pytest.approx(-3.846153846e-3, rel=1e-9)
    assert p.r == pytest.approx(-0.05, rel=1e-14)
    assert p.r_over_a == pytest.approx(13.0, rel=1e-13)
    e = comp.ere_compositeness(100 - 20j)
    assert e.X == pytest.approx(0.2j) and e.X_abs == pytest.approx(0.2) and e.X_abs_alt == pytest.approx(0.04)


def test_ere_domain_guards():
    with pytest.raises(DegenerateInputError):
        comp.ere_from_pole(-20j)
    with pytest.raises(DegenerateInputError):
        comp.ere_compositeness(-20j)
    with pytest.raises(ConfigurationError):
        comp.ere_compositeness(100 + 20j)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 500.0), st.floats(0.1, 500.0))
def test_ere_round_trip(kr, ki):
    p = comp.ere_from_pole(complex(kr, -ki))
    assert abs(comp.ere_pole(p.a, p.r) - complex(kr, -ki)) <= 1e-10 * math.hypot(kr, ki)


def test_ere_compositeness_matches_numerical_sum_rule():
    kR = 100 - 20j
    p = comp.ere_from_pole(kR)
    m = amp.EREModel(p.a, p.r, MU)
    pole = poles.find_pole(m, ("II",), kR ** 2 / (2 * MU) * 1.01)
    assert abs(pole.value - kR ** 2 / (2 * MU)) < 1e-10
    rep = comp.compositeness_sum_rule(m, pole, poles.extract_couplings(m, pole))
    assert rep.X == pytest.approx(comp.ere_compositeness(kR).X, abs=1e-12)
    assert rep.sum_residual < 1e-12
    num = comp.ere_parameters_numeric(m)
    assert num.a == pytest.approx(p.a, rel=1e-10) and num.r == pytest.approx(p.r, rel=1e-9)


# ------------------------------------------------------------------ CDD


def test_cdd_limits():
    d = comp.cdd_shifts(amp.CDDModel(0.0, 1.0, 5.0, MU))
    assert (d.delta_a, d.delta_r, d.cdd_proximity_flag) == (0.0, 0.0, False)
    d = comp.cdd_shifts(amp.CDDModel(-3.0, 0.0, 5.0, MU))
    assert d.delta_r == math.inf and d.is_limit


def test_cdd_flag_threshold():
    far = comp.cdd_shifts(amp.CDDModel(1.0, 30.0, 5.0, MU))
    near = comp.cdd_shifts(amp.CDDModel(50.0, 0.3, 20.0, MU))
    assert not far.cdd_proximity_flag and near.cdd_proximity_flag
    assert comp.large_negative_r_flag(-1.0, 20.0) and not comp.large_negative_r_flag(1.0, 20.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 200.0), st.floats(0.2, 20.0))
def test_cdd_shifts_match_expansion(lam, MZ):
    m = amp.CDDModel(lam, MZ, 0.0, MU)
    num = comp.ere_parameters_numeric(m, h=1e-3 * MZ)
    d = comp.cdd_shifts(m)
    assert num.a == pytest.approx(d.delta_a, rel=1e-8)
    assert num.r == pytest.approx(d.delta_r, rel=1e-6)


def test_shallow_bound_formula():
    assert comp.shallow_bound_X(2.0, 3.0, 4.0) == pytest.approx(4 * 9 / (8 * math.pi))
    with pytest.raises(ConfigurationError):
        comp.shallow_bound_X(1.0, 1.0, 0.0)
