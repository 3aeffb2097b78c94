import math

import pytest
from hypothesis import given, strategies as st

from hadronpoles.core import (HBARC, NONRELATIVISTIC, RELATIVISTIC, Channel, SheetedPoint, check_single_mode,
                              cm_momentum, fm_to_inverse_mev, inverse_mev_to_fm, momentum_squared,
                              normalize_sheet, phase_space, phase_space_derivative, upper_sqrt)
from hadronpoles.errors import ConfigurationError, SingularKinematicsError


def test_channel_properties():
    ch = Channel(938.272, 939.565)
    assert ch.mu == pytest.approx(938.272 * 939.565 / (938.272 + 939.565))
    assert ch.threshold_s == pytest.approx((938.272 + 939.565) ** 2)
    with pytest.raises(ConfigurationError):
        Channel(-1.0, 1.0)
    with pytest.raises(ConfigurationError):
        Channel(1.0, 1.0, ell=-1)


def test_unit_round_trip():
    assert inverse_mev_to_fm(fm_to_inverse_mev(2.7)) == pytest.approx(2.7)
    assert fm_to_inverse_mev(HBARC) == pytest.approx(1.0)


def test_sheet_aliases():
    assert normalize_sheet(["II", 1], 2) == ("II", "I")
    with pytest.raises(ConfigurationError):
        normalize_sheet(["III"])
    with pytest.raises(ConfigurationError):
        normalize_sheet(["I"], 2)


def test_upper_sqrt_reads_real_axis_as_upper_lip():
    assert upper_sqrt(complex(-4.0, -0.0)) == 2j
    assert upper_sqrt(9.0) == 3.0


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_upper_sqrt_branch(re, im):
    r = upper_sqrt(complex(re, im))
    assert r.imag >= 0
    assert abs(r * r - complex(re, im)) <= 1e-9 * max(1.0, abs(complex(re, im)))


def test_momentum_at_threshold_vanishes():
    ch = Channel(139.57, 139.57)
    assert momentum_squared(ch, ch.threshold_s) == 0
    with pytest.raises(SingularKinematicsError):
        momentum_squared(ch, 0)


def test_sheet_flip_changes_sign_of_momentum():
    ch = Channel(139.57, 493.68)
    p1 = cm_momentum(ch, SheetedPoint(800.0 ** 2 + 10j, ("I",)))
    p2 = cm_momentum(ch, SheetedPoint(800.0 ** 2 + 10j, ("II",)))
    assert p1.k == -p2.k
    assert p1.k.imag > 0


def test_nonrelativistic_momentum():
    ch = Channel(938.272, 939.565)
    k = cm_momentum(ch, SheetedPoint(-2.2245, ("I",)), NONRELATIVISTIC).k
    assert k.imag == pytest.approx(math.sqrt(2 * ch.mu * 2.2245))


def test_phase_space_derivative_matches_difference():
    ch = Channel(139.57, 493.68)
    s = 900.0 ** 2 + 3e3j
    h = 1.0
    fd = (phase_space(ch, SheetedPoint(s + h)) - phase_space(ch, SheetedPoint(s - h))) / (2 * h)
    assert abs(phase_space_derivative(ch, SheetedPoint(s)) / fd - 1) < 1e-7


def test_single_mode_guard():
    assert check_single_mode([RELATIVISTIC, RELATIVISTIC]) == RELATIVISTIC
    with pytest.raises(ConfigurationError):
        check_single_mode([RELATIVISTIC, NONRELATIVISTIC])
