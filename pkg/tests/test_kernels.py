"""Compiled and pure-Python kernels must agree."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadronpoles import _kernels_py, kernels

compiled = pytest.importorskip("hadronpoles._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=200, deadline=None)
@given(st.floats(-5e6, 5e6, allow_subnormal=False), st.floats(-5e6, 5e6, allow_subnormal=False),
       st.floats(1.0, 1000.0), st.floats(1.0, 1000.0))
def test_scalar_parity(re, im, m1, m2):
    s = complex(re, im)
    if abs(s) < 1e-200:
        return
    a, b = compiled.loop_g(s, m1, m2), _kernels_py.loop_g(s, m1, m2)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))
    try:
        da = compiled.loop_dg(s, m1, m2)
    except ZeroDivisionError:
        with pytest.raises(ZeroDivisionError):
            _kernels_py.loop_dg(s, m1, m2)
        return
    db = _kernels_py.loop_dg(s, m1, m2)
    assert abs(da - db) <= 1e-12 * max(1e-12, abs(db))


@pytest.mark.parametrize("s", [1e-300, 1e-9, 1e-9 + 1e-12j])
def test_regular_near_zero_for_unequal_masses(s):
    # the formula's apparent singularity at s = 0 is removable for m1 != m2
    s0 = 1e-3
    ref = _kernels_py.loop_g(s0, 139.57, 493.68) + (s - s0) * _kernels_py.loop_dg(s0, 139.57, 493.68)
    assert abs(_kernels_py.loop_g(s, 139.57, 493.68) - ref) < 1e-13
    assert abs(compiled.loop_g(s, 139.57, 493.68) - ref) < 1e-13


def test_array_parity_and_shape():
    rng = np.random.default_rng(3)
    s = (rng.uniform(-1e6, 3e6, 60) + 1j * rng.uniform(-1e6, 1e6, 60)).reshape(6, 10)
    s[0, 0] = 0
    for name in ("loop_g_array", "loop_dg_array"):
        a = getattr(compiled, name)(s, 139.57, 493.68)
        b = getattr(_kernels_py, name)(s, 139.57, 493.68)
        assert a.shape == s.shape
        assert np.isnan(a[0, 0]) and np.isnan(b[0, 0])
        np.testing.assert_allclose(a.ravel()[1:], b.ravel()[1:], rtol=1e-12)


def test_real_axis_parity():
    s = np.linspace(-4e5, 4e6, 400)
    np.testing.assert_allclose(compiled.loop_g_array(s, 139.57, 493.68), _kernels_py.loop_g_array(s, 139.57, 493.68),
                               rtol=1e-12, atol=1e-14)


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, HADRONPOLES_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from hadronpoles import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
