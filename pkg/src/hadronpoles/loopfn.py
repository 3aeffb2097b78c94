"""Scalar unitarity loop function of a two-meson channel.

First sheet::

    16 pi^2 G(s) = a + log(m1^2/Lambda^2) - x+ log((x+ - 1)/x+) - x- log((x- - 1)/x-)

    x+- = (s + m2^2 - m1^2)/(2s) +- sqrt((s + m2^2 - m1^2)^2 - 4 s (m2^2 - i0))/(2s)

Sign convention: with this expression ``Im G(s + i0) = -rho(s)`` above
threshold (``IM_G_SIGN``).  With ``T = [K^-1 + G]^-1`` this pairs with
``S = 1 + 2i rho^1/2 T rho^1/2``.  The second sheet is
``G_II(s) = G_I(s) + 2i rho(s)`` with ``rho`` continued on the first-sheet
momentum branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import (SHEET_II, Channel, SheetedPoint, normalize_sheet, phase_space,
                   phase_space_derivative, upper_sqrt)
from .errors import AmbiguousBranchError, SingularKinematicsError

IM_G_SIGN = -1
_NORM = 1.0 / (16.0 * math.pi ** 2)


@dataclass(frozen=True)
class SubtractionScheme:
    """Subtraction constants ``a_i`` (one per channel) at scale ``Lambda`` (MeV)."""

    a: tuple[float, ...]
    Lambda: float = 1000.0

    def __post_init__(self):
        a = self.a
        if np.isscalar(a):
            a = (float(a),)
        object.__setattr__(self, "a", tuple(float(v) for v in a))
        if self.Lambda <= 0:
            raise ValueError("Lambda must be positive")

    def constant(self, index: int) -> float:
        return self.a[index] if len(self.a) > 1 else self.a[0]

    def rescaled(self, new_lambda: float) -> "SubtractionScheme":
        """Equivalent scheme at another scale (``a - log Lambda^2`` kept fixed)."""
        shift = math.log(new_lambda ** 2 / self.Lambda ** 2)
        return SubtractionScheme(tuple(a + shift for a in self.a), new_lambda)


def _check_branch_point(channel: Channel, s: complex):
    if s == 0:
        raise SingularKinematicsError("loop function requested at s = 0")


def G(channel: Channel, scheme: SubtractionScheme, point: SheetedPoint, index: int = 0) -> complex:
    """Loop function of ``channel`` on the sheet flagged for ``index``."""
    s = complex(point.value)
    _check_branch_point(channel, s)
    m1, m2 = channel.m1, channel.m2
    const = scheme.constant(index) + math.log(m1 ** 2 / scheme.Lambda ** 2)
    g = (const + kernels.loop_g(s, m1, m2)) * _NORM
    if point.sheet[index] == SHEET_II:
        g -= 2j * IM_G_SIGN * rho_first_sheet(channel, s)
    return g


def dG_ds(channel: Channel, scheme: SubtractionScheme, point: SheetedPoint, index: int = 0) -> complex:
    """Analytic s-derivative; independent of ``a_i`` and ``Lambda``."""
    s = complex(point.value)
    _check_branch_point(channel, s)
    if s == channel.threshold_s or (s == channel.pseudo_threshold_s and channel.m1 != channel.m2):
        raise AmbiguousBranchError(f"dG/ds requested at the branch point s = {s}")
    try:
        d = kernels.loop_dg(s, channel.m1, channel.m2) * _NORM
    except ZeroDivisionError as exc:
        raise AmbiguousBranchError(str(exc)) from None
    if point.sheet[index] == SHEET_II:
        d -= 2j * IM_G_SIGN * phase_space_derivative(channel, SheetedPoint(s, ("I",)))
    return d


def G_array(channel: Channel, scheme: SubtractionScheme, s, sheet="I", index: int = 0) -> np.ndarray:
    """Vectorised ``G`` over an array of ``s`` on one sheet (NaN at s = 0)."""
    s = np.asarray(s, dtype=complex)
    m1, m2 = channel.m1, channel.m2
    const = scheme.constant(index) + math.log(m1 ** 2 / scheme.Lambda ** 2)
    g = (const + kernels.loop_g_array(s, m1, m2)) * _NORM
    if normalize_sheet(sheet)[0] == SHEET_II:
        g = g - 2j * IM_G_SIGN * _rho_first_sheet_array(channel, s)
    return g


def dG_ds_array(channel: Channel, s, sheet="I") -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    d = kernels.loop_dg_array(s, channel.m1, channel.m2) * _NORM
    if normalize_sheet(sheet)[0] == SHEET_II:
        d = d - 2j * IM_G_SIGN * np.vectorize(
            lambda v: phase_space_derivative(channel, SheetedPoint(v, ("I",))), otypes=[complex])(s)
    return d


def _rho_first_sheet_array(channel, s):
    out = np.empty(s.shape, dtype=complex)
    flat = out.reshape(-1)
    for i, v in enumerate(s.reshape(-1)):
        if v == 0:
            flat[i] = complex("nan+nanj")
        else:
            flat[i] = phase_space(channel, SheetedPoint(v, ("I",)))
    return out


def rho_first_sheet(channel: Channel, s) -> complex:
    return phase_space(channel, SheetedPoint(s, ("I",)))


def threshold_x(channel: Channel) -> tuple[complex, complex]:
    """``x+-`` at threshold, where the discriminant vanishes."""
    s = channel.threshold_s
    b = s + channel.m2 ** 2 - channel.m1 ** 2
    lam = (s - channel.threshold_s) * (s - channel.pseudo_threshold_s)
    r = upper_sqrt(lam)
    return (b + r) / (2 * s), (b - r) / (2 * s)


def G_channels(channels: Sequence[Channel], scheme: SubtractionScheme, point: SheetedPoint) -> np.ndarray:
    return np.array([G(c, scheme, point, i) for i, c in enumerate(channels)], dtype=complex)


def dG_ds_channels(channels: Sequence[Channel], scheme: SubtractionScheme, point: SheetedPoint) -> np.ndarray:
    return np.array([dG_ds(c, scheme, point, i) for i, c in enumerate(channels)], dtype=complex)
