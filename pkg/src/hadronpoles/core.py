"""Two-body kinematics, channels and Riemann-sheet bookkeeping.

Units are MeV throughout (hbar = c = 1).  Two kinematics modes exist:

* ``relativistic``: the complex variable is the Mandelstam ``s`` (MeV^2).
* ``nonrelativistic``: the complex variable is the energy ``E`` (MeV)
  measured from the channel threshold.

The first-sheet momentum is the branch with ``Im k >= 0``; real arguments are
read as the upper lip (``+i0``).  The second sheet of a channel flips the sign
of its momentum.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigurationError, SingularKinematicsError

HBARC = 197.3269804  # MeV fm

RELATIVISTIC = "relativistic"
NONRELATIVISTIC = "nonrelativistic"
MODES = (RELATIVISTIC, NONRELATIVISTIC)

SHEET_I = "I"
SHEET_II = "II"
_SHEET_ALIASES = {"I": SHEET_I, "1": SHEET_I, 1: SHEET_I, "II": SHEET_II, "2": SHEET_II, 2: SHEET_II}


def fm_to_inverse_mev(length_fm):
    """Convert a length in fm to MeV^-1."""
    return length_fm / HBARC


def inverse_mev_to_fm(length):
    return length * HBARC


@dataclass(frozen=True)
class Channel:
    """A two-particle channel with masses ``m1``, ``m2`` in MeV."""

    m1: float
    m2: float
    ell: int = 0
    spin_label: str = ""

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0):
            raise ConfigurationError(f"channel masses must be positive, got {self.m1}, {self.m2}")
        if int(self.ell) != self.ell or self.ell < 0:
            raise ConfigurationError(f"ell must be a non-negative integer, got {self.ell}")

    @property
    def mu(self) -> float:
        return self.m1 * self.m2 / (self.m1 + self.m2)

    @property
    def threshold_E(self) -> float:
        return self.m1 + self.m2

    @property
    def threshold_s(self) -> float:
        return (self.m1 + self.m2) ** 2

    @property
    def pseudo_threshold_s(self) -> float:
        return (self.m1 - self.m2) ** 2


def normalize_sheet(sheet, n_channels: int | None = None) -> tuple[str, ...]:
    if isinstance(sheet, (str, int)):
        sheet = [sheet]
    try:
        flags = tuple(_SHEET_ALIASES[f] for f in sheet)
    except (KeyError, TypeError):
        raise ConfigurationError(f"unknown sheet flags {sheet!r}; use 'I' or 'II'") from None
    if n_channels is not None and len(flags) != n_channels:
        raise ConfigurationError(f"sheet {flags} has {len(flags)} flags for {n_channels} channels")
    return flags


@dataclass(frozen=True)
class SheetedPoint:
    """Complex ``s`` (or ``E``) together with per-channel sheet flags."""

    value: complex
    sheet: tuple[str, ...] = (SHEET_I,)

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        object.__setattr__(self, "sheet", normalize_sheet(self.sheet))

    @property
    def s(self) -> complex:
        return self.value

    @property
    def E(self) -> complex:
        return self.value

    def on_sheet(self, index: int) -> str:
        return self.sheet[index]

    def moved(self, value) -> "SheetedPoint":
        return SheetedPoint(value, self.sheet)

    def conjugate(self) -> "SheetedPoint":
        return SheetedPoint(self.value.conjugate(), self.sheet)


@dataclass(frozen=True)
class Momentum:
    k: complex
    channel_index: int = 0


def upper_sqrt(z) -> complex:
    """Square root with ``Im >= 0``; positive reals map to positive reals."""
    z = complex(z)
    if z.imag == 0.0:
        # drop a negative zero so that the real axis is read as the upper lip
        z = complex(z.real, 0.0)
    r = cmath.sqrt(z)
    if r.imag < 0.0:
        r = -r
    return r


def momentum_squared(channel: Channel, s) -> complex:
    """CM momentum squared for Mandelstam ``s`` (factorised Kallen function)."""
    s = complex(s)
    if s == 0:
        raise SingularKinematicsError("CM momentum is singular at s = 0")
    lam = (s - channel.threshold_s) * (s - channel.pseudo_threshold_s)
    return lam / (4.0 * s)


def _sheet_sign(flag: str) -> int:
    return -1 if flag == SHEET_II else 1


def cm_momentum(channel: Channel, point: SheetedPoint, mode: str = RELATIVISTIC,
                channel_index: int = 0) -> Momentum:
    """CM momentum on the sheet selected for ``channel_index``.

    Relativistic mode uses ``k = sqrt(lambda(s, m1^2, m2^2)) / (2 sqrt(s))``;
    nonrelativistic mode uses ``k = sqrt(2 mu E)``.
    """
    if mode == RELATIVISTIC:
        k = upper_sqrt(momentum_squared(channel, point.value))
    elif mode == NONRELATIVISTIC:
        k = upper_sqrt(2.0 * channel.mu * point.value)
    else:
        raise ConfigurationError(f"unknown kinematics mode {mode!r}")
    flag = point.sheet[channel_index] if channel_index < len(point.sheet) else point.sheet[0]
    return Momentum(_sheet_sign(flag) * k, channel_index)


def phase_space(channel: Channel, point: SheetedPoint, channel_index: int = 0) -> complex:
    """Relativistic phase-space factor ``p / (8 pi sqrt(s))``."""
    s = complex(point.value)
    if s == 0:
        raise SingularKinematicsError("phase space is singular at s = 0")
    k = cm_momentum(channel, point, RELATIVISTIC, channel_index).k
    return k / (8.0 * math.pi * cmath.sqrt(s))


def phase_space_derivative(channel: Channel, point: SheetedPoint, channel_index: int = 0) -> complex:
    """Analytic ``d rho / ds`` on the sheet of ``channel_index``."""
    s = complex(point.value)
    k = cm_momentum(channel, point, RELATIVISTIC, channel_index).k
    if k == 0:
        raise SingularKinematicsError("d rho/ds diverges at threshold")
    a, b = channel.threshold_s, channel.pseudo_threshold_s
    dk2 = (s * s - a * b) / (4.0 * s * s)
    dk = dk2 / (2.0 * k)
    rs = cmath.sqrt(s)
    return (dk / rs - k / (2.0 * s * rs)) / (8.0 * math.pi)


def check_single_mode(modes: Sequence[str]) -> str:
    """Reject models that mix kinematics conventions."""
    found = set(modes)
    if len(found) != 1:
        raise ConfigurationError(f"a model must use one kinematics mode, got {sorted(found)}")
    mode = found.pop()
    if mode not in MODES:
        raise ConfigurationError(f"unknown kinematics mode {mode!r}")
    return mode
