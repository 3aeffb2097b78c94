"""Unitarized amplitude families, S matrix and phase shifts.

Every model is written as ``T = [K^-1 + G]^-1`` with a kernel ``K`` and a
diagonal loop function ``G``:

* :class:`CoupledChannelModel` -- relativistic channels, ``G`` the
  subtracted two-point loop of :mod:`hadronpoles.loopfn`, variable ``s``.
* :class:`NonRelativisticModel` -- ``G_i = -i k_i``, variable ``E`` measured
  from the lowest threshold.  :class:`EREModel` and :class:`CDDModel` are the
  single-channel special cases with ``K^-1 = -1/a + r k^2/2`` and
  ``K^-1 = lambda/(E - M_Z) + beta``.

The product is evaluated as ``T = (1 + K G)^-1 K`` so kernels with zeros or
poles are admissible.  In both modes ``Im T^-1 = -rho`` on the physical
axis and ``S = 1 + 2i rho^1/2 T rho^1/2`` is unitary.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import loopfn
from .core import (NONRELATIVISTIC, RELATIVISTIC, SHEET_I, SHEET_II, Channel, SheetedPoint,
                   normalize_sheet, upper_sqrt)
from .errors import ConfigurationError, NoOpenChannelError, PoleProximityError

POLE_CONDITION_LIMIT = 1e13


# ---------------------------------------------------------------- kernels


class Kernel(ABC):
    """Interaction kernel ``K(z)``: complex symmetric, real-analytic."""

    n_channels: int

    @abstractmethod
    def __call__(self, z) -> np.ndarray:
        ...

    def derivative(self, z) -> np.ndarray | None:
        """Analytic ``dK/dz``, or ``None`` when not available."""
        return None

    def singularities(self) -> list[complex]:
        return []


class ConstantKernel(Kernel):
    def __init__(self, matrix):
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
            raise ConfigurationError("kernel matrix must be square and symmetric")
        self.matrix = m
        self.n_channels = m.shape[0]

    def __call__(self, z):
        return self.matrix.copy()

    def derivative(self, z):
        return np.zeros_like(self.matrix)


class PolynomialKernel(Kernel):
    """``K(z) = sum_n C_n z^n`` with symmetric coefficient matrices."""

    def __init__(self, coefficients: Sequence):
        cs = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coefficients]
        if not cs:
            raise ConfigurationError("polynomial kernel needs at least one coefficient")
        for c in cs:
            if c.shape != cs[0].shape or not np.allclose(c, c.T):
                raise ConfigurationError("polynomial kernel coefficients must be equal-shape symmetric matrices")
        self.coefficients = cs
        self.n_channels = cs[0].shape[0]

    def __call__(self, z):
        out = np.zeros_like(self.coefficients[0])
        for c in reversed(self.coefficients):
            out = out * z + c
        return out

    def derivative(self, z):
        out = np.zeros_like(self.coefficients[0])
        for n in range(len(self.coefficients) - 1, 0, -1):
            out = out * z + n * self.coefficients[n]
        return out


class BarePoleKernel(Kernel):
    """``K_ij(s) = g0_i g0_j / (M0^2 - s) + B_ij`` (rank-one pole plus background)."""

    def __init__(self, g0: Sequence[float], M0: float, background=None):
        self.g0 = np.asarray(g0, dtype=complex).reshape(-1)
        self.M0 = float(M0)
        self.n_channels = self.g0.size
        if background is None:
            background = np.zeros((self.n_channels, self.n_channels))
        self.background = ConstantKernel(background).matrix
        if self.background.shape != (self.n_channels, self.n_channels):
            raise ConfigurationError("background shape does not match g0")

    @property
    def pole_position(self):
        return self.M0 ** 2

    def __call__(self, z):
        return np.outer(self.g0, self.g0) / (self.M0 ** 2 - z) + self.background

    def derivative(self, z):
        return np.outer(self.g0, self.g0) / (self.M0 ** 2 - z) ** 2

    def singularities(self):
        return [complex(self.M0 ** 2)]


class CallableKernel(Kernel):
    """User-supplied kernel; ``derivative`` optional.

    Finite differencing is opt-in through ``finite_difference_step`` since it
    is noisy next to a pole of the amplitude.
    """

    def __init__(self, func: Callable, n_channels: int, derivative: Callable | None = None,
                 finite_difference_step: float | None = None):
        self.func = func
        self.n_channels = n_channels
        self._derivative = derivative
        self.fd_step = finite_difference_step

    def __call__(self, z):
        return np.atleast_2d(np.asarray(self.func(z), dtype=complex))

    def derivative(self, z):
        if self._derivative is not None:
            return np.atleast_2d(np.asarray(self._derivative(z), dtype=complex))
        if self.fd_step:
            h = self.fd_step
            return (self(z + h) - self(z - h)) / (2 * h)
        return None


class _EREKernel(Kernel):
    n_channels = 1

    def __init__(self, a, r, mu):
        self.a, self.r, self.mu = a, r, mu

    def inverse(self, E):
        return -1.0 / self.a + self.mu * self.r * E

    def __call__(self, E):
        return np.array([[1.0 / self.inverse(E)]], dtype=complex)

    def derivative(self, E):
        return np.array([[-self.mu * self.r / self.inverse(E) ** 2]], dtype=complex)


class _CDDKernel(Kernel):
    n_channels = 1

    def __init__(self, lam, M_Z, beta):
        self.lam, self.M_Z, self.beta = lam, M_Z, beta

    def __call__(self, E):
        x = E - self.M_Z
        return np.array([[x / (self.lam + self.beta * x)]], dtype=complex)

    def derivative(self, E):
        x = E - self.M_Z
        return np.array([[self.lam / (self.lam + self.beta * x) ** 2]], dtype=complex)


# ----------------------------------------------------------------- models


class AmplitudeModel(ABC):
    """Common machinery for ``T = (1 + K G)^-1 K`` models."""

    mode: str
    kernel: Kernel
    channels: tuple[Channel, ...]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    @abstractmethod
    def thresholds(self) -> np.ndarray:
        """Branch points in the model variable, one per channel."""

    @abstractmethod
    def loop(self, point: SheetedPoint) -> np.ndarray:
        ...

    @abstractmethod
    def loop_derivative(self, point: SheetedPoint) -> np.ndarray:
        ...

    @abstractmethod
    def phase_space(self, point: SheetedPoint) -> np.ndarray:
        """Sheet-consistent ``rho_i`` (so that ``Im G_I = -rho`` on the cut)."""

    @abstractmethod
    def sqrt_s(self, z) -> complex:
        """Total CM energy for the model variable ``z``."""

    @property
    def scale(self) -> float:
        """Typical magnitude of the model variable, used in relative tolerances."""
        return float(max(abs(self.thresholds).max(), 1.0))

    def point(self, z, sheet=None) -> SheetedPoint:
        if sheet is None:
            sheet = (SHEET_I,) * self.n_channels
        return SheetedPoint(z, normalize_sheet(sheet, self.n_channels))

    def physical_sheet(self):
        return (SHEET_I,) * self.n_channels

    def _as_point(self, point) -> SheetedPoint:
        if isinstance(point, SheetedPoint):
            if len(point.sheet) != self.n_channels:
                raise ConfigurationError(f"sheet {point.sheet} does not match {self.n_channels} channels")
            return point
        return self.point(point)

    # -- amplitude

    def T_matrix(self, point) -> np.ndarray:
        point = self._as_point(point)
        with np.errstate(divide="ignore", invalid="ignore"):
            K = self.kernel(point.value)
        if not np.all(np.isfinite(K)):
            # removable singularity of T at a kernel pole
            d = 1e-6 * self.scale
            return 0.5 * (self.T_matrix(point.moved(point.value + d))
                          + self.T_matrix(point.moved(point.value - d)))
        G = self.loop(point)
        A = np.eye(self.n_channels) + K * G[np.newaxis, :]
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > POLE_CONDITION_LIMIT:
            raise PoleProximityError(f"1 + K G is singular at {point.value} (cond = {cond:.3e})", cond)
        return np.linalg.solve(A, K)

    def inverse(self, point) -> np.ndarray:
        """``K^-1 + G``; requires an invertible kernel."""
        point = self._as_point(point)
        return np.linalg.inv(self.kernel(point.value)) + np.diag(self.loop(point))

    def pole_function(self, point) -> complex:
        """``det(1 + K G) = det K det T^-1``: same zeros as ``det T^-1``.

        Multiplied by ``(z - z_k)/scale`` for every kernel singularity ``z_k``
        so that rank-one kernel poles do not show up as poles of the search
        function.
        """
        point = self._as_point(point)
        z = point.value
        factor = 1.0
        for zk in self.kernel.singularities():
            if z == zk:
                d = 1e-6 * self.scale
                return 0.5 * (self.pole_function(point.moved(z + d)) + self.pole_function(point.moved(z - d)))
            factor *= (z - zk) / self.scale
        K = self.kernel(z)
        G = self.loop(point)
        return complex(np.linalg.det(np.eye(self.n_channels) + K * G[np.newaxis, :]) * factor)

    # -- physical axis

    def open_channels(self, z: float) -> list[int]:
        return [i for i, th in enumerate(self.thresholds) if z > th.real]

    def S_matrix(self, z: float) -> np.ndarray:
        """S matrix restricted to the open channels at real ``z`` (``+i0``)."""
        z = float(np.real(z))
        open_ = self.open_channels(z)
        if not open_:
            raise NoOpenChannelError(f"no open channel at {z}")
        point = self.point(z)
        T = self.T_matrix(point)[np.ix_(open_, open_)]
        rho = self.phase_space(point)[open_]
        sq = np.sqrt(rho.real.astype(float))
        return np.eye(len(open_)) + 2j * sq[:, None] * T * sq[None, :]

    # -- analyticity

    def distance_to_nonanalyticity(self, point: SheetedPoint) -> float:
        """Distance from ``point`` to the nearest branch point or cut of ``T``."""
        z = complex(point.value)
        d = math.inf
        for i, th in enumerate(self.thresholds):
            d = min(d, _distance_to_ray(z, th.real))
            for extra in self._extra_cuts(i, point.sheet[i]):
                d = min(d, extra(z))
        return d

    def _extra_cuts(self, index, flag):
        return []


def _distance_to_ray(z: complex, start: float) -> float:
    """Distance from ``z`` to the real half-line ``[start, inf)``."""
    if z.real >= start:
        return abs(z.imag)
    return abs(z - start)


def _distance_to_left_ray(z: complex, end: float) -> float:
    if z.real <= end:
        return abs(z.imag)
    return abs(z - end)


class CoupledChannelModel(AmplitudeModel):
    """Relativistic coupled channels in the Mandelstam variable ``s``."""

    mode = RELATIVISTIC

    def __init__(self, channels: Sequence[Channel], scheme: loopfn.SubtractionScheme, kernel: Kernel):
        self.channels = tuple(channels)
        if kernel.n_channels != len(self.channels):
            raise ConfigurationError("kernel size does not match channel count")
        if len(scheme.a) not in (1, len(self.channels)):
            raise ConfigurationError("need one subtraction constant per channel")
        self.scheme = scheme
        self.kernel = kernel

    @property
    def thresholds(self):
        return np.array([c.threshold_s for c in self.channels], dtype=float)

    @property
    def scale(self):
        return float(self.thresholds.min())

    def loop(self, point):
        return loopfn.G_channels(self.channels, self.scheme, point)

    def loop_derivative(self, point):
        return loopfn.dG_ds_channels(self.channels, self.scheme, point)

    def phase_space(self, point):
        from .core import phase_space
        return np.array([phase_space(c, point, i) for i, c in enumerate(self.channels)], dtype=complex)

    def sqrt_s(self, z):
        return complex(np.sqrt(complex(z)))

    def _extra_cuts(self, index, flag):
        c = self.channels[index]
        cuts = [lambda z: abs(z)]
        if flag == SHEET_II:
            cuts.append(lambda z, b=c.pseudo_threshold_s: _distance_to_left_ray(z, b))
        return cuts


class NonRelativisticModel(AmplitudeModel):
    """Nonrelativistic channels with ``G_i = -i k_i`` and ``E`` from the lowest threshold."""

    mode = NONRELATIVISTIC

    def __init__(self, channels: Sequence[Channel], kernel: Kernel):
        self.channels = tuple(channels)
        if kernel.n_channels != len(self.channels):
            raise ConfigurationError("kernel size does not match channel count")
        self.kernel = kernel
        e0 = min(c.threshold_E for c in self.channels)
        self._offsets = np.array([c.threshold_E - e0 for c in self.channels], dtype=float)
        self.m_th = e0

    @property
    def thresholds(self):
        return self._offsets

    @property
    def scale(self):
        return float(max(self._offsets.max(), 1.0))

    def momenta(self, point: SheetedPoint) -> np.ndarray:
        out = np.empty(self.n_channels, dtype=complex)
        for i, c in enumerate(self.channels):
            k = upper_sqrt(2.0 * c.mu * (point.value - self._offsets[i]))
            out[i] = -k if point.sheet[i] == SHEET_II else k
        return out

    def loop(self, point):
        return -1j * self.momenta(point)

    def loop_derivative(self, point):
        k = self.momenta(point)
        mu = np.array([c.mu for c in self.channels])
        if np.any(k == 0):
            from .errors import AmbiguousBranchError
            raise AmbiguousBranchError("dG/dE diverges at threshold")
        return -1j * mu / k

    def phase_space(self, point):
        return self.momenta(point)

    def sqrt_s(self, z):
        return self.m_th + complex(z)


class EREModel(NonRelativisticModel):
    """S-wave effective-range amplitude ``T = 1/(-1/a + r k^2/2 - i k)``.

    ``a`` and ``r`` in MeV^-1, ``mu`` in MeV; ``E`` is measured from ``m_th``.
    """

    def __init__(self, a: float, r: float, mu: float, m_th: float = 0.0):
        if a == 0:
            raise ConfigurationError("scattering length must be non-zero")
        self.a, self.r, self.mu = float(a), float(r), float(mu)
        ch = _channel_with_mu(mu, m_th)
        super().__init__([ch], _EREKernel(self.a, self.r, self.mu))
        self.m_th = float(m_th)

    def T_matrix(self, point):
        point = self._as_point(point)
        k = self.momenta(point)[0]
        return np.array([[1.0 / (-1.0 / self.a + 0.5 * self.r * k * k - 1j * k)]])

    def inverse_scalar(self, point):
        k = self.momenta(self._as_point(point))[0]
        return -1.0 / self.a + 0.5 * self.r * k * k - 1j * k

    def pole_function(self, point):
        return self.inverse_scalar(point) * abs(self.a)

    def sqrt_s(self, z):
        return self.m_th + complex(z)


class CDDModel(NonRelativisticModel):
    """Single CDD pole: ``t(E) = 1/(lambda/(E - M_Z) + beta - i k)``.

    ``lam`` in MeV^2, ``M_Z`` and ``beta`` in MeV, ``E`` from threshold.
    """

    def __init__(self, lam: float, M_Z: float, beta: float, mu: float, m_th: float = 0.0):
        self.lam, self.M_Z, self.beta, self.mu = float(lam), float(M_Z), float(beta), float(mu)
        super().__init__([_channel_with_mu(mu, m_th)], _CDDKernel(self.lam, self.M_Z, self.beta))
        self.m_th = float(m_th)

    def T_matrix(self, point):
        point = self._as_point(point)
        k = self.momenta(point)[0]
        x = point.value - self.M_Z
        # multiplied through by (E - M_Z) so that t(M_Z) = 0 exactly
        return np.array([[x / (self.lam + (self.beta - 1j * k) * x)]])

    def pole_function(self, point):
        point = self._as_point(point)
        k = self.momenta(point)[0]
        f = self.lam + (self.beta - 1j * k) * (point.value - self.M_Z)
        return f / abs(self.lam) if self.lam else f

    def sqrt_s(self, z):
        return self.m_th + complex(z)


def _channel_with_mu(mu: float, m_th: float) -> Channel:
    """Equal-mass channel reproducing reduced mass ``mu``.

    Only ``mu`` enters nonrelativistic kinematics; the individual masses are
    bookkeeping.
    """
    if mu <= 0:
        raise ConfigurationError("reduced mass must be positive")
    return Channel(2.0 * mu, 2.0 * mu, 0, "S")


# ---------------------------------------------------------- phase shifts


@dataclass
class PhaseShiftTable:
    """Phase shifts (degrees) and inelasticities per channel on a real grid."""

    z: np.ndarray
    sqrt_s: np.ndarray
    delta_deg: np.ndarray
    inelasticity: np.ndarray
    unwrapped: list[bool] = field(default_factory=list)

    def rows(self):
        for j in range(self.z.size):
            yield [self.sqrt_s[j], *self.delta_deg[j], *self.inelasticity[j]]

    def header(self):
        n = self.delta_deg.shape[1]
        return (["sqrt_s_MeV"] + [f"delta_deg_{i + 1}" for i in range(n)]
                + [f"inelasticity_{i + 1}" for i in range(n)])

    def to_csv(self, path_or_file):
        import csv
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([_fmt(v) for v in row])
        finally:
            if own:
                fh.close()


def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def unwrap_phase(raw_deg: np.ndarray, max_jump_deg: float = 90.0) -> tuple[np.ndarray, bool]:
    """Continue a modulo-180 phase across a grid.

    Each step is taken as the representative of the raw difference in
    ``(-90, 90]``.  When a step reaches ``max_jump_deg`` the continuation is
    ambiguous and the raw values are returned unchanged with ``False``.
    """
    raw = np.asarray(raw_deg, dtype=float)
    out = raw.copy()
    valid = ~np.isnan(raw)
    idx = np.flatnonzero(valid)
    for a, b in zip(idx[:-1], idx[1:]):
        step = (raw[b] - raw[a] + 90.0) % 180.0 - 90.0
        if abs(step) >= max_jump_deg - 1e-9:
            return raw, False
        out[b] = out[a] + step
    return out, True


def phase_shift(model: AmplitudeModel, z_grid, max_jump_deg: float = 90.0) -> PhaseShiftTable:
    """Phase shifts ``delta_i = arg(S_ii)/2`` and ``eta_i = |S_ii|`` on a real grid."""
    z = np.asarray(z_grid, dtype=float)
    if z.size and z.min() <= model.thresholds.min():
        raise NoOpenChannelError("phase-shift grid must lie above the lowest threshold")
    n = model.n_channels
    raw = np.full((z.size, n), np.nan)
    eta = np.full((z.size, n), np.nan)
    for j, zj in enumerate(z):
        S = model.S_matrix(zj)
        for col, i in enumerate(model.open_channels(zj)):
            raw[j, i] = 0.5 * math.degrees(np.angle(S[col, col]))
            eta[j, i] = abs(S[col, col])
    delta = np.empty_like(raw)
    flags = []
    for i in range(n):
        delta[:, i], ok = unwrap_phase(raw[:, i], max_jump_deg)
        flags.append(ok)
    sqrt_s = np.array([model.sqrt_s(v).real for v in z])
    return PhaseShiftTable(z, sqrt_s, delta, eta, flags)


# ------------------------------------------------------------ Breit-Wigner


@dataclass(frozen=True)
class BreitWignerWidths:
    mass: float
    width: float
    partial_widths: tuple[float, ...]


def breit_wigner_widths(model: AmplitudeModel, sqrt_s_lo: float, sqrt_s_hi: float,
                        n_grid: int = 4001) -> BreitWignerWidths:
    """Read mass and widths of a narrow resonance off the physical S matrix.

    The mass maximises ``|S_11 - 1|``, the total width is the full width at
    half maximum of ``|S_11 - 1|^2`` in ``sqrt(s)``, and the partial widths
    follow from ``|S_ii(M) - 1| = 2 Gamma_i / Gamma``.
    """
    def z_of(w):
        return w * w if model.mode == RELATIVISTIC else w - model.m_th

    def signal(w):
        S = model.S_matrix(z_of(w))
        return abs(S[0, 0] - 1.0) ** 2

    ws = np.linspace(sqrt_s_lo, sqrt_s_hi, n_grid)
    vals = np.array([signal(w) for w in ws])
    j = int(np.argmax(vals))
    lo, hi = ws[max(j - 1, 0)], ws[min(j + 1, n_grid - 1)]
    res = minimize_scalar(lambda w: -signal(w), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * hi})
    M = float(res.x)
    peak = signal(M)
    left = brentq(lambda w: signal(w) - peak / 2, sqrt_s_lo, M, xtol=1e-12 * M)
    right = brentq(lambda w: signal(w) - peak / 2, M, sqrt_s_hi, xtol=1e-12 * M)
    width = right - left
    S = model.S_matrix(z_of(M))
    open_ = model.open_channels(z_of(M))
    partial = [0.0] * model.n_channels
    for col, i in enumerate(open_):
        partial[i] = width * abs(S[col, col] - 1.0) / 2.0
    return BreitWignerWidths(M, width, tuple(partial))
