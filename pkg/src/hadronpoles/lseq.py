"""Lippmann-Schwinger scattering for energy-independent potentials.

Convention: ``T = V + V G T`` with the propagator

    G(k; E) = 1 / (k^2/2mu - E - i0),   measure  dk k^2 / (2 pi^2),

so a positive (separable) strength is attractive and near a pole

    T(k, k'; E) ~ -g(k) g(k') / (E - E_B).

With this normalisation the compositeness of a bound state is

    X = sum_waves  int dk k^2/(2 pi^2)  g(k)^2 / (k^2/2mu - E_B)^2.

Separable potentials are continued to the second sheet through

    I_II(E) = I_I(E) - i mu k_I f(k_I)^2 / pi,

with ``k_I`` the first-sheet momentum (``Im k_I >= 0``); the first-sheet
integral itself is evaluated on a ray rotated away from the integrand pole.
"""
from __future__ import annotations

import cmath
import csv
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import SHEET_I, SHEET_II, SheetedPoint, upper_sqrt
from .errors import (ConfigurationError, ContinuationBlockedError, CutoffWarning, ResolutionError,
                     SearchFailedError)
from .poles import find_root

DEFAULT_NODES = 200
GRID_SCALE = 600.0
DEFAULT_ROTATION = math.pi / 8
TWO_PI2 = 2.0 * math.pi ** 2


# -------------------------------------------------------------------- grid


@dataclass(frozen=True)
class MomentumGrid:
    """Gauss-Legendre nodes mapped to ``(0, inf)`` by ``k = c (1+x)/(1-x)``."""

    nodes: np.ndarray
    weights: np.ndarray
    c: float

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def measure(self) -> np.ndarray:
        """``w_j k_j^2 / (2 pi^2)``."""
        return self.weights * self.nodes ** 2 / TWO_PI2

    def refined(self) -> "MomentumGrid":
        return make_grid(2 * self.size, self.c)


def make_grid(n: int = DEFAULT_NODES, c: float = GRID_SCALE) -> MomentumGrid:
    if n < 2 or c <= 0:
        raise ConfigurationError("grid needs n >= 2 nodes and a positive scale")
    x, w = np.polynomial.legendre.leggauss(n)
    k = c * (1 + x) / (1 - x)
    return MomentumGrid(k, 2 * c * w / (1 - x) ** 2, float(c))


# ------------------------------------------------------------ form factors


class FormFactor(ABC):
    """Analytic vertex function ``f(k)``, even or odd in ``k``."""

    scale: float
    #: largest ray angle for which ``f`` stays analytic and decays in the sector
    max_rotation: float = 0.5 * math.pi

    @abstractmethod
    def __call__(self, k):
        ...

    @abstractmethod
    def derivative(self, k):
        ...

    def singularities(self) -> list[complex]:
        return []


class YamaguchiFormFactor(FormFactor):
    """``k^l / (k^2 + beta^2)^(l+1)``."""

    def __init__(self, beta: float, ell: int = 0):
        if beta <= 0 or ell < 0:
            raise ConfigurationError("Yamaguchi form factor needs beta > 0 and ell >= 0")
        self.beta, self.ell, self.scale = float(beta), int(ell), float(beta)

    def __call__(self, k):
        return k ** self.ell / (k * k + self.beta ** 2) ** (self.ell + 1)

    def derivative(self, k):
        b2, l = self.beta ** 2, self.ell
        d = k * k + b2
        lead = l * k ** (l - 1) / d ** (l + 1) if l else 0.0
        return lead - 2 * (l + 1) * k ** (l + 1) / d ** (l + 2)

    def singularities(self):
        return [1j * self.beta, -1j * self.beta]


class GaussianFormFactor(FormFactor):
    """``exp(-k^2 / beta^2)``; decays only for ray angles below ``pi/4``."""

    max_rotation = 0.25 * math.pi

    def __init__(self, beta: float):
        if beta <= 0:
            raise ConfigurationError("Gaussian form factor needs beta > 0")
        self.beta = self.scale = float(beta)

    def __call__(self, k):
        return np.exp(-k * k / self.beta ** 2)

    def derivative(self, k):
        return -2 * k / self.beta ** 2 * np.exp(-k * k / self.beta ** 2)


class TensorFormFactor(FormFactor):
    """D-wave partner ``t k^2 / (k^2 + beta^2)^2`` for a coupled S-D toy."""

    def __init__(self, beta: float, t: float):
        if beta <= 0:
            raise ConfigurationError("tensor form factor needs beta > 0")
        self.beta, self.t, self.scale = float(beta), float(t), float(beta)

    def __call__(self, k):
        return self.t * k * k / (k * k + self.beta ** 2) ** 2

    def derivative(self, k):
        d = k * k + self.beta ** 2
        return self.t * (2 * k / d ** 2 - 4 * k ** 3 / d ** 3)

    def singularities(self):
        return [1j * self.beta, -1j * self.beta]


class CallableFormFactor(FormFactor):
    """User form factor; the derivative falls back to a central difference."""

    def __init__(self, func: Callable, scale: float, derivative: Callable | None = None,
                 max_rotation: float = 0.25 * math.pi, singularities: Sequence[complex] = ()):
        self.func, self._der, self.scale = func, derivative, float(scale)
        self.max_rotation = float(max_rotation)
        self._sing = [complex(s) for s in singularities]

    def __call__(self, k):
        return self.func(k)

    def derivative(self, k):
        if self._der is not None:
            return self._der(k)
        h = 1e-6 * self.scale
        return (self.func(k + h) - self.func(k - h)) / (2 * h)

    def singularities(self):
        return list(self._sing)


# -------------------------------------------------------------- potentials


class Potential(ABC):
    """Energy-independent partial-wave potential ``V_ab(k, k')``."""

    mu: float
    waves: tuple[str, ...]

    @property
    def n_waves(self) -> int:
        return len(self.waves)

    @abstractmethod
    def matrix(self, k, kp) -> np.ndarray:
        """Array of shape ``(n_waves, n_waves, len(k), len(kp))``."""

    @property
    def default_grid_scale(self) -> float:
        return GRID_SCALE


class SeparablePotential(Potential):
    """Rank-one ``V_ab(k, k') = lambda f_a(k) f_b(k')``."""

    def __init__(self, strength: float, form_factors: Sequence[FormFactor] | FormFactor, mu: float,
                 waves: Sequence[str] | None = None):
        if isinstance(form_factors, FormFactor):
            form_factors = [form_factors]
        self.form_factors = tuple(form_factors)
        if not self.form_factors:
            raise ConfigurationError("separable potential needs at least one form factor")
        if mu <= 0:
            raise ConfigurationError("reduced mass must be positive")
        self.strength, self.mu = float(strength), float(mu)
        self.waves = tuple(waves) if waves is not None else tuple(f"w{i}" for i in range(len(self.form_factors)))
        if len(self.waves) != len(self.form_factors):
            raise ConfigurationError("one wave label per form factor")

    @property
    def default_grid_scale(self) -> float:
        return 2.0 * self.form_factors[0].scale

    def default_grid(self, n: int = DEFAULT_NODES) -> MomentumGrid:
        return make_grid(n, self.default_grid_scale)

    def matrix(self, k, kp):
        k, kp = np.asarray(k), np.asarray(kp)
        fa = np.array([f(k) for f in self.form_factors])
        fb = np.array([f(kp) for f in self.form_factors])
        return self.strength * fa[:, None, :, None] * fb[None, :, None, :]

    def form_values(self, k) -> np.ndarray:
        return np.array([f(k) for f in self.form_factors])

    # -- loop integral and its continuation

    def _max_rotation(self) -> float:
        return min(f.max_rotation for f in self.form_factors)

    def _ray_angle(self, E: complex) -> float:
        q = first_sheet_momentum(self.mu, E)
        if q.real < 0:
            q = -q
        theta = min(DEFAULT_ROTATION, 0.9 * self._max_rotation())
        if q.real == 0:
            return 0.0
        phi = -theta if cmath.phase(q) >= 0 else theta
        for f in self.form_factors:
            for s in f.singularities():
                a = cmath.phase(s)
                if s.real > 0 and min(0.0, phi) <= a <= max(0.0, phi):
                    raise ContinuationBlockedError(f"form-factor singularity {s} inside the rotated sector")
        return phi

    def loop_integral(self, E, sheet=SHEET_I, grid: MomentumGrid | None = None,
                      derivative: bool = False, boundary: bool = True) -> np.ndarray:
        """Per-wave ``I_a(E) = int dm f_a^2 G`` (or ``dI_a/dE``) on ``sheet``.

        ``boundary=False`` drops the second-sheet correction; only useful as a
        diagnostic.
        """
        E = complex(E)
        sheet = _flag(sheet)
        grid = grid or self.default_grid()
        phi = self._ray_angle(E)
        rot = cmath.exp(1j * phi)
        q = grid.nodes * rot
        den = q * q / (2 * self.mu) - E
        fq = self.form_values(q)
        wq = grid.weights * rot * q * q / TWO_PI2
        power = 2 if derivative else 1
        out = np.sum(wq * fq ** 2 / den ** power, axis=1)
        if sheet == SHEET_II and boundary:
            out = out + self.sheet_two_correction(E, derivative)
        return out

    def sheet_two_correction(self, E, derivative: bool = False) -> np.ndarray:
        """``I_II - I_I`` per wave, or its energy derivative."""
        kI = first_sheet_momentum(self.mu, E)
        if kI == 0:
            raise ContinuationBlockedError("second-sheet correction is singular at threshold")
        self._check_analytic_at(kI)
        f = self.form_values(kI)
        if not derivative:
            return -1j * self.mu * kI * f ** 2 / math.pi
        df = np.array([ff.derivative(kI) for ff in self.form_factors])
        d_kf2 = f ** 2 + 2 * kI * f * df
        return -1j * self.mu ** 2 / (math.pi * kI) * d_kf2

    def _check_analytic_at(self, k):
        for f in self.form_factors:
            for s in f.singularities():
                if abs(k - s) <= 1e-9 * f.scale or abs(k + s) <= 1e-9 * f.scale:
                    raise ContinuationBlockedError(f"form factor singular at k = {k}")

    def determinant(self, E, sheet=SHEET_I, grid=None) -> complex:
        """``1 - lambda sum_a I_a(E)``; its zeros are the poles of ``T``."""
        return complex(1.0 - self.strength * self.loop_integral(E, sheet, grid).sum())

    def tau(self, E, sheet=SHEET_I, grid=None) -> complex:
        return self.strength / self.determinant(E, sheet, grid)

    def t_closed(self, k, kp, E, sheet=SHEET_I, grid=None) -> np.ndarray:
        """Separable solution ``T_ab(k, k') = f_a(k) f_b(k') tau(E)``."""
        tau = self.tau(E, sheet, grid)
        return self.form_values(np.asarray(k, dtype=complex))[:, None] * \
            self.form_values(np.asarray(kp, dtype=complex))[None, :] * tau

    def distance_to_nonanalyticity(self, E: complex) -> float:
        """Distance from ``E`` to the right-hand cut and to form-factor singularities."""
        d = abs(E.imag) if E.real >= 0 else abs(E)
        for f in self.form_factors:
            for s in f.singularities():
                d = min(d, abs(E - s * s / (2 * self.mu)))
        return d


def first_sheet_momentum(mu: float, E) -> complex:
    """``sqrt(2 mu E)`` with ``Im k >= 0`` (upper lip on the positive axis)."""
    return upper_sqrt(2.0 * mu * complex(E))


def _flag(sheet) -> str:
    if isinstance(sheet, (tuple, list)):
        if len(sheet) != 1:
            raise ConfigurationError("potential scattering has one channel")
        sheet = sheet[0]
    s = str(sheet).upper()
    if s not in (SHEET_I, SHEET_II):
        raise ConfigurationError(f"unknown sheet {sheet!r}")
    return s


def yamaguchi_loop_closed(beta: float, mu: float, E, sheet=SHEET_I) -> complex:
    """Closed-form ``I(E) = mu / (4 pi beta (beta + kappa)^2)`` for the S-wave Yamaguchi factor."""
    kappa = -1j * first_sheet_momentum(mu, E)
    if _flag(sheet) == SHEET_II:
        kappa = -kappa
    return mu / (4 * math.pi * beta * (beta + kappa) ** 2)


def yamaguchi_strength_for_binding(beta: float, mu: float, kappa: float) -> float:
    """Strength of the S-wave Yamaguchi potential with a bound state at ``k = i kappa``."""
    return 4 * math.pi * beta * (beta + kappa) ** 2 / mu


def yamaguchi_strength_for_virtual(beta: float, mu: float, kappa: float) -> float:
    """Strength giving a virtual state at ``k = -i kappa`` (``0 < kappa < beta``)."""
    return 4 * math.pi * beta * (beta - kappa) ** 2 / mu


class GridPotential(Potential):
    """Potential given as a vectorised callable ``V(k[:, None], kp[None, :])``.

    The callable returns ``(len k, len kp)`` for one wave or
    ``(n_waves, n_waves, len k, len kp)`` for coupled waves.
    """

    def __init__(self, func: Callable, mu: float, waves: Sequence[str] = ("w0",), scale: float = GRID_SCALE):
        if mu <= 0:
            raise ConfigurationError("reduced mass must be positive")
        self.func, self.mu, self.waves, self.scale = func, float(mu), tuple(waves), float(scale)

    @property
    def default_grid_scale(self) -> float:
        return self.scale

    def matrix(self, k, kp):
        k, kp = np.asarray(k, dtype=float), np.asarray(kp, dtype=float)
        v = np.asarray(self.func(k[:, None], kp[None, :]))
        if v.ndim == 2:
            v = v[None, None]
        if v.shape != (self.n_waves, self.n_waves, k.size, kp.size):
            raise ConfigurationError(f"potential callable returned shape {v.shape}")
        return v


def yukawa_potential(strength: float, mass: float, mu: float) -> GridPotential:
    """S-wave projection of an attractive Yukawa ``strength * exp(-mass r)/r``.

    ``V(k, k') = (pi strength / (k k')) ln(((k+k')^2 + m^2) / ((k-k')^2 + m^2))``.
    """
    m2 = mass * mass

    def v(k, kp):
        return math.pi * strength / (k * kp) * np.log(((k + kp) ** 2 + m2) / ((k - kp) ** 2 + m2))

    return GridPotential(v, mu, ("S",), scale=max(mass, 100.0))


def tabulated_potential(path, mu: float) -> GridPotential:
    """Single-wave potential read from a CSV with columns ``k, kp, V`` (MeV, MeV^-2).

    Values between nodes come from a bicubic spline; outside the table the
    potential is taken as zero and a :class:`CutoffWarning` is issued.
    """
    from scipy.interpolate import RectBivariateSpline

    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"k", "kp", "V"} - set(reader.fieldnames or ())
        if missing:
            raise ConfigurationError(f"potential table lacks columns {sorted(missing)}")
        for r in reader:
            rows.append((float(r["k"]), float(r["kp"]), float(r["V"])))
    if not rows:
        raise ConfigurationError("potential table is empty")
    data = np.array(rows)
    ks, kps = np.unique(data[:, 0]), np.unique(data[:, 1])
    if ks.size * kps.size != len(rows):
        raise ConfigurationError("potential table must be a complete rectangular grid")
    table = np.full((ks.size, kps.size), np.nan)
    table[np.searchsorted(ks, data[:, 0]), np.searchsorted(kps, data[:, 1])] = data[:, 2]
    if not np.allclose(ks, kps) or not np.allclose(table, table.T, rtol=1e-10, atol=0):
        raise ConfigurationError("tabulated potential must be symmetric in (k, kp)")
    order = min(3, ks.size - 1)
    spline = RectBivariateSpline(ks, kps, table, kx=order, ky=order)
    kmax = ks[-1]

    def v(k, kp):
        kk, kkp = np.broadcast_arrays(k, kp)
        out = spline.ev(kk, kkp)
        outside = (kk > kmax) | (kkp > kmax) | (kk < ks[0]) | (kkp < ks[0])
        if np.any(outside & ((kk > kmax) | (kkp > kmax))):
            warnings.warn("momentum grid extends beyond the tabulated potential; "
                          "V set to zero there", CutoffWarning, stacklevel=3)
        return np.where(outside, 0.0, out)

    return GridPotential(v, mu, ("S",), scale=min(GRID_SCALE, 0.5 * kmax))


# ---------------------------------------------------------------- Nystrom


def _propagator(mu: float, E: complex, k: np.ndarray) -> np.ndarray:
    return 1.0 / (k * k / (2 * mu) - E)


@dataclass
class HalfOffShellT:
    """``T_ab(k_i, k_j; E)`` on the solver nodes (on-shell node appended for real E > 0)."""

    E: complex
    nodes: np.ndarray
    values: np.ndarray
    on_shell_index: int | None

    def on_shell(self) -> np.ndarray:
        if self.on_shell_index is None:
            raise ConfigurationError("no on-shell point below threshold")
        j = self.on_shell_index
        return self.values[:, :, j, j]


def _nystrom_system(potential: Potential, E: complex, grid: MomentumGrid):
    """Nodes, potential matrix and propagator weights ``D`` (flattened by wave)."""
    mu = potential.mu
    on_shell = isinstance(E, (int, float)) or (complex(E).imag == 0 and complex(E).real > 0)
    E = complex(E)
    k = grid.nodes
    if on_shell and E.real > 0:
        k0 = math.sqrt(2 * mu * E.real)
        nodes = np.append(k, k0)
        d = grid.weights * k * k * 2 * mu / (k * k - k0 * k0) / TWO_PI2
        d0 = (-2 * mu * k0 * k0 * np.sum(grid.weights / (k * k - k0 * k0)) + 1j * math.pi * mu * k0) / TWO_PI2
        D = np.append(d, d0).astype(complex)
        idx = k.size
    else:
        nodes = k
        D = (grid.measure * _propagator(mu, E, k)).astype(complex)
        idx = None
    V = potential.matrix(nodes, nodes)
    nw, M = potential.n_waves, nodes.size
    Vf = V.transpose(0, 2, 1, 3).reshape(nw * M, nw * M)
    Df = np.tile(D, nw)
    return nodes, Vf, Df, idx


def solve_T(potential: Potential, E, grid: MomentumGrid | None = None) -> HalfOffShellT:
    """Nyström solution of ``T = V + V G T`` at first-sheet energy ``E``.

    Real positive ``E`` is taken with ``+i0`` and handled by principal-value
    subtraction with the on-shell momentum appended to the grid.
    """
    grid = grid or make_grid(DEFAULT_NODES, potential.default_grid_scale)
    nodes, Vf, Df, idx = _nystrom_system(potential, E, grid)
    A = np.eye(Vf.shape[0]) - Vf * Df[None, :]
    Tf = np.linalg.solve(A, Vf)
    nw, M = potential.n_waves, nodes.size
    T = Tf.reshape(nw, M, nw, M).transpose(0, 2, 1, 3)
    return HalfOffShellT(complex(E), nodes, T, idx)


def t_element(potential: Potential, k: float, kp: float, E, grid: MomentumGrid | None = None) -> np.ndarray:
    """``T_ab(k, k'; E)`` at arbitrary momenta via Nyström interpolation."""
    grid = grid or make_grid(DEFAULT_NODES, potential.default_grid_scale)
    nodes, Vf, Df, _ = _nystrom_system(potential, E, grid)
    nw, M = potential.n_waves, nodes.size
    A = np.eye(nw * M) - Vf * Df[None, :]
    vcol = potential.matrix(nodes, np.array([kp])).transpose(0, 2, 1, 3).reshape(nw * M, nw)
    Tcol = np.linalg.solve(A, vcol)
    vrow = potential.matrix(np.array([k]), nodes).transpose(0, 2, 1, 3).reshape(nw, nw * M)
    vkk = potential.matrix(np.array([k]), np.array([kp]))[:, :, 0, 0]
    return vkk + vrow @ (Df[:, None] * Tcol)


def t_element_converged(potential: Potential, k: float, kp: float, E, grid: MomentumGrid | None = None,
                        rtol: float = 1e-8) -> np.ndarray:
    """:func:`t_element` checked against a grid with twice the nodes."""
    grid = grid or make_grid(DEFAULT_NODES, potential.default_grid_scale)
    a = t_element(potential, k, kp, E, grid)
    b = t_element(potential, k, kp, E, grid.refined())
    err = np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
    if err > rtol:
        raise ResolutionError(f"T changed by {err:.2e} (relative) under N -> 2N")
    return b


def s_matrix(potential: Potential, E: float, grid: MomentumGrid | None = None) -> np.ndarray:
    """On-shell ``S_ab = delta_ab + i mu k T_ab / pi`` at real ``E > 0``."""
    if E <= 0:
        raise ConfigurationError("S matrix requires E above threshold")
    t = solve_T(potential, float(E), grid).on_shell()
    k0 = math.sqrt(2 * potential.mu * E)
    return np.eye(potential.n_waves) + 1j * potential.mu * k0 * t / math.pi


# ---------------------------------------------------------- bound states


@dataclass
class CouplingFunction:
    """Vertex function ``g_a(k)`` with ``T ~ -g(k) g(k')/(E - E_pole)``."""

    E: complex
    nodes: np.ndarray
    values: np.ndarray
    on_shell: np.ndarray
    waves: tuple[str, ...]
    evaluate: Callable[[np.ndarray], np.ndarray]

    def __call__(self, k) -> np.ndarray:
        return self.evaluate(np.atleast_1d(k))


@dataclass
class PoleState:
    E: complex
    sheet: str
    coupling: CouplingFunction
    normalization: complex

    @property
    def point(self) -> SheetedPoint:
        return SheetedPoint(self.E, (self.sheet,))

    @property
    def kappa(self) -> complex:
        """Binding momentum ``-i k`` at the pole (positive for bound states)."""
        k = first_sheet_momentum(self.coupling_mu, self.E)
        return -1j * (k if self.sheet == SHEET_I else -k)

    coupling_mu: float = 0.0


def _contour_residue(func: Callable[[complex], complex], z0: complex, radius: float, n: int = 64) -> complex:
    acc = 0.0
    for j in range(n):
        e = cmath.exp(2j * math.pi * (j + 0.5) / n)
        acc += func(z0 + radius * e) * e
    return acc * radius / n


def _scan_roots(h: Callable[[float], float], lo: float, hi: float, n: int = 200) -> list[tuple[float, float]]:
    xs = -np.geomspace(-lo, -hi, n) if hi < 0 else np.linspace(lo, hi, n)
    xs = np.sort(xs)
    vals = [h(x) for x in xs]
    return [(xs[i], xs[i + 1]) for i in range(n - 1) if np.sign(vals[i]) != np.sign(vals[i + 1])]


def _window(potential: Potential, window):
    if window is None:
        top = potential.default_grid_scale
        window = (-10 * top * top / potential.mu, -1e-9 * top * top / potential.mu)
    lo, hi = map(float, window)
    if not lo < hi < 0:
        raise ConfigurationError("bound-state window must lie below threshold")
    return lo, hi


def bound_state(potential: Potential, window: tuple[float, float] | None = None,
                grid: MomentumGrid | None = None, xtol: float = 1e-13) -> PoleState:
    """Deepest bound state in ``window`` with its normalised vertex function."""
    if isinstance(potential, SeparablePotential):
        return _bound_state_separable(potential, window, grid, xtol)
    return _bound_state_grid(potential, window, grid, xtol)


def _bound_state_separable(pot, window, grid, xtol):
    grid = grid or pot.default_grid()
    lo, hi = _window(pot, window)

    def h(E):
        return pot.determinant(E, SHEET_I, grid).real

    brackets = _scan_roots(h, lo, hi)
    if not brackets:
        raise SearchFailedError(f"no bound state between {lo:.6g} and {hi:.6g} MeV")
    a, b = brackets[0]
    E_B = brentq(h, a, b, xtol=xtol * max(abs(a), 1.0), rtol=1e-15)
    return _separable_state(pot, complex(E_B), SHEET_I, grid)


def _separable_state(pot, E, sheet, grid):
    """Pole state with ``c^2 = -Res tau`` from a contour in the energy plane."""
    radius = 0.1 * pot.distance_to_nonanalyticity(E)
    res = _contour_residue(lambda z: pot.tau(z, sheet, grid), E, radius)
    c = cmath.sqrt(-res)
    kI = first_sheet_momentum(pot.mu, E)
    k_pole = kI if sheet == SHEET_I else -kI

    def evaluate(k):
        return c * pot.form_values(np.asarray(k, dtype=complex))

    nodes = grid.nodes
    coup = CouplingFunction(E, nodes, evaluate(nodes), evaluate(np.array([k_pole]))[:, 0], pot.waves, evaluate)
    return PoleState(E, sheet, coup, -res, pot.mu)


def _bound_state_grid(pot, window, grid, xtol):
    grid = grid or make_grid(DEFAULT_NODES, pot.default_grid_scale)
    lo, hi = _window(pot, window)
    nw = pot.n_waves
    k = grid.nodes
    V = pot.matrix(k, k).transpose(0, 2, 1, 3).reshape(nw * k.size, nw * k.size).real

    def sym(E):
        d = np.sqrt(np.tile(grid.measure * _propagator(pot.mu, E, k).real, nw))
        return d[:, None] * V * d[None, :], d

    def h(E):
        return np.linalg.eigvalsh(sym(E)[0])[-1] - 1.0

    brackets = _scan_roots(h, lo, hi)
    if not brackets:
        raise SearchFailedError(f"no bound state between {lo:.6g} and {hi:.6g} MeV")
    a, b = brackets[0]
    E_B = brentq(h, a, b, xtol=xtol * max(abs(a), 1.0), rtol=1e-15)
    Ks, d = sym(E_B)
    _, vecs = np.linalg.eigh(Ks)
    gam = vecs[:, -1] / d
    # normalisation: T ~ -Gamma Gamma^T / (Gamma^T D' Gamma (E - E_B))
    dprime = np.tile(grid.measure * _propagator(pot.mu, E_B, k) ** 2, nw)
    gam = gam / math.sqrt(gam @ (dprime * gam))
    if gam[np.argmax(np.abs(gam))] < 0:
        gam = -gam
    D = np.tile(grid.measure * _propagator(pot.mu, E_B, k), nw)
    src = D * gam

    def evaluate(q):
        q = np.asarray(q, dtype=float)
        Vq = pot.matrix(q, k).transpose(0, 2, 1, 3).reshape(nw * q.size, nw * k.size)
        return (Vq @ src).reshape(nw, q.size)

    values = gam.reshape(nw, k.size)
    coup = CouplingFunction(complex(E_B), k, values, np.full(nw, np.nan), pot.waves, evaluate)
    return PoleState(complex(E_B), SHEET_I, coup, 1.0, pot.mu)


def coupling_residual(potential: Potential, state: PoleState, grid: MomentumGrid | None = None) -> float:
    """``max |g - int V G g| / max |g|`` on an independent grid (bound states)."""
    grid = grid or make_grid(2 * DEFAULT_NODES, potential.default_grid_scale)
    k = grid.nodes
    g = state.coupling(k)
    D = grid.measure * _propagator(potential.mu, state.E.real, k)
    V = potential.matrix(k, k)
    rhs = np.einsum("abij,j,bj->ai", V, D, g)
    return float(np.max(np.abs(rhs - g)) / np.max(np.abs(g)))


# -------------------------------------------------------- compositeness


@dataclass(frozen=True)
class WaveCompositeness:
    waves: tuple[str, ...]
    X_wave: np.ndarray
    boundary: np.ndarray

    @property
    def X(self) -> complex:
        return complex(np.sum(self.X_wave))


def X_bound(potential: Potential, state: PoleState, grid: MomentumGrid | None = None,
            tail_tol: float = 1e-10) -> WaveCompositeness:
    """Per-wave ``int dm g_a^2 / (k^2/2mu - E_B)^2`` on an independent grid."""
    if state.sheet != SHEET_I or state.E.imag != 0 or state.E.real >= 0:
        raise ConfigurationError("X_bound needs a first-sheet bound state")
    grid = grid or make_grid(2 * DEFAULT_NODES + 1, potential.default_grid_scale)
    k = grid.nodes
    g = state.coupling(k)
    integrand = grid.measure * np.abs(g) ** 2 * _propagator(potential.mu, state.E.real, k) ** 2
    X = integrand.sum(axis=1)
    tail = np.max(integrand[:, -1]) / max(np.max(np.abs(X)), 1e-300)
    if tail > tail_tol:
        warnings.warn(f"compositeness integrand not decayed at the grid edge (relative {tail:.1e})",
                      CutoffWarning, stacklevel=2)
    return WaveCompositeness(potential.waves, X.astype(complex), np.zeros(potential.n_waves, dtype=complex))


def find_separable_pole(potential: SeparablePotential, start: complex, sheet=SHEET_II,
                        grid: MomentumGrid | None = None, xtol: float = 1e-12) -> PoleState:
    """Zero of ``1 - lambda I(E)`` on ``sheet`` with its normalised couplings."""
    sheet = _flag(sheet)
    grid = grid or potential.default_grid()
    scale = potential.form_factors[0].scale ** 2 / (2 * potential.mu)
    res = find_root(lambda z: potential.determinant(z, sheet, grid), complex(start), scale=scale,
                    xtol=xtol, ftol=1e-10)
    E = res.z
    if abs(E.imag) <= 1e-12 * max(abs(E), scale):
        E = complex(E.real, 0.0)
    return _separable_state(potential, E, sheet, grid)


def X_resonance(potential: SeparablePotential, state: PoleState, grid: MomentumGrid | None = None,
                include_boundary: bool = True) -> WaveCompositeness:
    """Per-wave compositeness of a separable-potential pole on either sheet.

    ``X_a = c^2 [ int_ray dm f_a^2/(k^2/2mu - E_R)^2 + boundary_a ]`` where the
    boundary term ``-(i mu^2/(pi k_I)) d(k f_a^2)/dk`` at the first-sheet
    momentum appears on the second sheet only.
    """
    if not isinstance(potential, SeparablePotential):
        raise ContinuationBlockedError("second-sheet compositeness needs a separable potential")
    grid = grid or make_grid(2 * DEFAULT_NODES + 1, potential.default_grid_scale)
    E = state.E
    c2 = state.normalization
    integral = potential.loop_integral(E, SHEET_I, grid, derivative=True)
    if state.sheet == SHEET_II:
        boundary = potential.sheet_two_correction(E, derivative=True)
    else:
        boundary = np.zeros(potential.n_waves, dtype=complex)
    total = integral + (boundary if include_boundary else 0.0)
    return WaveCompositeness(potential.waves, c2 * total, c2 * boundary)
