"""Complex pole search on a chosen Riemann sheet and residue extraction.

Couplings follow the sign convention ``T_ij -> -g_i g_j / (z - z_R)``: for a
bound state below threshold ``g_i^2 > 0``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .amplitudes import AmplitudeModel
from .core import SHEET_II, SheetedPoint, normalize_sheet
from .errors import (ContourInvalidError, MultiPoleContaminationWarning, PoleProximityError,
                     SearchFailedError)

DEFAULT_XTOL = 1e-10
DEFAULT_FTOL = 1e-8
CONTOUR_POINTS = 64
CONTOUR_FRACTION = 0.1


@dataclass(frozen=True)
class PoleCandidate:
    location: SheetedPoint
    det_residual: float
    newton_steps: int
    basin_start: complex
    method: str = "newton"

    @property
    def value(self) -> complex:
        return self.location.value


@dataclass
class CouplingSet:
    """Couplings with ``g_i g_j = -Res T_ij``; ``residue`` is the raw ``Res T``."""

    g: np.ndarray
    residue: np.ndarray
    method_tag: str
    rank1_residual: float
    radius: float | None = None

    def phase_transformed(self, phases) -> "CouplingSet":
        """Couplings after ``S -> O S O^T`` with ``O = diag(exp(i phi))``."""
        f = np.exp(1j * np.asarray(phases, dtype=float))
        return CouplingSet(self.g * f, self.residue * np.outer(f, f), self.method_tag,
                           self.rank1_residual, self.radius)


# ------------------------------------------------------------ root finding


@dataclass
class RootResult:
    z: complex
    f: complex
    steps: int
    method: str
    trace: list = field(default_factory=list)


def _muller(f, z0, z1, z2, xtol, max_iter, guard):
    f0, f1, f2 = f(z0), f(z1), f(z2)
    trace = []
    for it in range(1, max_iter + 1):
        h1, h2 = z1 - z0, z2 - z1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            break
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * f2 * a)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            break
        dz = -2 * f2 / den
        z3 = guard(z2, dz)
        f3 = f(z3)
        trace.append((z3, abs(f3)))
        z0, z1, z2, f0, f1, f2 = z1, z2, z3, f1, f2, f3
        if abs(z2 - z1) <= xtol(z2):
            return RootResult(z2, f2, it, "muller", trace)
    raise SearchFailedError("Muller iteration did not converge", trace)


def find_root(f: Callable[[complex], complex], start: complex, *, scale: float = 1.0,
              xtol: float = DEFAULT_XTOL, ftol: float = DEFAULT_FTOL, max_iter: int = 100,
              half_plane: int = 0) -> RootResult:
    """Newton iteration on an analytic ``f`` with Muller fallback on stagnation.

    ``half_plane`` (+1/-1) keeps iterates strictly in the upper/lower
    half-plane by step halving; used on unphysical sheets where the real axis
    carries a cut.
    """
    start = complex(start)

    def tol(z):
        return xtol * max(abs(z), scale)

    def guard(z, dz):
        znew = z + dz
        if half_plane:
            for _ in range(60):
                if znew.imag * half_plane > 0:
                    break
                dz *= 0.5
                znew = z + dz
        return znew

    f_start = f(start)
    fscale = max(abs(f_start), 1e-300)
    z, fz = start, f_start
    trace = [(z, abs(fz))]
    stagnant = 0
    best = abs(fz)
    for it in range(1, max_iter + 1):
        h = 1e-7 * max(abs(z), scale)
        if half_plane and abs(z.imag) < 10 * h:
            h = abs(z.imag) / 10 or h
        dfz = (f(z + h) - f(z - h)) / (2 * h)
        if dfz == 0 or not np.isfinite(dfz):
            stagnant = 99
        else:
            znew = guard(z, -fz / dfz)
            fnew = f(znew)
            trace.append((znew, abs(fnew)))
            step = abs(znew - z)
            z, fz = znew, fnew
            if step <= tol(z) and abs(fz) <= ftol * fscale:
                return RootResult(z, fz, it, "newton", trace)
            if abs(fz) < 0.9 * best:
                best = abs(fz)
                stagnant = 0
            else:
                stagnant += 1
        if stagnant >= 5:
            d = 1e-3 * max(abs(z), scale)
            if half_plane and abs(z.imag) < 2 * d:
                d = abs(z.imag) / 2 or d
            res = _muller(f, z - d, z + d, z, tol, max_iter, guard)
            res.steps += it
            res.trace = trace + res.trace
            if abs(res.f) > ftol * fscale:
                raise SearchFailedError(f"Muller converged to a non-root (|f| = {abs(res.f):.3e})", res.trace)
            return res
    raise SearchFailedError(f"no convergence in {max_iter} iterations from {start}", trace)


def find_pole(model: AmplitudeModel, sheet, start: complex, *, xtol: float = DEFAULT_XTOL,
              ftol: float = DEFAULT_FTOL, max_iter: int = 100,
              keep_half_plane: bool = True) -> PoleCandidate:
    """Zero of ``det(1 + K G)`` (equivalently of ``det T^-1``) on ``sheet``."""
    sheet = normalize_sheet(sheet, model.n_channels)
    start = complex(start)
    half = 0
    if keep_half_plane and SHEET_II in sheet and start.imag != 0:
        half = 1 if start.imag > 0 else -1

    def f(z):
        return model.pole_function(SheetedPoint(z, sheet))

    res = find_root(f, start, scale=model.scale, xtol=xtol, ftol=ftol, max_iter=max_iter,
                    half_plane=half)
    z = res.z
    for th in model.thresholds:
        if abs(z - th) <= 1e-6 * model.scale:
            raise SearchFailedError(f"search converged to the branch point {th}", res.trace)
    loc = SheetedPoint(z, sheet)
    return PoleCandidate(loc, abs(res.f), res.steps, start, res.method)


def count_zeros(model: AmplitudeModel, sheet, center: complex, radius: float, n: int = 512) -> int:
    """Winding number of the pole function on a circle (diagnostic only)."""
    sheet = normalize_sheet(sheet, model.n_channels)
    th = np.linspace(0.0, 2 * math.pi, n + 1)
    vals = np.array([model.pole_function(SheetedPoint(center + radius * np.exp(1j * t), sheet)) for t in th])
    dphi = np.diff(np.unwrap(np.angle(vals)))
    return int(round(dphi.sum() / (2 * math.pi)))


# ------------------------------------------------------------ residues


def default_radius(model: AmplitudeModel, pole: PoleCandidate) -> float:
    return CONTOUR_FRACTION * model.distance_to_nonanalyticity(pole.location)


def _check_radius(model, pole, radius):
    dist = model.distance_to_nonanalyticity(pole.location)
    if radius is None:
        radius = CONTOUR_FRACTION * dist
    if not (0 < radius < dist):
        raise ContourInvalidError(f"contour radius {radius:.4g} must be below the distance {dist:.4g} "
                                  "to the nearest cut or branch point")
    return radius


def residue_contour(model: AmplitudeModel, pole: PoleCandidate, radius: float | None = None,
                    n_points: int = CONTOUR_POINTS) -> np.ndarray:
    """``(1/2 pi i) \\oint T dz`` with the trapezoidal rule on a circle."""
    radius = _check_radius(model, pole, radius)
    z0 = pole.value
    acc = np.zeros((model.n_channels, model.n_channels), dtype=complex)
    for j in range(n_points):
        e = cmath.exp(2j * math.pi * (j + 0.5) / n_points)
        acc += model.T_matrix(pole.location.moved(z0 + radius * e)) * e
    return acc * radius / n_points


def residue_pole_factor(model: AmplitudeModel, pole: PoleCandidate, radius: float | None = None,
                        levels: int = 5) -> np.ndarray:
    """``lim (z - z_R) T(z)`` by symmetric sampling and Richardson extrapolation in ``h^2``."""
    radius = _check_radius(model, pole, radius)
    z0 = pole.value
    h0 = 0.5 * radius
    table = []
    for lv in range(levels):
        h = h0 / 2 ** lv
        tp = model.T_matrix(pole.location.moved(z0 + h))
        tm = model.T_matrix(pole.location.moved(z0 - h))
        row = [0.5 * h * (tp - tm)]
        for m in range(1, lv + 1):
            f = 4 ** m
            row.append((f * row[m - 1] - table[lv - 1][m - 1]) / (f - 1))
        table.append(row)
    return table[-1][-1]


def residue_finite_difference(model: AmplitudeModel, pole: PoleCandidate,
                              radius: float | None = None) -> np.ndarray:
    """Residue from the null vector of ``1 + G K`` and finite-difference derivatives.

    With ``(1 + G K) w = 0`` and ``u = K w``:
    ``Res T = u u^T / (u^T G' u - w^T K' w)``.
    """
    radius = _check_radius(model, pole, radius)
    z0 = pole.value
    loc = pole.location
    K = model.kernel(z0)
    G = model.loop(loc)
    B = np.eye(model.n_channels) + G[:, None] * K
    _, _, vh = np.linalg.svd(B)
    w = vh[-1].conj()
    u = K @ w
    h = 1e-4 * radius
    dG = (model.loop(loc.moved(z0 + h)) - model.loop(loc.moved(z0 - h))) / (2 * h)
    dK = (model.kernel(z0 + h) - model.kernel(z0 - h)) / (2 * h)
    den = np.sum(dG * u * u) - w @ dK @ w
    return np.outer(u, u) / den


_METHODS = {
    "contour": residue_contour,
    "pole-factor": residue_pole_factor,
    "finite-difference": residue_finite_difference,
}


def factorize_residue(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Rank-one factorisation ``g g^T = -R`` through the largest diagonal entry."""
    R = np.asarray(R, dtype=complex)
    i = int(np.argmax(np.abs(np.diag(R))))
    g = np.empty(R.shape[0], dtype=complex)
    gi = cmath.sqrt(-R[i, i])
    if gi == 0:
        return np.zeros(R.shape[0], dtype=complex), 0.0
    g[:] = -R[i, :] / gi
    g[i] = gi
    resid = float(np.max(np.abs(np.outer(g, g) + R)) / np.max(np.abs(R)))
    return g, resid


def extract_couplings(model: AmplitudeModel, pole: PoleCandidate, method: str = "contour",
                      radius: float | None = None, rank1_tol: float = 1e-6) -> CouplingSet:
    """Residue matrix at ``pole`` and its rank-one couplings."""
    try:
        fn = _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown residue method {method!r}; choose from {sorted(_METHODS)}") from None
    radius = _check_radius(model, pole, radius)
    try:
        R = fn(model, pole, radius)
    except PoleProximityError as exc:
        raise ContourInvalidError(f"residue evaluation hit another singularity: {exc}") from exc
    g, resid = factorize_residue(R)
    if resid > rank1_tol:
        warnings.warn(f"residue matrix is not rank one (residual {resid:.2e}); "
                      "another pole may be inside the contour", MultiPoleContaminationWarning)
    return CouplingSet(g, R, method, resid, radius)


def partial_widths(model: AmplitudeModel, pole: PoleCandidate, couplings: CouplingSet) -> np.ndarray:
    """Narrow-resonance partial widths from coupling moduli.

    Relativistic: ``Gamma_i = |g_i|^2 p_i(M_R) / (8 pi M_R^2)``.
    Nonrelativistic (``S = 1 + 2ikT``): ``Gamma_i = 2 k_i(M_R) |g_i|^2``.
    Closed channels get zero.
    """
    from .core import RELATIVISTIC
    M = model.sqrt_s(pole.value).real
    z_real = M * M if model.mode == RELATIVISTIC else M - model.m_th
    out = np.zeros(model.n_channels)
    open_ = model.open_channels(z_real)
    rho = model.phase_space(model.point(z_real)).real
    g2 = np.abs(couplings.g) ** 2
    for i in open_:
        if model.mode == RELATIVISTIC:
            p = rho[i] * 8 * math.pi * M
            out[i] = g2[i] * p / (8 * math.pi * M * M)
        else:
            out[i] = 2 * rho[i] * g2[i]
    return out
