"""Partial compositeness, elementariness and effective-range diagnostics.

With couplings normalised as ``T -> -g g^T / (z - z_R)`` the double-pole
residue of ``T (dT^-1/dz) T`` yields

    1 = sum_i X_i + Z,   X_i = -g_i^2 dG_i/dz,   Z = g^T G (dK/dz) G g,

all evaluated at the pole with the sheet-consistent loop function.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .amplitudes import AmplitudeModel, CDDModel, EREModel
from .core import SHEET_I, SHEET_II, SheetedPoint
from .errors import ConfigurationError, DegenerateInputError
from .poles import CouplingSet, PoleCandidate

DEFAULT_CDD_MULTIPLE = 10.0


@dataclass(frozen=True)
class PoleReport:
    pole: SheetedPoint
    couplings: CouplingSet
    X_i: np.ndarray
    X: complex
    Z: complex | None
    sum_residual: float | None
    X_abs_i: np.ndarray
    phase_transform: np.ndarray
    applicable: bool = True
    applicability_note: str = ""

    @property
    def X_normalized_i(self) -> np.ndarray:
        """``X_i`` after the recorded phase transformation."""
        return self.X_i * np.exp(2j * self.phase_transform)

    def to_dict(self) -> dict:
        def c(v):
            return None if v is None else [float(np.real(v)), float(np.imag(v))]
        return {
            "pole": c(self.pole.value),
            "sheet": list(self.pole.sheet),
            "couplings": [c(g) for g in self.couplings.g],
            "residue_method": self.couplings.method_tag,
            "rank1_residual": self.couplings.rank1_residual,
            "X_i": [c(x) for x in self.X_i],
            "X": c(self.X),
            "Z": c(self.Z),
            "sum_residual": self.sum_residual,
            "X_abs_i": [float(x) for x in self.X_abs_i],
            "phase_transform": [float(p) for p in self.phase_transform],
            "applicable": self.applicable,
            "applicability_note": self.applicability_note,
        }


def applicability(model: AmplitudeModel, pole: SheetedPoint) -> tuple[bool, str]:
    """Whether the pole lies in the region its sheet is continued from.

    A pole on the sheet reached from between thresholds ``n`` and ``n+1``
    (first ``n`` channels on sheet II) is interpreted reliably only when
    ``Re z`` lies in that interval.
    """
    th = np.sort(model.thresholds)
    order = np.argsort(model.thresholds)
    flags = [pole.sheet[i] for i in order]
    n = sum(1 for f in flags if f == SHEET_II)
    if flags != [SHEET_II] * n + [SHEET_I] * (len(flags) - n):
        return False, "sheet is not adjacent to the physical region"
    lo = th[n - 1] if n else -math.inf
    hi = th[n] if n < len(th) else math.inf
    x = pole.value.real
    if lo < x < hi:
        return True, ""
    return False, f"Re z = {x:.6g} outside ({lo:.6g}, {hi:.6g}) connected to this sheet"


def compositeness_sum_rule(model: AmplitudeModel, pole: PoleCandidate | SheetedPoint,
                           couplings: CouplingSet) -> PoleReport:
    """Partial compositeness ``X_i``, elementariness ``Z`` and the sum-rule residual."""
    loc = pole.location if isinstance(pole, PoleCandidate) else pole
    g = np.asarray(couplings.g, dtype=complex)
    dG = model.loop_derivative(loc)
    X_i = -g * g * dG
    X = complex(X_i.sum())
    dK = model.kernel.derivative(loc.value)
    if dK is None:
        Z, resid = None, None
    else:
        Gg = model.loop(loc) * g
        Z = complex(Gg @ dK @ Gg)
        resid = abs(X + Z - 1.0)
    ok, note = applicability(model, loc)
    return PoleReport(loc, couplings, X_i, X, Z, resid, np.abs(X_i),
                      np.zeros(len(g)), ok, note)


def phase_normalize(report: PoleReport) -> PoleReport:
    """Record ``phi_i`` that make every ``X_i e^{2 i phi_i}`` real and non-negative."""
    phi = np.array([-0.5 * cmath.phase(x) if x != 0 else 0.0 for x in report.X_i])
    return replace(report, phase_transform=phi)


def phase_transform_report(report: PoleReport, phases) -> PoleReport:
    """Apply ``S -> O S O`` with ``O = diag(exp(i phases))`` to a report."""
    phases = np.asarray(phases, dtype=float)
    f = np.exp(2j * phases)
    X_i = report.X_i * f
    return replace(report, couplings=report.couplings.phase_transformed(phases), X_i=X_i,
                   X=complex(X_i.sum()), X_abs_i=np.abs(X_i))


class PhaseTransformedModel(AmplitudeModel):
    """``T -> O T O`` for a diagonal phase matrix ``O``; loop functions unchanged."""

    def __init__(self, base: AmplitudeModel, phases):
        self.base = base
        self.phases = np.asarray(phases, dtype=float)
        self.channels = base.channels
        self.kernel = base.kernel
        self.mode = base.mode
        self._o = np.exp(1j * self.phases)

    @property
    def thresholds(self):
        return self.base.thresholds

    @property
    def scale(self):
        return self.base.scale

    def loop(self, point):
        return self.base.loop(point)

    def loop_derivative(self, point):
        return self.base.loop_derivative(point)

    def phase_space(self, point):
        return self.base.phase_space(point)

    def sqrt_s(self, z):
        return self.base.sqrt_s(z)

    def T_matrix(self, point):
        return self._o[:, None] * self.base.T_matrix(point) * self._o[None, :]

    def pole_function(self, point):
        return self.base.pole_function(point)

    def distance_to_nonanalyticity(self, point):
        return self.base.distance_to_nonanalyticity(point)


# -------------------------------------------------------------------- ERE


@dataclass(frozen=True)
class EREParameters:
    a: float
    r: float

    @property
    def r_over_a(self) -> float:
        return self.r / self.a


def _split_k(k_R) -> tuple[float, float]:
    """``(k_r, k_i)`` for ``k_R = k_r - i k_i``."""
    k_R = complex(k_R)
    return k_R.real, -k_R.imag


def ere_from_pole(k_R) -> EREParameters:
    """Scattering length and effective range with a pole pair at ``k_R, -k_R*``.

    ``k_R = k_r - i k_i`` (``k_i > 0`` on the second sheet):
    ``a = -2 k_i / |k_R|^2`` and ``r = -1 / k_i``.
    """
    k_r, k_i = _split_k(k_R)
    if k_i == 0:
        raise DegenerateInputError("pole on the real momentum axis has no ERE resonance form")
    if k_r == 0:
        raise DegenerateInputError("k_r = 0 is a bound or virtual state, not a resonance pair")
    return EREParameters(-2.0 * k_i / (k_r * k_r + k_i * k_i), -1.0 / k_i)


def ere_pole(a: float, r: float) -> complex:
    """Lower-half-plane pole ``k_R`` of ``-1/a + r k^2/2 - i k`` with ``Re k_R >= 0``."""
    if r == 0:
        return complex(0, 1.0 / a) if a else complex("nan")
    disc = cmath.sqrt(-1.0 + 2.0 * r / a)
    roots = [(1j + disc) / r, (1j - disc) / r]
    roots.sort(key=lambda k: (k.imag >= 0, -k.real))
    return roots[0]


@dataclass(frozen=True)
class EREComposite:
    X: complex
    X_abs: float
    X_abs_alt: float
    note: str = ("|X| = k_i/k_r from X = i k_i/k_r, while (2r/a - 1)^-1 = (k_i/k_r)^2; "
                 "both reported")


def ere_compositeness(k_R) -> EREComposite:
    """``X = i k_i/k_r`` for a resonance pole and the alternative ``(2r/a - 1)^-1``."""
    k_r, k_i = _split_k(k_R)
    if k_r == 0:
        raise DegenerateInputError("k_r = 0: X = i k_i / k_r is undefined")
    if k_r < 0 or k_i <= 0:
        raise ConfigurationError("expected a second-sheet resonance pole with k_r > 0, k_i > 0")
    p = ere_from_pole(k_R)
    return EREComposite(1j * k_i / k_r, k_i / k_r, 1.0 / (2.0 * p.r / p.a - 1.0))


# -------------------------------------------------------------------- CDD


@dataclass(frozen=True)
class CDDDiagnostics:
    delta_a: float
    delta_r: float
    cdd_proximity_flag: bool
    limit: str = ""

    @property
    def is_limit(self) -> bool:
        return bool(self.limit)


def large_negative_r_flag(r: float, k_scale: float, multiple: float = DEFAULT_CDD_MULTIPLE) -> bool:
    """True when ``r < 0`` and ``|r|`` exceeds ``multiple / |k|``."""
    return r < 0 and abs(r) * abs(k_scale) > multiple


def cdd_shifts(model: CDDModel, k_scale: float | None = None,
               multiple: float = DEFAULT_CDD_MULTIPLE) -> CDDDiagnostics:
    """Contributions of a CDD pole to ``a`` and ``r``.

    ``delta_a = M_Z/lambda`` and ``delta_r = -lambda/(mu M_Z^2)``.  The range
    scale ``k_scale`` defaults to ``sqrt(2 mu |M_Z|)``.
    """
    lam, M_Z, mu = model.lam, model.M_Z, model.mu
    if lam == 0:
        return CDDDiagnostics(0.0, 0.0, False)
    if M_Z == 0:
        # -lambda / (mu M_Z^2) -> -inf for lambda > 0
        return CDDDiagnostics(0.0, -math.copysign(math.inf, lam), lam > 0, "M_Z -> 0")
    da = M_Z / lam
    dr = -lam / (mu * M_Z * M_Z)
    if k_scale is None:
        k_scale = math.sqrt(2.0 * mu * abs(M_Z))
    return CDDDiagnostics(da, dr, large_negative_r_flag(dr, k_scale, multiple))


def ere_parameters_numeric(model: EREModel | CDDModel, h: float = 1e-3) -> EREParameters:
    """``a`` and ``r`` from ``T^-1 + i k = -1/a + r k^2/2 + ...`` at threshold.

    Evaluated on a small circle in ``E``; ``h`` is the radius in MeV.
    """
    n = 16
    vals = []
    for j in range(n):
        E = h * cmath.exp(2j * math.pi * j / n)
        t = model.T_matrix(model.point(E))[0, 0]
        k = model.momenta(model.point(E))[0]
        vals.append((1.0 / t + 1j * k, E))
    c0 = sum(v for v, _ in vals) / n
    c1 = sum(v / E for v, E in vals) / n
    a = -1.0 / c0.real
    r = c1.real / model.mu
    return EREParameters(a, r)


def shallow_bound_X(g: float, mu: float, kappa: float) -> float:
    """Shallow-bound-state estimate ``X = g^2 mu^2 / (2 pi kappa)``.

    ``g`` is the vertex coupling in potential-scattering normalisation,
    ``kappa > 0`` the binding momentum.
    """
    if kappa <= 0:
        raise ConfigurationError("binding momentum must be positive")
    return g * g * mu * mu / (2.0 * math.pi * kappa)
