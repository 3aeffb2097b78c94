"""Two-channel width saturation by partial compositeness.

A resonance of mass ``M_R`` and width ``Gamma`` sitting close to the
threshold of channel 2 (momentum ``k_R`` at the pole, reduced mass ``mu``)
and decaying into the lower channel 1 obeys

    X = X_1 + X_2,    Gamma = Gamma_1 + Gamma_2,

    Gamma_1 = 2 X_1 k(M_R) |k_R| / mu,
    Gamma_2 = X_2 |k_R| M_R^2 / (pi mu)
              * int_{M_th}^inf dW k(W)/W^2 Gamma / ((M_R - W)^2 + Gamma^2/4).

``k(W)`` is the channel-1 momentum, nonrelativistic by default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from scipy.integrate import quad

from .errors import ConfigurationError, DegenerateInputError, ResolutionError

DEFAULT_EPSILON = 0.05


def nonrelativistic_momentum(mu: float, threshold: float) -> Callable[[float], float]:
    """``k(W) = sqrt(2 mu (W - threshold))``, zero below threshold."""
    def k(W):
        return math.sqrt(2.0 * mu * (W - threshold)) if W > threshold else 0.0
    return k


def relativistic_momentum(m1: float, m2: float) -> Callable[[float], float]:
    """Two-body CM momentum at total energy ``W``."""
    lo, hi = (m1 - m2) ** 2, (m1 + m2) ** 2

    def k(W):
        s = W * W
        if s <= hi:
            return 0.0
        return math.sqrt((s - hi) * (s - lo)) / (2.0 * W)
    return k


@dataclass
class SaturationSystem:
    """Inputs of the saturation constraint.

    ``k_threshold`` is where ``k(W)`` opens; by default the channel-1
    momentum is nonrelativistic with reduced mass ``mu1`` (default ``mu``)
    and threshold ``k_threshold`` (default ``M_th``).
    """

    M_R: float
    Gamma: float
    k_R_abs: float
    mu: float
    M_th: float
    mu1: float | None = None
    k_threshold: float | None = None
    k_func: Callable[[float], float] | None = None
    X: float | None = None
    branching_ratio: float | None = None
    epsilon: float = DEFAULT_EPSILON
    cutoff: float | None = None
    rtol: float = 1e-10

    def __post_init__(self):
        if self.Gamma <= 0:
            raise ConfigurationError("width must be positive")
        if self.mu <= 0 or self.M_R <= 0 or self.k_R_abs < 0:
            raise ConfigurationError("need M_R > 0, mu > 0 and |k_R| >= 0")
        if self.k_threshold is None:
            self.k_threshold = self.M_th
        if self.k_func is None:
            self.k_func = nonrelativistic_momentum(self.mu1 or self.mu, self.k_threshold)

    def closure(self) -> str:
        given = [n for n, v in (("X", self.X), ("branching_ratio", self.branching_ratio)) if v is not None]
        if len(given) != 1:
            raise ConfigurationError("give exactly one of total X or the branching ratio Gamma_1/Gamma")
        return given[0]


def gamma1(X1: float, mu: float, k_MR: float, k_R_abs: float) -> float:
    """``Gamma_1 = 2 X_1 k(M_R) |k_R| / mu``."""
    return 2.0 * X1 * k_MR * k_R_abs / mu


def gamma2_kernel(system: SaturationSystem) -> float:
    """``Gamma_2 / X_2`` by quadrature in ``theta`` with ``W = M_R + (Gamma/2) tan(theta)``.

    The Lorentzian times ``dW`` becomes ``2 d(theta)``.
    """
    M, G = system.M_R, system.Gamma
    k = system.k_func

    def W(t):
        return M + 0.5 * G * math.tan(t)

    t_lo = math.atan(2.0 * (system.k_threshold - M) / G)
    t_hi = math.atan(2.0 * (system.cutoff - M) / G) if system.cutoff is not None else 0.5 * math.pi

    def integrand(t):
        w = W(t)
        return 2.0 * k(w) / (w * w) if w > 0 else 0.0

    t_peak = 0.0 if t_lo < 0.0 < t_hi else None
    val, err = quad(integrand, t_lo, t_hi, epsabs=0.0, epsrel=system.rtol, limit=400,
                    points=[t_peak] if t_peak is not None else None)
    if not math.isfinite(val) or err > 1e3 * system.rtol * max(abs(val), 1e-300):
        raise ResolutionError(f"width integral did not converge (estimate {val:.6g} +- {err:.2g})")
    return system.k_R_abs * M * M / (math.pi * system.mu) * val


def gamma2(X2: float, system: SaturationSystem) -> float:
    """``Gamma_2`` for partial compositeness ``X2``."""
    return X2 * gamma2_kernel(system)


@dataclass
class SaturationResult:
    X1: float
    X2: float
    Gamma1: float
    Gamma2: float
    feasible: bool
    closure: str
    kernels: tuple[float, float]
    frontier: tuple[float, float] | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "X1": self.X1, "X2": self.X2, "Gamma1": self.Gamma1, "Gamma2": self.Gamma2,
            "feasible": self.feasible, "closure": self.closure,
            "kernels": list(self.kernels), "frontier": list(self.frontier) if self.frontier else None,
            "notes": list(self.notes),
        }


def solve_saturation(system: SaturationSystem) -> SaturationResult:
    """Solve ``{X_1 + X_2 = X, Gamma_1 + Gamma_2 = Gamma}`` (or the branching closure).

    Solutions with any ``X_i`` outside ``[0, 1 + epsilon]`` are reported as
    infeasible together with the width range attainable at the given ``X``.
    """
    closure = system.closure()
    a1 = gamma1(1.0, system.mu, system.k_func(system.M_R), system.k_R_abs)
    a2 = gamma2_kernel(system)
    G = system.Gamma
    notes = []
    frontier = None
    if closure == "X":
        X = float(system.X)
        frontier = (min(a1, a2) * X, max(a1, a2) * X)
        if abs(a1 - a2) <= 1e-12 * max(a1, a2):
            if abs(G - a1 * X) > 1e-8 * G:
                return SaturationResult(math.nan, math.nan, math.nan, math.nan, False, closure,
                                        (a1, a2), frontier, ["equal kernels: width fixed by X alone"])
            X1 = X2 = 0.5 * X
            notes.append("equal kernels: split is undetermined, symmetric choice")
        else:
            X1 = (G - a2 * X) / (a1 - a2)
            X2 = X - X1
    else:
        b = float(system.branching_ratio)
        if not 0.0 <= b <= 1.0:
            raise ConfigurationError("branching ratio must lie in [0, 1]")
        if a1 == 0 or a2 == 0:
            raise DegenerateInputError("a channel has vanishing width kernel")
        X1, X2 = b * G / a1, (1.0 - b) * G / a2
    lo, hi = -1e-12, 1.0 + system.epsilon
    feasible = lo <= X1 <= hi and lo <= X2 <= hi
    if not feasible:
        notes.append(f"X_i outside the admissible band [0, {hi:g}]")
    return SaturationResult(X1, X2, a1 * X1, a2 * X2, feasible, closure, (a1, a2), frontier, notes)
