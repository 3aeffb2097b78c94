"""JSON analysis configuration: validation, unit normalisation and model building.

Energies and masses are always MeV.  Lengths (scattering length, effective
range) are given in ``fm`` or ``MeV^-1`` and momenta in ``MeV`` or ``fm^-1``
as declared in a ``units`` block; a block may override the top-level units.
"""
from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np

from . import amplitudes as amp
from . import lseq
from .core import HBARC, NONRELATIVISTIC, RELATIVISTIC, Channel, normalize_sheet
from .errors import ConfigurationError
from .loopfn import SubtractionScheme

SCHEMA_VERSION = 1
FAMILIES = ("kmatrix", "ere", "cdd", "lseq")
ANALYSES = ("sum_rule", "ere", "cdd", "lseq", "saturation", "phase_shifts")
RESIDUE_METHODS = ("contour", "pole-factor", "finite-difference")
LENGTH_UNITS = ("fm", "MeV^-1")
MOMENTUM_UNITS = ("MeV", "fm^-1")

DEFAULT_TOLERANCES = {
    "pole": 1e-10,
    "pole_function": 1e-8,
    "rank1": 1e-6,
    "sum_rule": 1e-8,
    "lseq": 1e-5,
    "residue_method": "contour",
}
DEFAULT_UNITS = {"length": "fm", "momentum": "MeV"}


def load(path) -> dict:
    """Read, validate and resolve a configuration file."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    return resolve(raw)


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigurationError(f"{where}: missing required key {key!r}")
    return block[key]


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigurationError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(_number(v, where))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_number(v[0], where), _number(v[1], where))
    raise ConfigurationError(f"{where}: expected a number or [re, im], got {v!r}")


def _units(block: dict, parent: dict) -> dict:
    u = dict(parent)
    u.update(block.get("units", {}) or {})
    if u["length"] not in LENGTH_UNITS:
        raise ConfigurationError(f"unknown length unit {u['length']!r}; use one of {LENGTH_UNITS}")
    if u["momentum"] not in MOMENTUM_UNITS:
        raise ConfigurationError(f"unknown momentum unit {u['momentum']!r}; use one of {MOMENTUM_UNITS}")
    return u


def length_in_inverse_mev(value: float, units: dict) -> float:
    return value / HBARC if units["length"] == "fm" else value


def momentum_in_mev(value: float, units: dict) -> float:
    return value * HBARC if units["momentum"] == "fm^-1" else value


def resolve(raw: dict) -> dict:
    """Fill defaults and check consistency; the result is itself a valid config."""
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    cfg = copy.deepcopy(raw)
    version = cfg.setdefault("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    mode = cfg.setdefault("kinematics", RELATIVISTIC)
    if mode not in (RELATIVISTIC, NONRELATIVISTIC):
        raise ConfigurationError(f"kinematics must be {RELATIVISTIC!r} or {NONRELATIVISTIC!r}")
    units = _units(cfg, DEFAULT_UNITS)
    cfg["units"] = {k: units[k] for k in DEFAULT_UNITS}
    cfg.setdefault("channels", [])
    cfg.setdefault("poles", [])
    cfg.setdefault("analyses", [])
    cfg.setdefault("output_dir", "hadronpoles_out")
    cfg.setdefault("seed", 0)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}) or {})
    cfg["tolerances"] = tol
    if tol["residue_method"] not in RESIDUE_METHODS:
        raise ConfigurationError(f"residue_method must be one of {RESIDUE_METHODS}")

    model = _require(cfg, "model", "config")
    family = _require(model, "family", "model")
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown model family {family!r}; choose from {FAMILIES}")
    for a in cfg["analyses"]:
        if a not in ANALYSES:
            raise ConfigurationError(f"unknown analysis {a!r}; choose from {ANALYSES}")

    names = []
    for i, ch in enumerate(cfg["channels"]):
        where = f"channels[{i}]"
        _number(_require(ch, "m1", where), where)
        _number(_require(ch, "m2", where), where)
        ch.setdefault("name", f"ch{i + 1}")
        ch.setdefault("ell", 0)
        names.append(ch["name"])
    if len(set(names)) != len(names):
        raise ConfigurationError("channel names must be unique")

    if family == "kmatrix":
        if not cfg["channels"]:
            raise ConfigurationError("kmatrix family needs at least one channel")
        _require(model, "kernel", "model")
        if mode == RELATIVISTIC:
            sub = model.setdefault("subtraction", {})
            a = _require(sub, "a", "model.subtraction")
            a = [a] * len(names) if isinstance(a, (int, float)) else a
            if len(a) != len(names):
                raise ConfigurationError("one subtraction constant per channel")
            sub["a"] = a
            sub.setdefault("Lambda", 1000.0)
    elif family in ("ere", "cdd"):
        if mode != NONRELATIVISTIC:
            raise ConfigurationError(f"{family} family requires nonrelativistic kinematics")
        keys = ("a", "r", "mu") if family == "ere" else ("lam", "M_Z", "beta", "mu")
        for k in keys:
            _number(_require(model, k, "model"), f"model.{k}")
        model.setdefault("m_th", 0.0)
    else:
        _number(_require(model, "mu", "model"), "model.mu")
        _require(model, "potential", "model")

    n = len(names) if family == "kmatrix" else 1
    for i, p in enumerate(cfg["poles"]):
        where = f"poles[{i}]"
        sheet = _require(p, "sheet", where)
        try:
            normalize_sheet(sheet, n)
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"{where}: {exc}") from None
        _complex(_require(p, "start", where), where)
        default_var = "sqrt_s" if mode == RELATIVISTIC else "E"
        p.setdefault("variable", default_var)
        allowed = ("sqrt_s", "s") if mode == RELATIVISTIC else ("E", "k")
        if p["variable"] not in allowed:
            raise ConfigurationError(f"{where}: variable must be one of {allowed}")
        p.setdefault("label", f"pole{i + 1}")
        p.setdefault("multistart", 0)

    if "phase_shifts" in cfg["analyses"]:
        ps = _require(cfg, "phase_shifts", "config")
        for k in ("min", "max", "n"):
            _require(ps, k, "phase_shifts")
    if "saturation" in cfg["analyses"]:
        sat = _require(cfg, "saturation", "config")
        for k in ("M_R", "Gamma", "k_R_abs", "mu", "M_th"):
            _number(_require(sat, k, "saturation"), f"saturation.{k}")
        if ("X" in sat) == ("branching_ratio" in sat):
            raise ConfigurationError("saturation: give exactly one of X or branching_ratio")
    if "ere" in cfg["analyses"]:
        ere = cfg.setdefault("ere", {})
        ere.setdefault("poles_k", [])
    if "cdd" in cfg["analyses"] and family != "cdd":
        raise ConfigurationError("cdd analysis requires the cdd model family")
    if "lseq" in cfg["analyses"] and family != "lseq":
        raise ConfigurationError("lseq analysis requires the lseq model family")
    return cfg


# ------------------------------------------------------------------ builders


def build_channels(cfg: dict) -> list[Channel]:
    return [Channel(float(c["m1"]), float(c["m2"]), int(c["ell"]), c["name"]) for c in cfg["channels"]]


def _kernel(spec: dict, n: int):
    kind = _require(spec, "type", "model.kernel")
    if kind == "constant":
        k = amp.ConstantKernel(_require(spec, "matrix", "model.kernel"))
    elif kind == "polynomial":
        k = amp.PolynomialKernel(_require(spec, "coefficients", "model.kernel"))
    elif kind == "bare_pole":
        k = amp.BarePoleKernel(_require(spec, "g0", "model.kernel"), _require(spec, "M0", "model.kernel"),
                               spec.get("background"))
    else:
        raise ConfigurationError(f"unknown kernel type {kind!r}")
    if k.n_channels != n:
        raise ConfigurationError(f"kernel is {k.n_channels}x{k.n_channels} but there are {n} channels")
    return k


def build_model(cfg: dict):
    """Amplitude model (or LS potential) described by ``cfg['model']``."""
    model = cfg["model"]
    family = model["family"]
    units = _units(model, cfg["units"])
    if family == "kmatrix":
        channels = build_channels(cfg)
        kernel = _kernel(model["kernel"], len(channels))
        if cfg["kinematics"] == RELATIVISTIC:
            sub = model["subtraction"]
            return amp.CoupledChannelModel(channels, SubtractionScheme(tuple(sub["a"]), float(sub["Lambda"])), kernel)
        return amp.NonRelativisticModel(channels, kernel)
    if family == "ere":
        return amp.EREModel(length_in_inverse_mev(model["a"], units), length_in_inverse_mev(model["r"], units),
                            float(model["mu"]), float(model["m_th"]))
    if family == "cdd":
        return amp.CDDModel(float(model["lam"]), float(model["M_Z"]), momentum_in_mev(model["beta"], units),
                            float(model["mu"]), float(model["m_th"]))
    return build_potential(model, units)


def _form_factor(spec: dict, units: dict):
    kind = _require(spec, "type", "form factor")
    beta = momentum_in_mev(_number(_require(spec, "beta", "form factor"), "beta"), units)
    if kind == "yamaguchi":
        return lseq.YamaguchiFormFactor(beta, int(spec.get("ell", 0)))
    if kind == "gaussian":
        return lseq.GaussianFormFactor(beta)
    if kind == "tensor":
        return lseq.TensorFormFactor(beta, _number(_require(spec, "t", "form factor"), "t"))
    raise ConfigurationError(f"unknown form factor {kind!r}")


def build_potential(model: dict, units: dict):
    pot = model["potential"]
    mu = float(model["mu"])
    kind = _require(pot, "type", "model.potential")
    if kind == "separable":
        ffs = [_form_factor(f, units) for f in _require(pot, "form_factors", "model.potential")]
        waves = pot.get("waves")
        if "binding_momentum" in pot:
            kappa = momentum_in_mev(_number(pot["binding_momentum"], "binding_momentum"), units)
            probe = lseq.SeparablePotential(1.0, ffs, mu, waves)
            I = probe.loop_integral(-kappa * kappa / (2 * mu)).sum().real
            strength = 1.0 / I
        else:
            strength = _number(_require(pot, "strength", "model.potential"), "strength")
        return lseq.SeparablePotential(strength, ffs, mu, waves)
    if kind == "yukawa":
        return lseq.yukawa_potential(_number(pot["strength"], "strength"),
                                     momentum_in_mev(_number(pot["mass"], "mass"), units), mu)
    if kind == "table":
        return lseq.tabulated_potential(_require(pot, "path", "model.potential"), mu)
    raise ConfigurationError(f"unknown potential type {kind!r}")


def pole_start(cfg: dict, pole: dict, model) -> complex:
    """Convert a pole start given in ``sqrt_s``/``s``/``E``/``k`` to the model variable."""
    z = _complex(pole["start"], "pole start")
    var = pole["variable"]
    if var == "sqrt_s":
        return z * z
    if var == "k":
        k = momentum_in_mev(1.0, _units(cfg["model"], cfg["units"])) * z
        mu = model.channels[0].mu if hasattr(model, "channels") else model.mu
        return k * k / (2 * mu)
    return z


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
