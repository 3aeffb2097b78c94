"""Poles, couplings and compositeness of hadronic scattering amplitudes.

Submodules
----------
core          channels, sheets, momenta and phase space
loopfn        subtracted two-point loop function on both sheets
amplitudes    K-matrix style models, S matrix and phase shifts
poles         pole search and residue extraction
compositeness X_i, Z, sum rule, effective-range and CDD diagnostics
lseq          Lippmann-Schwinger solver for energy-independent potentials
saturation    two-channel width saturation
cli           config-driven command line front end
"""
from .core import (HBARC, NONRELATIVISTIC, RELATIVISTIC, SHEET_I, SHEET_II, Channel, SheetedPoint,
                   fm_to_inverse_mev, inverse_mev_to_fm)
from .errors import *  # noqa: F401,F403
from .kernels import BACKEND
from .loopfn import SubtractionScheme
from .amplitudes import (BarePoleKernel, CallableKernel, CDDModel, ConstantKernel, CoupledChannelModel,
                         EREModel, NonRelativisticModel, PolynomialKernel, phase_shift)
from .poles import CouplingSet, PoleCandidate, extract_couplings, find_pole, partial_widths
from .compositeness import (PoleReport, cdd_shifts, compositeness_sum_rule, ere_compositeness,
                            ere_from_pole, phase_normalize, shallow_bound_X)

__version__ = "0.1.0"
