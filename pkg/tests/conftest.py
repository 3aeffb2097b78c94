import numpy as np
import pytest

from hadronpoles import amplitudes as amp
from hadronpoles import loopfn
from hadronpoles.core import Channel

PION, KAON = 139.57, 493.68
MU_NP = 469.459
KAPPA_D = 45.7
BETA_D = 285.9


@pytest.fixture
def pipi_kk():
    return [Channel(PION, PION, 0, "pipi"), Channel(KAON, KAON, 0, "KK")]


@pytest.fixture
def scheme2():
    return loopfn.SubtractionScheme((-1.2, -1.2), 1000.0)


@pytest.fixture
def bare_pole_model(pipi_kk, scheme2):
    return amp.CoupledChannelModel(pipi_kk, scheme2, amp.BarePoleKernel([3000.0, 4000.0], 1050.0))


@pytest.fixture
def constant_model(pipi_kk, scheme2):
    return amp.CoupledChannelModel(pipi_kk, scheme2, amp.ConstantKernel([[-20.0, 15.0], [15.0, -10.0]]))


def bound_constant_kernel(channels, scheme, sqrt_s_bound, c=40.0):
    """Constant K whose T has a bound-state pole at ``sqrt_s_bound``.

    ``K^-1 = -G(s_B) + c * ones`` makes ``K^-1 + G`` singular at ``s_B``.
    """
    from hadronpoles.core import SheetedPoint
    G = loopfn.G_channels(channels, scheme, SheetedPoint(sqrt_s_bound ** 2, ("I",) * len(channels)))
    n = len(channels)
    kinv = -np.diag(G.real) + c * np.ones((n, n)) * 1e-3
    return amp.ConstantKernel(np.linalg.inv(kinv))
