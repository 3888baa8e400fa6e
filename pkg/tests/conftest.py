import numpy as np
import pytest

from sawspin.dynamics import LambdaDriveParams, RatesParams
from sawspin.spectra import DiffusionModel, NVLevelStructure

TWO_PI = 2.0 * np.pi


@pytest.fixture
def default_rates():
    """Default decay rates: total 14 MHz, branching 1.8 MHz into |g2>."""
    return RatesParams(gamma_s=TWO_PI * 0.35, gamma_orb=TWO_PI * 12.0,
                       Gamma_1=TWO_PI * 12.2, Gamma_2=TWO_PI * 1.8)


@pytest.fixture
def nv_levels():
    return NVLevelStructure(omega_B=TWO_PI * 24.0, A_hf=TWO_PI * 2.2)


@pytest.fixture
def balanced_drive():
    return LambdaDriveParams(Omega_R=TWO_PI * 8.0, Omega_2=TWO_PI * 8.0,
                             Delta_R=0.0, Delta_2=0.0)


@pytest.fixture
def diffusion_140():
    return DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=200, seed=7)
