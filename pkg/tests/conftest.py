import numpy as np
import pytest

from ptcrystal import DriveSpec, LatticeSpec, PotentialForm
from ptcrystal import bloch
from ptcrystal.bragg import critical_force

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cossin_spec():
    return LatticeSpec(a=8.0, V0=0.002, alpha=0.3, n_s=1.42, wavelength=0.633)


@pytest.fixture(scope="session")
def cossin_bands(cossin_spec):
    return bloch.band_structure(cossin_spec, n_kappa=64, m_max=12, n_bands=4)


@pytest.fixture(scope="session")
def cossin_normalized(cossin_bands):
    bs = bloch.band_structure(cossin_bands.spec, n_kappa=64, m_max=12, n_bands=2)
    return bloch.normalize_biorthogonal(bs)


@pytest.fixture(scope="session")
def cossin_dipoles(cossin_normalized):
    return bloch.dipole_terms(cossin_normalized)


@pytest.fixture(scope="session")
def edge_spec():
    return LatticeSpec(a=6.0, V0=2e-4, alpha=1.0, form=PotentialForm.SINGLE_EXP)


@pytest.fixture(scope="session")
def edge_fc(edge_spec):
    return critical_force(edge_spec, DriveSpec(1.0, 1e4))


def drive_for_gamma(spec, gamma, Lambda=1e4):
    omega = 2 * np.pi / Lambda
    return DriveSpec(gamma * spec.lambdabar * omega / spec.a, Lambda)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
