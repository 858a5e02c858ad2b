import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptcrystal import DriveSpec
from ptcrystal import quasienergy as qe
from ptcrystal.bloch import BandFit, sinusoidal_fit
from ptcrystal.errors import DegenerateBandWarning, InterpolationRangeError
from ptcrystal.numerics import bessel_j0

from conftest import drive_for_gamma


class HarmonicDrive:
    """``F(z) = F1 + F0 sum_j c_j cos(j omega z + p_j)`` with its exact ``k(z)``."""

    def __init__(self, F0, Lambda, terms, F1=0.0):
        self.F0, self.F1, self.Lambda, self.terms = F0, F1, Lambda, terms
        self.omega = 2 * np.pi / Lambda

    def force(self, z):
        z = np.asarray(z, dtype=float)
        return self.F1 + self.F0 * sum(c * np.cos(j * self.omega * z + p) for j, c, p in self.terms)

    def k(self, z, lambdabar):
        z = np.asarray(z, dtype=float)
        s = sum(c * (np.sin(j * self.omega * z + p) - np.sin(p)) / (j * self.omega) for j, c, p in self.terms)
        return (self.F1 * z + self.F0 * s) / lambdabar


@pytest.fixture(scope="module")
def cossin_tables(cossin_normalized, cossin_dipoles):
    k = cossin_normalized.kappa
    return (k, cossin_normalized.energies[0].real), (k, cossin_dipoles.phi[0].real)


@pytest.fixture(scope="module")
def sine_band(cossin_spec):
    fit = BandFit(E0=1.3e-3, Delta=2.0e-4, rms_residual=0.0)
    a = cossin_spec.a
    return fit, (lambda q: fit.E0 - fit.Delta * np.cos(q * a)), (lambda q: 0.0 * np.asarray(q))


def test_drive_validation():
    with pytest.raises(ValueError, match="Lambda must be > 0"):
        DriveSpec(1e-6, -1.0)
    with pytest.raises(ValueError, match="waveform"):
        DriveSpec(1e-6, 1e4, "square")


def test_drive_momentum_is_integral_of_force(cossin_spec):
    d = DriveSpec(3e-7, 1e4)
    z = np.linspace(0, 1e4, 20001)
    k_num = np.concatenate([[0], np.cumsum(0.5 * (d.force(z[1:]) + d.force(z[:-1])) * np.diff(z))])
    assert np.abs(k_num / cossin_spec.lambdabar - d.k(z, cossin_spec.lambdabar)).max() < 1e-9


def test_cosine_odd_about_quarter_period():
    assert qe.odd_symmetry_check(DriveSpec(1e-6, 1e4)) == pytest.approx(2500.0)
    assert qe.odd_symmetry_check(HarmonicDrive(1e-6, 1e4, [(1, 1.0, 0.0), (2, 0.7, 0.4)])) is None


def test_gamma_parameter(cossin_spec):
    assert qe.gamma_parameter(drive_for_gamma(cossin_spec, 2.405), cossin_spec) == pytest.approx(2.405)


def test_cossin_quasienergy_is_real(cossin_spec, cossin_tables):
    e_tab, phi_tab = cossin_tables
    k = np.linspace(-0.5, 0.5, 33) * cossin_spec.k_bragg
    for gamma in (1.684, 2.405):
        e = qe.quasienergy_numeric(e_tab, phi_tab, drive_for_gamma(cossin_spec, gamma), cossin_spec, k)
        assert np.abs(e.imag).max() < 1e-8


def test_undriven_limit_returns_band(cossin_spec, cossin_tables):
    e_tab, phi_tab = cossin_tables
    k = cossin_tables[0][0]
    e = qe.quasienergy_numeric(e_tab, phi_tab, DriveSpec(0.0, 1e4), cossin_spec, k, n_steps=16)
    assert np.abs(e - e_tab[1]).max() < 1e-15


def test_nntb_matches_numeric_on_sinusoid(cossin_spec, sine_band):
    fit, e_fn, phi_fn = sine_band
    rng = np.random.default_rng(20)
    for gamma, kappa in zip(rng.uniform(0, 6, 20), rng.uniform(-0.5, 0.5, 20) * cossin_spec.k_bragg):
        num = qe.quasienergy_numeric(e_fn, phi_fn, drive_for_gamma(cossin_spec, gamma), cossin_spec, kappa)
        assert abs(num - qe.quasienergy_nntb(fit, gamma, kappa, cossin_spec.a)) < 1e-10


def test_quasienergy_depends_on_gamma_only(cossin_spec, sine_band):
    _, e_fn, phi_fn = sine_band
    k = np.linspace(-0.4, 0.4, 11)
    a = qe.quasienergy_numeric(e_fn, phi_fn, drive_for_gamma(cossin_spec, 1.9, 1e4), cossin_spec, k)
    b = qe.quasienergy_numeric(e_fn, phi_fn, drive_for_gamma(cossin_spec, 1.9, 3.7e3), cossin_spec, k)
    assert np.abs(a - b).max() < 1e-10


def test_quadrature_converged(cossin_spec, cossin_tables):
    e_tab, phi_tab = cossin_tables
    k = np.linspace(-0.39, 0.39, 9)
    d = drive_for_gamma(cossin_spec, 2.405)
    a = qe.quasienergy_numeric(e_tab, phi_tab, d, cossin_spec, k, n_steps=4096)
    b = qe.quasienergy_numeric(e_tab, phi_tab, d, cossin_spec, k, n_steps=8192)
    assert np.abs(a - b).max() < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 2 * np.pi), st.floats(0.5, 4.0))
def test_zero_mean_drive_gives_real_quasienergy(cossin_spec, cossin_tables, c2, p2, gamma):
    # odd symmetry is not needed: with no net momentum kick the loss term is an exact differential
    e_tab, phi_tab = cossin_tables
    f0 = drive_for_gamma(cossin_spec, gamma).F0
    d = HarmonicDrive(f0, 1e4, [(1, 1.0, 0.0), (2, c2, p2), (3, 0.3, 1.0)])
    e = qe.quasienergy_numeric(e_tab, phi_tab, d, cossin_spec, np.linspace(-0.39, 0.39, 7))
    assert np.abs(e.imag).max() < 1e-8


def test_odd_multiharmonic_drive_gives_real_quasienergy(cossin_spec, cossin_tables):
    e_tab, phi_tab = cossin_tables
    f0 = drive_for_gamma(cossin_spec, 2.0).F0
    d = HarmonicDrive(f0, 1e4, [(1, 1.0, -np.pi / 2), (3, 0.4, -np.pi / 2)])
    assert qe.odd_symmetry_check(d) is not None
    e = qe.quasienergy_numeric(e_tab, phi_tab, d, cossin_spec, np.linspace(-0.39, 0.39, 7))
    assert np.abs(e.imag).max() < 1e-8


def test_dc_bias_breaks_reality(cossin_spec, cossin_tables):
    # a net kick of half a zone leaves an uncompensated loss term
    e_tab, phi_tab = cossin_tables
    f1 = 0.5 * cossin_spec.k_bragg * cossin_spec.lambdabar / 1e4
    d = HarmonicDrive(drive_for_gamma(cossin_spec, 2.405).F0, 1e4, [(1, 1.0, 0.0)], F1=f1)
    e = qe.quasienergy_numeric(e_tab, phi_tab, d, cossin_spec, np.linspace(-0.39, 0.39, 7))
    assert np.abs(e.imag).max() > 1e-7


def test_collapse_metric_at_bessel_zero(cossin_spec, cossin_bands):
    fit = sinusoidal_fit(cossin_bands)
    k = cossin_bands.kappa
    width, im = qe.band_collapse_metric(qe.nntb_band(fit, 2.404825557695773, k, cossin_spec.a))
    assert width < 1e-15 and im == 0
    width0, _ = qe.band_collapse_metric(qe.nntb_band(fit, 0.0, k, cossin_spec.a))
    assert width0 == pytest.approx(2 * abs(fit.Delta), rel=1e-12)


def test_dl_scan_finds_bessel_zeros():
    fit = BandFit(0.0, 1e-4, 0.0)
    zeros = qe.dl_scan(fit, (0.0, 6.0), a=8.0)
    assert len(zeros) == 2
    assert zeros[0] == pytest.approx(2.404825557695773, abs=1e-6)
    assert zeros[1] == pytest.approx(5.520078110286311, abs=1e-6)
    assert all(abs(bessel_j0(g)) < 1e-6 for g in zeros)


def test_dl_scan_flat_band_warns():
    with pytest.warns(DegenerateBandWarning):
        assert qe.dl_scan(BandFit(1.0, 0.0, 0.0), (0.0, 6.0)) == []


def test_periodic_table_interpolates_and_wraps():
    kb = 2 * np.pi / 8
    k = -kb / 2 + np.arange(64) * kb / 64
    t = qe.PeriodicTable(k, np.cos(8 * k) + 1j * np.sin(8 * k), kb)
    q = np.linspace(-3, 3, 101)
    assert np.abs(t(q) - np.exp(8j * q)).max() < 1e-5
    assert np.abs(t(q + kb) - t(q)).max() < 1e-12


def test_periodic_table_rejects_partial_zone():
    kb = 1.0
    with pytest.raises(InterpolationRangeError):
        qe.PeriodicTable(np.linspace(0, 0.5, 20), np.zeros(20), kb)
    with pytest.raises(InterpolationRangeError):
        qe.PeriodicTable(np.linspace(0, 1.0, 20), np.zeros(20), kb)
