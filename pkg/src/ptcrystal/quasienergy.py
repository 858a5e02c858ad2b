"""Floquet quasienergy of the driven single-band model and band collapse."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateBandWarning, InterpolationRangeError, NoConvergence
from .numerics import bessel_j0, golden_section_min


@dataclass(frozen=True)
class DriveSpec:
    """Sinusoidal ac force ``F(z) = F0 cos(omega z)`` with ``omega = 2 pi / Lambda``.

    ``k(z) = (1/lbar) int_0^z F = F0 / (lbar omega) sin(omega z)``.
    Other waveforms plug in by providing ``Lambda``, ``force`` and ``k``.
    """

    F0: float
    Lambda: float
    waveform: str = "cosine"

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self):
        out = []
        if not self.F0 >= 0:
            out.append("drive.F0 must be >= 0")
        if not self.Lambda > 0:
            out.append("drive.Lambda must be > 0")
        if self.waveform != "cosine":
            out.append(f"drive.waveform {self.waveform!r} not supported (cosine)")
        return out

    @property
    def omega(self):
        return 2.0 * math.pi / self.Lambda

    def force(self, z):
        return self.F0 * np.cos(self.omega * np.asarray(z, dtype=float))

    def k(self, z, lambdabar):
        return self.F0 / (lambdabar * self.omega) * np.sin(self.omega * np.asarray(z, dtype=float))


def odd_symmetry_check(drive, tol=1e-12, n_grid=1024):
    """Find ``z0`` in ``[0, Lambda)`` with ``F(z0 + u) = -F(z0 - u)``, or ``None``.

    Candidates and offsets are both sampled on ``Lambda / n_grid``.
    """
    lam = drive.Lambda
    u = np.arange(n_grid) * (lam / n_grid)
    for i in range(n_grid):
        z0 = i * lam / n_grid
        if np.max(np.abs(drive.force(z0 + u) + drive.force(z0 - u))) <= tol:
            return z0
    return None


def gamma_parameter(drive, spec):
    """Dimensionless drive strength ``F0 a / (lbar omega)``."""
    return drive.F0 * spec.a / (spec.lambdabar * drive.omega)


def quasienergy_nntb(fit, gamma, kappa, a):
    """Closed-form quasienergy of a sinusoidal band: ``E0 - Delta J0(gamma) cos(kappa a)``."""
    return fit.E0 - fit.Delta * bessel_j0(gamma) * np.cos(np.asarray(kappa) * a)


class PeriodicTable:
    """Periodic cubic interpolant of a quantity tabulated over one Brillouin zone."""

    def __init__(self, kappa, values, k_bragg):
        kappa = np.asarray(kappa, dtype=float)
        values = np.asarray(values)
        order = np.argsort(kappa)
        kappa, values = kappa[order], values[order]
        if kappa.size < 4:
            raise InterpolationRangeError("need at least 4 table nodes")
        span = kappa[-1] - kappa[0]
        step = np.diff(kappa).max()
        if span + step < k_bragg * (1 - 1e-9) or span >= k_bragg * (1 - 1e-12):
            raise InterpolationRangeError(
                f"table spans {span:.6g} (+{step:.3g}) but one zone is {k_bragg:.6g}"
            )
        self.k_bragg = k_bragg
        self.k0 = kappa[0]
        x = np.append(kappa, kappa[0] + k_bragg)
        y = np.append(values, values[:1])
        self._re = CubicSpline(x, y.real, bc_type="periodic")
        self._im = CubicSpline(x, y.imag, bc_type="periodic") if np.iscomplexobj(y) else None

    def __call__(self, q):
        q = self.k0 + np.mod(np.asarray(q, dtype=float) - self.k0, self.k_bragg)
        out = self._re(q)
        if self._im is not None:
            out = out + 1j * self._im(q)
        return out


def as_function(table, k_bragg):
    """Accept a callable or a ``(kappa, values)`` table."""
    if callable(table):
        return table
    kappa, values = table
    return PeriodicTable(kappa, values, k_bragg)


def quasienergy_numeric(band_energy, phi, drive, spec, kappa, n_steps=4096, tol=None,
                        max_doublings=8):
    """Cycle average of ``E(kappa') - i F(z) Phi(kappa')``, ``kappa' = kappa - k(Lambda) + k(z)``.

    Periodic trapezoid rule on ``n_steps`` nodes. With ``tol`` the node count
    is doubled until two estimates agree to ``tol``.
    """
    e_fn = as_function(band_energy, spec.k_bragg)
    phi_fn = as_function(phi, spec.k_bragg)
    kappa = np.asarray(kappa, dtype=float)
    lbar = spec.lambdabar

    def estimate(n):
        z = np.arange(n) * (drive.Lambda / n)
        shift = drive.k(z, lbar) - drive.k(drive.Lambda, lbar)
        kp = kappa[..., None] + shift
        integrand = e_fn(kp) - 1j * drive.force(z) * phi_fn(kp)
        return integrand.mean(axis=-1)

    est = estimate(n_steps)
    if tol is None:
        return est
    for _ in range(max_doublings):
        n_steps *= 2
        new = estimate(n_steps)
        if np.max(np.abs(new - est)) < tol:
            return new
        est = new
    raise NoConvergence(f"quasienergy quadrature not converged to {tol}")


@dataclass
class QuasienergyBand:
    kappa: np.ndarray
    energy: np.ndarray
    gamma: float


def quasienergy_band(band_energy, phi, drive, spec, kappa, n_steps=4096):
    energy = quasienergy_numeric(band_energy, phi, drive, spec, kappa, n_steps)
    return QuasienergyBand(np.asarray(kappa, dtype=float), energy, gamma_parameter(drive, spec))


def nntb_band(fit, gamma, kappa, a):
    kappa = np.asarray(kappa, dtype=float)
    return QuasienergyBand(kappa, quasienergy_nntb(fit, gamma, kappa, a).astype(complex), gamma)


def band_collapse_metric(qb):
    """``(max Re E - min Re E, max |Im E|)`` over the band's kappa grid."""
    e = np.asarray(qb.energy)
    return float(np.ptp(e.real)), float(np.abs(e.imag).max())


def dl_scan(fit, gamma_range, n_points=601, a=1.0, n_kappa=64, tol=1e-10):
    """Gamma values where the quasienergy bandwidth has interior local minima.

    Each bracketed minimum is refined by golden-section search.
    """
    lo, hi = gamma_range
    if not 0 <= lo < hi:
        raise ValueError("gamma range must satisfy 0 <= lo < hi")
    if fit.Delta == 0:
        warnings.warn("band is flat (Delta = 0); every gamma collapses it", DegenerateBandWarning)
        return []
    kappa = -np.pi / a + np.arange(n_kappa) * (2 * np.pi / a / n_kappa)

    def width(g):
        return band_collapse_metric(nntb_band(fit, g, kappa, a))[0]

    grid = np.linspace(lo, hi, n_points)
    w = np.array([width(g) for g in grid])
    found = []
    for i in range(1, n_points - 1):
        if w[i] <= w[i - 1] and w[i] < w[i + 1]:
            found.append(golden_section_min(width, grid[i - 1], grid[i + 1], tol=tol))
    return found
