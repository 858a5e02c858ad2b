"""Plane-wave Bragg cascade in the single-exponential crystal ``V0 exp(i kB x)``.

Expanding ``psi = sum_n a_n(z) exp[i (n kB + k(z)) x - i gamma_n(z)]`` gives an
exact one-sided recurrence, since the potential only raises the momentum by
``kB``::

    a_n' = -i (V0 / lbar) a_{n-1} exp[i phi_n],   phi_n = gamma_n - gamma_{n-1}

with ``a_0 = 1``. Order ``n`` grows abruptly where ``phi_n`` is stationary,
i.e. where ``k(z0) = -kB (n - 1/2)``.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoCrossing, RegimeMismatch, UnderResolvedPhase
from .lattice import PotentialForm, fourier_coefficients
from .numerics import QuadratureSpec, airy_ai0, cumulative_trapezoid, find_root_bracketed, integrate

LINEAR = "linear"
PARABOLIC = "parabolic"
KIND_TOL = 1e-9


def k_of_z(drive, z, lambdabar):
    """Drive-induced wavenumber ``F0 / (lbar omega) sin(omega z)``."""
    return drive.k(z, lambdabar)


def _k_amp(drive, spec):
    return drive.F0 / (spec.lambdabar * drive.omega)


def gamma_n(drive, spec, n, z):
    """``(lbar / 2 n_s) int_0^z (n kB + k)**2`` in closed form."""
    if n < 0:
        raise ValueError("order must be >= 0")
    z = np.asarray(z, dtype=float)
    om = drive.omega
    K = _k_amp(drive, spec)
    q = n * spec.k_bragg
    integral = (q * q * z + 2.0 * q * K * (1.0 - np.cos(om * z)) / om
                + K * K * (0.5 * z - np.sin(2.0 * om * z) / (4.0 * om)))
    return spec.lambdabar / (2.0 * spec.n_s) * integral


def phi_n(drive, spec, n, z):
    """Phase ``gamma_n - gamma_{n-1}`` driving order ``n``."""
    if n < 1:
        raise ValueError("order must be >= 1")
    z = np.asarray(z, dtype=float)
    om = drive.omega
    K = _k_amp(drive, spec)
    kb = spec.k_bragg
    # the K**2 terms cancel in the difference
    return spec.lambdabar / (2.0 * spec.n_s) * (
        (2 * n - 1) * kb * kb * z + 2.0 * kb * K * (1.0 - np.cos(om * z)) / om
    )


def phi_derivative(drive, spec, n, z, order=1):
    """``d^order phi_n / dz^order`` for ``order`` in 1..3."""
    z = np.asarray(z, dtype=float)
    kb = spec.k_bragg
    lbar = spec.lambdabar
    if order == 1:
        return lbar * kb / (2.0 * spec.n_s) * ((2 * n - 1) * kb + 2.0 * drive.k(z, lbar))
    if order == 2:
        return kb * drive.force(z) / spec.n_s
    if order == 3:
        return -kb * drive.F0 * drive.omega * np.sin(drive.omega * z) / spec.n_s
    raise ValueError("order must be 1, 2 or 3")


def critical_force(spec, drive):
    """Smallest amplitude for which ``k(z)`` reaches the zone edge: ``lbar omega kB / 2``."""
    return 0.5 * spec.lambdabar * drive.omega * spec.k_bragg


@dataclass(frozen=True)
class StationaryPoint:
    n: int
    z0: float
    kind: str


def stationary_points(drive, spec, n, tol=1e-12):
    """Points in ``[0, Lambda)`` where ``k(z0) = -kB (n - 1/2)``.

    Linear crossings come in pairs around ``3 Lambda / 4`` and are found by
    bisection; when ``F0`` equals ``(2n - 1) F_c`` (relative ``KIND_TOL``)
    they coalesce into one parabolic point at ``3 Lambda / 4``.

    Raises
    ------
    NoCrossing
        If ``F0 < (2n - 1) F_c``.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    fc = (2 * n - 1) * critical_force(spec, drive)
    lam = drive.Lambda
    if abs(drive.F0 - fc) <= KIND_TOL * fc:
        return [StationaryPoint(n, 0.75 * lam, PARABOLIC)]
    if drive.F0 < fc:
        raise NoCrossing(f"F0={drive.F0:.6g} below (2n-1) F_c={fc:.6g}; order {n} never generated")
    target = -spec.k_bragg * (n - 0.5)

    def f(z):
        return float(drive.k(z, spec.lambdabar)) - target

    ztol = tol * lam
    return [
        StationaryPoint(n, find_root_bracketed(f, 0.5 * lam, 0.75 * lam, tol=ztol), LINEAR),
        StationaryPoint(n, find_root_bracketed(f, 0.75 * lam, lam, tol=ztol), LINEAR),
    ]


def _coupling(spec):
    if spec.form is PotentialForm.SINGLE_EXP:
        return spec.V0
    coeffs = fourier_coefficients(spec, 4)
    others = [m for m, c in coeffs.items() if m != 1 and abs(c) > 1e-15 * max(spec.V0, 1e-300)]
    if others:
        raise ValueError("cascade model needs a single exp(i kB x) harmonic (alpha = 1)")
    return coeffs[1].real if coeffs[1].imag == 0 else coeffs[1]


def jump_coefficient(spec, drive, point):
    """Complex stationary-phase jump ``R`` with ``a_n(z0+) - a_n(z0-) = R a_{n-1}(z0)``.

    Raises
    ------
    RegimeMismatch
        If a linear point is supplied while ``F0 <= (2n - 1) F_c``.
    """
    v0 = _coupling(spec)
    lbar = spec.lambdabar
    n = point.n
    prefactor = -1j * v0 / lbar * cmath.exp(1j * float(phi_n(drive, spec, n, point.z0)))
    if point.kind == LINEAR:
        if drive.F0 <= (2 * n - 1) * critical_force(spec, drive):
            raise RegimeMismatch("linear jump factor requires F0 > (2n-1) F_c")
        d2 = float(phi_derivative(drive, spec, n, point.z0, 2))
        # int exp(i d2 t^2 / 2) dt = sqrt(2 pi / |d2|) exp(+-i pi/4)
        return prefactor * math.sqrt(2.0 * math.pi / abs(d2)) * cmath.exp(0.25j * math.pi * math.copysign(1.0, d2))
    if point.kind == PARABOLIC:
        d3 = float(phi_derivative(drive, spec, n, point.z0, 3))
        # int exp(i d3 t^3 / 6) dt = 2 pi Ai(0) (2/|d3|)^(1/3), real for either sign
        return prefactor * 2.0 * math.pi * airy_ai0() * (2.0 / abs(d3)) ** (1.0 / 3.0)
    raise ValueError(f"unknown crossing kind {point.kind!r}")


def jump_factor(spec, drive, point):
    """``|R|``: Fresnel form at linear crossings, Airy form at parabolic ones."""
    return abs(jump_coefficient(spec, drive, point))


def crossing_length(spec, drive, point):
    """Effective length of a crossing, ``|R| lbar / V0``.

    ``sqrt(2 pi / |phi''|)`` for linear and ``2 pi Ai(0) (2 / |phi'''|)**(1/3)``
    for parabolic points.
    """
    if point.kind == LINEAR:
        return math.sqrt(2.0 * math.pi / abs(float(phi_derivative(drive, spec, point.n, point.z0, 2))))
    d3 = abs(float(phi_derivative(drive, spec, point.n, point.z0, 3)))
    return 2.0 * math.pi * airy_ai0() * (2.0 / d3) ** (1.0 / 3.0)


def _neighbour_gap(drive, spec, point):
    """Distance to the nearest other stationary point of the same order (any period)."""
    lam = drive.Lambda
    others = [q.z0 + shift * lam for q in stationary_points(drive, spec, point.n) for shift in (-1, 0, 1)]
    gaps = [abs(z - point.z0) for z in others if abs(z - point.z0) > 1e-9 * lam]
    return min(gaps)


def numerical_jump_factor(spec, drive, point, widths=5.0, taper=0.5, tolerance=1e-7):
    """``|(V0/lbar) int exp(i phi_n)|`` over ``z0 +- widths * crossing_length``.

    The exact ``phi_n`` is used. The half-window is clipped to half the
    distance to the next stationary point of the same order, and its outer
    ``taper`` fraction is rolled off with a ``cos**2`` window to suppress
    truncation ripple.
    """
    v0 = abs(_coupling(spec))
    half = min(widths * crossing_length(spec, drive, point), 0.5 * _neighbour_gap(drive, spec, point))
    z0 = point.z0
    ph0 = float(phi_n(drive, spec, point.n, z0))
    flat = (1.0 - taper) * half

    def window(t):
        u = np.clip((np.abs(t) - flat) / max(half - flat, 1e-300), 0.0, 1.0)
        return np.cos(0.5 * np.pi * u) ** 2

    def f(z):
        return window(z - z0) * np.exp(1j * (phi_n(drive, spec, point.n, z) - ph0))

    q = QuadratureSpec("simpson", n_steps=64, tolerance=tolerance * half, max_doublings=20)
    return float(v0 / spec.lambdabar * abs(integrate(f, z0 - half, z0 + half, q)))


def jump_factor_sensitivity(spec, drive, point, widths=(4.0, 5.0, 6.0)):
    """Numerical jump factor for several window half-widths (in crossing lengths)."""
    return {w: numerical_jump_factor(spec, drive, point, widths=w) for w in widths}


@dataclass
class CascadeResult:
    """Plane-wave cascade; ``amplitudes[n]`` is ``a_n`` on ``z``."""

    z: np.ndarray
    amplitudes: np.ndarray
    points: list = field(default_factory=list)
    jump_factors: list = field(default_factory=list)
    spec: object = None
    drive: object = None

    @property
    def power(self):
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)


def all_stationary_points(drive, spec, n_max, periods=1):
    """Stationary points of orders ``1..n_max`` over ``periods`` drive periods, sorted by z."""
    out = []
    for n in range(1, n_max + 1):
        try:
            base = stationary_points(drive, spec, n)
        except NoCrossing:
            continue
        for p in range(periods):
            out.extend(StationaryPoint(n, pt.z0 + p * drive.Lambda, pt.kind) for pt in base)
    return sorted(out, key=lambda p: (p.z0, p.n))


def cascade_amplitudes(spec, drive, n_max=3, z_grid=None, max_phase_step=math.pi / 4):
    """Integrate the recurrence order by order with a cumulative trapezoid rule.

    Raises
    ------
    UnderResolvedPhase
        If ``|phi_n'| dz`` exceeds ``max_phase_step`` for any order on any step.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    v0 = _coupling(spec)
    if z_grid is None:
        z_grid = default_z_grid(spec, drive, n_max)
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size < 2 or np.any(np.diff(z) <= 0):
        raise ValueError("z_grid must be strictly increasing with >= 2 nodes")
    dz = np.diff(z)
    amps = np.zeros((n_max + 1, z.size), dtype=complex)
    amps[0] = 1.0
    for n in range(1, n_max + 1):
        rate = np.abs(phi_derivative(drive, spec, n, z))
        worst = float(np.max(np.maximum(rate[1:], rate[:-1]) * dz))
        if worst > max_phase_step:
            raise UnderResolvedPhase(
                f"order {n}: phase step {worst:.3g} rad exceeds {max_phase_step:.3g}; refine z_grid"
            )
        integrand = amps[n - 1] * np.exp(1j * phi_n(drive, spec, n, z))
        amps[n] = -1j * v0 / spec.lambdabar * cumulative_trapezoid(integrand, z)
    periods = int(math.ceil(z[-1] / drive.Lambda - 1e-12)) if drive.F0 > 0 else 0
    points = [p for p in all_stationary_points(drive, spec, n_max, max(periods, 1)) if z[0] <= p.z0 <= z[-1]]
    factors = [jump_factor(spec, drive, p) for p in points]
    return CascadeResult(z, amps, points, factors, spec, drive)


def default_z_grid(spec, drive, n_max, z_end=None, phase_step=math.pi / 32):
    """Uniform grid resolving the fastest ``phi_n`` with ``phase_step`` per step."""
    if z_end is None:
        z_end = drive.Lambda
    kb = spec.k_bragg
    kmax = _k_amp(drive, spec)
    rate = spec.lambdabar * kb / (2.0 * spec.n_s) * ((2 * max(n_max, 1) - 1) * kb + 2.0 * kmax)
    n = int(math.ceil(z_end * rate / phase_step))
    return np.linspace(0.0, z_end, n + 1)


def _complex_interp(x, xp, fp):
    return np.interp(x, xp, fp.real) + 1j * np.interp(x, xp, fp.imag)


def staircase_prediction(cr, plateau=2.0):
    """Predicted power ``sum |a_n|^2`` and a jump-rule check at every crossing.

    ``a_n`` before and after each stationary point is the mean over the
    plateau ``[L, plateau * L]`` on either side (``L`` the crossing length),
    clipped at the midpoints to neighbouring crossings of the same order.
    The change is compared with ``R a_{n-1}(z0)``.

    Returns
    -------
    power : ndarray
    summary : list of dict
        Keys ``n, z0, kind, R_abs, delta_abs, residual`` and ``power_jump``
        (change of ``|a_n|**2`` between the plateaus).
    """
    z = cr.z
    summary = []
    for p, r_abs in zip(cr.points, cr.jump_factors):
        length = crossing_length(cr.spec, cr.drive, p)
        same = [q.z0 for q in cr.points if q.n == p.n and q.z0 != p.z0]
        left = max([0.5 * (q + p.z0) for q in same if q < p.z0], default=z[0])
        right = min([0.5 * (q + p.z0) for q in same if q > p.z0], default=z[-1])
        a = cr.amplitudes[p.n]

        def mean_over(lo, hi):
            sel = (z >= lo) & (z <= hi)
            if hi <= lo or sel.sum() < 2:
                return _complex_interp(0.5 * (lo + hi), z, a)
            return np.trapezoid(a[sel], z[sel]) / (z[sel][-1] - z[sel][0])

        before = mean_over(max(p.z0 - plateau * length, left), max(p.z0 - length, left))
        after = mean_over(min(p.z0 + length, right), min(p.z0 + plateau * length, right))
        delta = after - before
        expected = jump_coefficient(cr.spec, cr.drive, p) * _complex_interp(p.z0, z, cr.amplitudes[p.n - 1])
        residual = abs(delta - expected) / abs(expected) if abs(expected) > 0 else float("nan")
        summary.append({"n": p.n, "z0": p.z0, "kind": p.kind, "R_abs": r_abs,
                        "delta_abs": float(abs(delta)), "residual": float(residual),
                        "power_jump": float(abs(after) ** 2 - abs(before) ** 2)})
    return cr.power, summary
