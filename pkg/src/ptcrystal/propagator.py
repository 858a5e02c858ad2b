"""Split-step Fourier beam propagation and the single-band characteristics solution.

Field equation (x, z in um; V and F in index units)::

    i lbar psi_z = -(lbar**2 / 2 n_s) psi_xx + V(x) psi - F(z) x psi

Each Strang step applies half a potential step, a full kinetic step in
spectral space and another half potential step. The linear force enters the
potential steps with ``F`` sampled at the step midpoint.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import (
    InterpolationRangeError,
    NumericalBlowup,
    UnresolvedBeam,
    ZeroField,
)
from .lattice import potential_eval
from .quasienergy import PeriodicTable


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self):
        out = []
        if not self.x_max > self.x_min:
            out.append("grid.x_max must exceed grid.x_min")
        if not int(self.n_points) == self.n_points or self.n_points < 16:
            out.append("grid.n_points must be an integer >= 16")
        return out

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def dx(self):
        return self.length / self.n_points

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self):
        """Angular spectral wavenumbers in FFT order."""
        return 2.0 * np.pi * scipy.fft.fftfreq(self.n_points, d=self.dx)


@dataclass
class Field:
    grid: Grid
    psi: np.ndarray
    z: float = 0.0

    def copy(self):
        return Field(self.grid, self.psi.copy(), self.z)

    def norm2(self):
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)


@dataclass(frozen=True)
class AbsorberSpec:
    """Cubic imaginary-potential ramp ``s ((d - x_abs) / width)**3`` inside each edge layer.

    ``width`` is the layer thickness (um) at both edges, ``strength`` the
    value ``s`` reached at the boundary (index units).
    """

    width: float
    strength: float = 0.005

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("absorber.width must be > 0")
        if not self.strength > 0:
            raise ValueError("absorber.strength must be > 0")

    @classmethod
    def default(cls, grid, fraction=0.1, strength=0.005):
        return cls(fraction * grid.length, strength)

    def check(self, grid):
        if not self.width < grid.length / 4:
            raise ValueError("absorber.width must be < domain/4")

    def profile(self, grid):
        x = grid.x
        depth = np.maximum(self.width - (x - grid.x_min), self.width - (grid.x_max - x))
        depth = np.clip(depth / self.width, 0.0, None)
        return self.strength * depth**3


@dataclass
class ObservableSeries:
    """Recorded observables; ``snapshots`` maps ``z`` to ``psi`` copies.

    ``orders`` (when requested) holds per-record arrays of diffraction-order
    powers and centroids, shape ``(n_records, n_orders)``.
    """

    z: np.ndarray
    P: np.ndarray
    centroid: np.ndarray
    width: np.ndarray
    fidelity: np.ndarray
    snapshots: dict = field(default_factory=dict)
    order_index: np.ndarray = None
    order_power: np.ndarray = None
    order_centroid: np.ndarray = None


def init_gaussian(grid, w, x0=0.0, k0=0.0):
    """Peak-one Gaussian ``exp(-(x-x0)**2/w**2) exp(i k0 x)`` at ``z = 0``.

    Raises
    ------
    UnresolvedBeam
        If ``w <= 2 dx``.
    """
    if w <= 2 * grid.dx:
        raise UnresolvedBeam(f"beam radius {w} not resolved by dx={grid.dx:.4g} (need w > 2 dx)")
    x = grid.x
    return Field(grid, np.exp(-((x - x0) ** 2) / w**2) * np.exp(1j * k0 * x), 0.0)


def measure(f, reference):
    """Power ratio, centroid, rms width and overlap fidelity against ``reference``."""
    if f.grid != reference.grid:
        raise ValueError("fields live on different grids")
    dx = f.grid.dx
    rho = np.abs(f.psi) ** 2
    norm = rho.sum() * dx
    ref_norm = np.sum(np.abs(reference.psi) ** 2) * dx
    if not norm > 0 or not ref_norm > 0:
        raise ZeroField("field norm vanished")
    x = f.grid.x
    centroid = float(np.sum(x * rho) * dx / norm)
    width = float(math.sqrt(max(np.sum((x - centroid) ** 2 * rho) * dx / norm, 0.0)))
    overlap = np.vdot(reference.psi, f.psi) * dx
    fidelity = float(abs(overlap) ** 2 / (norm * ref_norm))
    return {"P": float(norm / ref_norm), "centroid": centroid, "width": width, "fidelity": fidelity}


def order_observables(f, k_center, k_bragg, orders):
    """Power and centroid of the spectral window ``k_center + n kB +- kB/2`` per order ``n``.

    Powers are absolute (``int |psi_n|^2 dx``); centroids are NaN for empty windows.
    """
    grid = f.grid
    spec = scipy.fft.fft(f.psi)
    k = grid.k
    x = grid.x
    powers = np.empty(len(orders))
    cents = np.empty(len(orders))
    for i, n in enumerate(orders):
        offset = k - k_center - n * k_bragg
        mask = (offset >= -0.5 * k_bragg) & (offset < 0.5 * k_bragg)
        part = scipy.fft.ifft(np.where(mask, spec, 0.0))
        rho = np.abs(part) ** 2
        powers[i] = rho.sum() * grid.dx
        cents[i] = np.sum(x * rho) / rho.sum() if rho.sum() > 0 else np.nan
    return powers, cents


class Stepper:
    """Cached Strang stepper for one lattice, drive, absorber and step size."""

    def __init__(self, grid, spec, drive, absorber, dz):
        if not dz > 0:
            raise ValueError("dz must be > 0")
        self.grid = grid
        self.spec = spec
        self.drive = drive
        self.dz = dz
        lbar = spec.lambdabar
        x = grid.x
        static = potential_eval(spec, x).astype(complex)
        if absorber is not None:
            absorber.check(grid)
            static = static - 1j * absorber.profile(grid)
        self._half_static = np.exp(-1j * static * dz / (2.0 * lbar))
        self._force_phase = x * dz / (2.0 * lbar)
        self._kinetic = np.exp(-1j * lbar * grid.k**2 * dz / (2.0 * spec.n_s))

    def half_potential(self, z_mid):
        force = 0.0 if self.drive is None else float(self.drive.force(z_mid))
        if force == 0.0:
            return self._half_static
        return self._half_static * np.exp(1j * force * self._force_phase)

    def step(self, f):
        half = self.half_potential(f.z + 0.5 * self.dz)
        # overflow is caught by the finiteness check below
        with np.errstate(over="ignore", invalid="ignore"):
            psi = f.psi * half
            psi = scipy.fft.ifft(scipy.fft.fft(psi) * self._kinetic)
            psi *= half
        if not np.all(np.isfinite(psi)):
            raise NumericalBlowup(
                f"non-finite amplitude at z={f.z + self.dz:.6g}; reduce dz (={self.dz:g}) "
                "or strengthen the absorber"
            )
        return Field(f.grid, psi, f.z + self.dz)


def split_step(f, spec, drive, absorber, dz):
    """Advance ``f`` by one Strang step of length ``dz``."""
    return Stepper(f.grid, spec, drive, absorber, dz).step(f)


def propagate(f, spec, drive, absorber, z_end, dz, record_every=1, snapshot_every=None,
              orders=None, callback=None):
    """Integrate from ``f.z`` to ``z_end`` and record observables.

    The step is shrunk so that a whole number of steps lands on ``z_end``.
    Records are taken every ``record_every`` steps (and at both ends);
    snapshots of ``psi`` every ``snapshot_every`` steps. With ``orders`` the
    per-order spectral powers and centroids are recorded too, with windows
    centred on the drive-shifted input wavenumber.

    Returns
    -------
    (ObservableSeries, Field)
    """
    span = z_end - f.z
    if not span > 0:
        raise ValueError("z_end must exceed the current z")
    if not dz > 0:
        raise ValueError("dz must be > 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    n_steps = max(1, int(math.ceil(span / dz - 1e-9)))
    dz = span / n_steps
    stepper = Stepper(f.grid, spec, drive, absorber, dz)
    reference = f.copy()
    k0 = _mean_wavenumber(reference)
    z0 = f.z
    rows, snaps, order_rows = [], {}, []

    def record(cur):
        m = measure(cur, reference)
        rows.append((cur.z, m["P"], m["centroid"], m["width"], m["fidelity"]))
        if orders is not None:
            shift = 0.0 if drive is None else float(drive.k(cur.z, spec.lambdabar) - drive.k(z0, spec.lambdabar))
            p, c = order_observables(cur, k0 + shift, spec.k_bragg, orders)
            order_rows.append((p / reference.norm2(), c))

    cur = f
    record(cur)
    if snapshot_every:
        snaps[cur.z] = cur.psi.copy()
    for i in range(1, n_steps + 1):
        cur = stepper.step(cur)
        cur.z = z0 + i * dz
        if i % record_every == 0 or i == n_steps:
            record(cur)
        if snapshot_every and (i % snapshot_every == 0 or i == n_steps):
            snaps[cur.z] = cur.psi.copy()
        if callback is not None:
            callback(cur)
    arr = np.array(rows)
    series = ObservableSeries(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], snaps)
    if orders is not None:
        series.order_index = np.asarray(orders)
        series.order_power = np.array([r[0] for r in order_rows])
        series.order_centroid = np.array([r[1] for r in order_rows])
    return series, cur


def _mean_wavenumber(f):
    spec = np.abs(scipy.fft.fft(f.psi)) ** 2
    return float(np.sum(f.grid.k * spec) / spec.sum())


def free_gaussian_width(w, z, spec):
    """Rms width of ``exp(-x**2/w**2)`` after free propagation over ``z``.

    The ``1/e`` amplitude radius grows as ``w sqrt(1 + (lbar z / (n_s w**2 / 2))**2)``;
    the rms width of ``|psi|**2`` is half of it.
    """
    zr = spec.n_s * w**2 / (2.0 * spec.lambdabar)
    return 0.5 * w * np.sqrt(1.0 + (np.asarray(z) / zr) ** 2)


# --- Bloch projection and the single-band model ---------------------------------


def _zone_slots(grid, bs):
    """FFT indices of ``kappa_j + m kB`` for every zone node ``j`` and harmonic ``m``."""
    dk = 2.0 * np.pi / grid.length
    kb = bs.spec.k_bragg
    per_zone = kb / dk
    if abs(per_zone - round(per_zone)) > 1e-9 or round(per_zone) != bs.kappa.size:
        raise InterpolationRangeError(
            f"grid spacing 2pi/L={dk:.6g} does not match the zone grid of {bs.kappa.size} nodes"
        )
    m = np.arange(-bs.m_max, bs.m_max + 1)
    j = np.rint((bs.kappa[:, None] + m[None, :] * kb) / dk).astype(int)
    if np.abs(j).max() >= grid.n_points // 2:
        raise InterpolationRangeError("grid too coarse for the plane-wave basis of the bands")
    return np.mod(j, grid.n_points)


def _smooth_gauge(bs, band):
    """Band vectors and partners with the ``m = 0`` component made real positive."""
    c = bs.vectors[band].copy()
    y = bs.left[band].copy()
    g = c[:, bs.m_max] / np.abs(c[:, bs.m_max])
    return c / g[:, None], y * g[:, None]


def bloch_project(f, bs, band=0):
    """Amplitudes ``b(kappa)`` of ``f`` on band ``band`` over the zone nodes of ``bs``.

    Uses the biorthogonal partner: ``b = D y . psi_hat``. ``bs`` must be
    normalised and built on the zone grid ``2 pi j / L`` of ``f.grid``.
    """
    slots = _zone_slots(f.grid, bs)
    # phase-referenced to x = 0 so amplitudes vary slowly over kappa
    psi_hat = scipy.fft.fft(f.psi) * np.exp(-1j * f.grid.k * f.grid.x_min) / f.grid.n_points
    c, y = _smooth_gauge(bs, band)
    return bs.d_signs[band] * np.einsum("jm,jm->j", y, psi_hat[slots])


def bloch_reconstruct(amplitudes, bs, grid, band=0):
    """Field ``sum_kappa b(kappa) phi(x, kappa)`` for amplitudes from :func:`bloch_project`."""
    slots = _zone_slots(grid, bs)
    c, _ = _smooth_gauge(bs, band)
    psi_hat = np.zeros(grid.n_points, dtype=complex)
    np.add.at(psi_hat, slots, amplitudes[:, None] * c)
    return Field(grid, scipy.fft.ifft(psi_hat * np.exp(1j * grid.k * grid.x_min)) * grid.n_points, 0.0)


def zak_sign(bs, band=0):
    """Relative phase between the two zone-edge copies of the band's Bloch function.

    With the ``m = 0`` gauge, ``phi(kappa + kB) = zak_sign * phi(kappa)``
    across the zone boundary.
    """
    c, _ = _smooth_gauge(bs, band)
    m0 = bs.m_max
    kb = bs.spec.k_bragg
    j = int(np.argmin(np.abs(bs.kappa + 0.5 * kb)))
    if abs(bs.kappa[j] + 0.5 * kb) > 1e-12 * kb:
        raise InterpolationRangeError("zone grid must contain -kB/2")
    edge = c[j]
    # the +kB/2 copy has its m=0 component at the -kB/2 node's m=+1 slot
    return np.conj(edge[m0 + 1]) / abs(edge[m0 + 1])


def singleband_propagate(c0, kappa, band_energy, phi, drive, spec, z, n_steps=2048, zak=1.0):
    """Single-band evolution of zone amplitudes by the method of characteristics.

    ``c(z, kappa) = c(0, kappa - k(z)) exp{-(i/lbar) int_0^z [E - i F Phi](kappa')}``
    with ``kappa' = kappa - k(z) + k(z')``. The integral is composite
    Simpson on ``n_steps`` (even) intervals. ``zak`` is the phase picked up
    per zone-boundary crossing of the start point (see :func:`zak_sign`).

    ``band_energy`` and ``phi`` are callables or ``(kappa, values)`` tables.
    """
    lbar = spec.lambdabar
    kb = spec.k_bragg
    kappa = np.asarray(kappa, dtype=float)
    c0 = np.asarray(c0)
    if n_steps % 2:
        n_steps += 1
    e_fn = band_energy if callable(band_energy) else PeriodicTable(*band_energy, kb)
    phi_fn = phi if callable(phi) else PeriodicTable(*phi, kb)
    c0_fn = PeriodicTable(kappa, c0, kb)
    if z == 0:
        return c0.astype(complex).copy()
    kz = float(drive.k(z, lbar)) if drive is not None else 0.0
    zs = np.linspace(0.0, z, n_steps + 1)
    weights = np.full(n_steps + 1, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    weights *= (z / n_steps) / 3.0
    if drive is None:
        shift = np.zeros_like(zs)
        force = np.zeros_like(zs)
    else:
        shift = drive.k(zs, lbar) - kz
        force = drive.force(zs)
    kp = kappa[:, None] + shift[None, :]
    integrand = e_fn(kp) - 1j * force[None, :] * phi_fn(kp)
    phase = integrand @ weights
    start = kappa - kz
    # number of zone boundaries crossed going from the start point back into the zone
    wraps = np.floor((start + 0.5 * kb) / kb)
    return c0_fn(start) * zak ** (-wraps) * np.exp(-1j * phase / lbar)


# --- staircase analysis of P(z) ---------------------------------------------------


@dataclass(frozen=True)
class JumpEvent:
    """An abrupt rise of ``P``: ``z`` is where the amplitude is half-way (``P`` a quarter up)."""

    z: float
    z_start: float
    z_end: float
    before: float
    after: float

    @property
    def height(self):
        return self.after - self.before


def detect_jumps(z, P, span, rise=0.1):
    """Find rises of ``P`` by more than ``rise`` within ``span``.

    ``P`` is first smoothed with a running mean over ``span`` to suppress the
    ripple that follows each jump. Windows ``[z, z + span]`` whose smoothed
    gain exceeds ``rise`` are merged into events. ``before`` and ``after``
    are means of the raw ``P`` over ``span`` on either side, clipped at
    neighbouring events and the ends of the record.
    """
    z = np.asarray(z, dtype=float)
    P = np.asarray(P, dtype=float)
    if z.size < 3 or np.any(np.diff(z) <= 0):
        raise ValueError("need >= 3 strictly increasing records")
    smooth = np.array([_window_mean(z, P, zi - 0.5 * span, zi + 0.5 * span) for zi in z])
    end = np.searchsorted(z, z + span, side="right") - 1
    hot = (smooth[end] - smooth > rise) & (end > np.arange(z.size))
    regions = []
    for i in np.nonzero(hot)[0]:
        lo, hi = z[i], z[end[i]]
        if regions and lo <= regions[-1][1]:
            regions[-1][1] = max(regions[-1][1], hi)
        else:
            regions.append([lo, hi])
    events = []
    for r, (lo, hi) in enumerate(regions):
        lo_lim = regions[r - 1][1] if r else z[0]
        hi_lim = regions[r + 1][0] if r + 1 < len(regions) else z[-1]
        before = _window_mean(z, P, max(lo - span, lo_lim), lo)
        after = _window_mean(z, P, hi, min(hi + span, hi_lim))
        target = before + 0.25 * (after - before)
        sel = np.nonzero((z >= lo) & (z <= hi) & (P >= target))[0]
        k = int(sel[0]) if sel.size else int(np.searchsorted(z, lo))
        if k > 0 and P[k] != P[k - 1]:
            zq = float(np.interp(target, [P[k - 1], P[k]], [z[k - 1], z[k]]))
        else:
            zq = float(z[k])
        events.append(JumpEvent(zq, float(lo), float(hi), before, after))
    return events


def _window_mean(z, y, lo, hi):
    sel = (z >= lo) & (z <= hi)
    if sel.sum() < 2:
        return float(np.interp(0.5 * (lo + hi), z, y))
    return float(np.trapezoid(y[sel], z[sel]) / (z[sel][-1] - z[sel][0]))


def walkoff_slope(z, centroid, reference, window):
    """Least-squares slope of ``centroid - reference`` over ``window = (z_lo, z_hi)``."""
    z = np.asarray(z, dtype=float)
    sel = (z >= window[0]) & (z <= window[1])
    if sel.sum() < 2:
        raise ValueError("slope window holds fewer than two records")
    rel = np.asarray(centroid)[sel] - np.asarray(reference)[sel]
    return float(np.polyfit(z[sel], rel, 1)[0])
