"""Non-Hermitian Bloch bands of the undriven crystal.

Plane-wave Hamiltonian at quasimomentum ``kappa``::

    H[m, m'] = delta_{mm'} lbar**2 (kappa + m kB)**2 / (2 n_s) + V_{m - m'}

For a PT-symmetric potential every ``V_m`` is real, so ``H`` is a real,
non-symmetric matrix and in the unbroken phase its eigenvectors can be
gauged real. The biorthogonal partner of a Bloch state at ``kappa`` is the
parity-time image of the state at ``-kappa``; in plane-wave coefficients the
pairing reads ``sum_m conj(c_m(-kappa)) c_{-m}(kappa)``.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import (
    DefectivePairing,
    EigensolveFailure,
    GapClosure,
    GaugeFixFailure,
    NoBreakingFound,
)
from .lattice import fourier_coefficients
from .numerics import find_root_bracketed

REALITY_TOL = 1e-9
PAIRING_TOL = 1e-6


def kappa_grid(k_bragg, n_kappa):
    """Uniform zone grid ``-kB/2 + j kB/n``; contains 0 and the zone edge for even n."""
    return -0.5 * k_bragg + np.arange(n_kappa) * (k_bragg / n_kappa)


def bloch_matrix(spec, kappa, m_max=12):
    if abs(kappa) > 0.5 * spec.k_bragg * (1 + 1e-12):
        raise ValueError(f"kappa={kappa} outside the first Brillouin zone")
    return _bloch_matrix(spec, kappa, m_max)


def _bloch_matrix(spec, kappa, m_max):
    # no zone check: finite differences step just past the zone edge
    m = np.arange(-m_max, m_max + 1)
    n = m.size
    h = np.diag(spec.lambdabar**2 * (kappa + m * spec.k_bragg) ** 2 / (2.0 * spec.n_s)).astype(complex)
    for d, c in fourier_coefficients(spec, 2 * m_max).items():
        if c != 0 and abs(d) < n:
            h += c * np.eye(n, k=-d)
    return h


def _eig(h, left=False):
    try:
        out = scipy.linalg.eig(h, left=left, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveFailure(str(exc)) from exc
    if not all(np.all(np.isfinite(o)) for o in out):
        raise EigensolveFailure("non-finite eigen-decomposition; check m_max and conditioning")
    return out


def _gauge(v, index=None):
    """Rotate ``v`` so that component ``index`` (default: the largest) is real positive."""
    if index is None:
        index = int(np.argmax(np.abs(v)))
    c = v[index]
    if c == 0:
        return v
    return v * (np.conj(c) / abs(c))


def _match(ref, cand):
    """Column permutation of ``cand`` maximising overlap with the columns of ``ref``."""
    ov = np.abs(ref.conj().T @ cand)
    rows, cols = linear_sum_assignment(-ov)
    perm = np.empty(ref.shape[1], dtype=int)
    perm[rows] = cols
    return perm


@dataclass
class BandStructure:
    """Tracked bands.

    ``energies`` has shape ``(n_bands, n_kappa)``; ``vectors`` and ``left``
    have shape ``(n_bands, n_kappa, 2 m_max + 1)``. ``left`` and
    ``d_signs`` are filled in by :func:`normalize_biorthogonal`.
    """

    spec: object
    kappa: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    m_max: int
    unbroken: bool
    reality_tol: float = REALITY_TOL
    d_signs: np.ndarray = None
    left: np.ndarray = None
    min_pairing: float = None

    @property
    def n_bands(self):
        return self.energies.shape[0]

    def zero_index(self):
        return int(np.argmin(np.abs(self.kappa)))


def _eigen_sorted(spec, kappa, m_max):
    w, vr = _eig(bloch_matrix(spec, kappa, m_max))
    order = np.argsort(w.real, kind="stable")
    return w[order], vr[:, order]


def band_structure(spec, n_kappa=64, m_max=12, n_bands=4, reality_tol=REALITY_TOL):
    """Eigensolve on the zone grid and follow each band by eigenvector overlap.

    References for the overlap are refreshed only where a state is
    non-degenerate, so exceptional points (``alpha = 1``) do not scramble the
    assignment. Bands are returned ordered by ``Re E`` at ``kappa = 0``.
    """
    n_pw = 2 * m_max + 1
    if n_kappa < 8:
        raise ValueError("n_kappa must be >= 8")
    if not 1 <= n_bands <= n_pw:
        raise ValueError("n_bands must be in [1, 2*m_max+1]")
    kappa = kappa_grid(spec.k_bragg, n_kappa)
    energies = np.empty((n_kappa, n_pw), dtype=complex)
    vectors = np.empty((n_kappa, n_pw, n_pw), dtype=complex)
    ref = None
    for j, q in enumerate(kappa):
        w, vr = _eig(bloch_matrix(spec, q, m_max))
        if ref is None:
            order = np.argsort(w.real, kind="stable")
            ref = vr[:, order].copy()
        else:
            order = _match(ref, vr)
        w, vr = w[order], vr[:, order]
        gap = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(n_pw, np.inf))
        scale = max(np.abs(w).max(), 1e-300)
        fresh = gap.min(axis=1) > 1e-12 * scale
        ref[:, fresh] = vr[:, fresh]
        energies[j] = w
        vectors[j] = vr
    j0 = int(np.argmin(np.abs(kappa)))
    keep = np.argsort(energies[j0].real, kind="stable")[:n_bands]
    e = energies[:, keep].T.copy()
    v = np.transpose(vectors[:, :, keep], (2, 0, 1)).copy()
    for b in range(n_bands):
        for j in range(n_kappa):
            v[b, j] = _gauge(v[b, j])
    unbroken = bool(np.abs(e.imag).max() <= reality_tol)
    return BandStructure(spec, kappa, e, v, m_max, unbroken, reality_tol)


def max_imag_energy(spec, n_kappa=33, m_max=12, n_bands=4):
    """Largest ``|Im E|`` among the ``n_bands`` lowest states over ``[0, kB/2]``.

    Both ``kappa = 0`` and the zone edge are sampled, where bands first merge.
    """
    worst = 0.0
    for q in np.linspace(0.0, 0.5 * spec.k_bragg, n_kappa):
        w = scipy.linalg.eigvals(bloch_matrix(spec, q, m_max))
        if not np.all(np.isfinite(w)):
            raise EigensolveFailure(f"non-finite eigenvalues at kappa={q}")
        w = w[np.argsort(w.real, kind="stable")][:n_bands]
        worst = max(worst, float(np.abs(w.imag).max()))
    return worst


def symmetry_breaking_scan(spec, alpha_values, reality_tol=REALITY_TOL, n_kappa=33, m_max=12,
                           n_bands=4, tol=1e-4):
    """Estimate alpha_c: first sampled alpha with complex energies, refined by bisection.

    Raises
    ------
    NoBreakingFound
        When every sampled alpha gives a real spectrum ("above range").
    """
    alphas = np.asarray(alpha_values, dtype=float)
    if np.any(np.diff(alphas) < 0):
        raise ValueError("alpha_values must be sorted ascending")

    def broken(alpha):
        return max_imag_energy(spec.with_alpha(alpha), n_kappa, m_max, n_bands) > reality_tol

    last_real = None
    for alpha in alphas:
        if broken(alpha):
            if last_real is None:
                return float(alpha)
            return find_root_bracketed(lambda al: 1.0 if broken(al) else -1.0, last_real, alpha, tol=tol)
        last_real = alpha
    raise NoBreakingFound(f"spectrum real for all alpha in [{alphas[0]}, {alphas[-1]}] (above range)")


def _pt_pair(r, r_mirror, d):
    """Scale a right vector and its mirror so that the PT pairing equals ``d``.

    Returns ``(c, y, |P|)`` with ``y . c = d``; ``y`` is the parity-time image
    of the state at ``-kappa``.
    """
    p = np.dot(np.conj(r_mirror), r[::-1])
    if d * p.real < 0:
        r_mirror = -r_mirror
        p = -p
    s = 1.0 / np.sqrt(d * p)
    return s * r, s * np.conj(r_mirror)[::-1], abs(p)


def _d_signs(spec, m_max, n_bands):
    _, vr = _eigen_sorted(spec, 0.0, m_max)
    p = np.einsum("mb,mb->b", np.conj(vr[:, :n_bands]), vr[::-1, :n_bands])
    return np.where(p.real >= 0, 1, -1)


def _mirror_states(bs, j):
    """Gauge-fixed states at ``-kappa_j`` for every tracked band."""
    q = bs.kappa[j]
    hits = np.nonzero(np.isclose(bs.kappa, -q, rtol=0, atol=1e-12 * bs.spec.k_bragg))[0]
    if hits.size:
        return bs.vectors[:, hits[0]]
    w, vr = _eig(bloch_matrix(bs.spec, -q, bs.m_max))
    out = np.empty_like(bs.vectors[:, j])
    for b in range(bs.n_bands):
        k = int(np.argmin(np.abs(w - bs.energies[b, j])))
        out[b] = _gauge(vr[:, k])
    return out


def normalize_biorthogonal(bs, pairing_tol=PAIRING_TOL):
    """Fix the biorthogonal normalisation and signs ``D_n``.

    ``D_n`` is the sign of the (gauge-invariant, real) PT pairing of band
    ``n`` at ``kappa = 0``. Left eigenvectors from the adjoint matrix, paired
    by eigenvalue proximity, supply the conditioning check.

    Raises
    ------
    DefectivePairing
        If ``|<L|R>| / (|L| |R|)`` drops below ``pairing_tol`` for any band,
        which happens at and near exceptional points.
    """
    spec = bs.spec
    d = _d_signs(spec, bs.m_max, bs.n_bands)
    vectors = np.empty_like(bs.vectors)
    left = np.empty_like(bs.vectors)
    worst = np.inf
    for j, q in enumerate(bs.kappa):
        h = bloch_matrix(spec, q, bs.m_max)
        wl, vl = _eig(h.conj().T)
        mirror = _mirror_states(bs, j)
        for b in range(bs.n_bands):
            r = bs.vectors[b, j]
            k = int(np.argmin(np.abs(wl - np.conj(bs.energies[b, j]))))
            ell = vl[:, k]
            cond = abs(np.vdot(ell, r)) / (np.linalg.norm(ell) * np.linalg.norm(r))
            worst = min(worst, cond)
            if cond < pairing_tol:
                raise DefectivePairing(
                    f"band {b} at kappa={q:.6g}: |<L|R>| = {cond:.3g} below {pairing_tol:g}"
                )
            vectors[b, j], left[b, j], _ = _pt_pair(r, mirror[b], d[b])
    return replace(bs, vectors=vectors, left=left, d_signs=d, min_pairing=float(worst))


def pairing_matrix(bs, j):
    """``M[n, l] = y_n . c_l`` at grid index ``j``; equals ``diag(D)`` when biorthonormal."""
    if bs.left is None:
        raise ValueError("call normalize_biorthogonal first")
    return bs.left[:, j] @ bs.vectors[:, j].T


def _local_states(spec, q, m_max, ref, ref_mirror, d, idx, idx_mirror):
    """Normalised states and partners at ``q`` continuing reference vectors."""
    _, vr = _eig(_bloch_matrix(spec, q, m_max))
    _, vm = _eig(_bloch_matrix(spec, -q, m_max))
    perm = _match(ref.T, vr)
    perm_m = _match(ref_mirror.T, vm)
    c = np.empty_like(ref)
    y = np.empty_like(ref)
    for b in range(ref.shape[0]):
        r = _gauge(vr[:, perm[b]], idx[b])
        rm = _gauge(vm[:, perm_m[b]], idx_mirror[b])
        c[b], y[b], _ = _pt_pair(r, rm, d[b])
    return c, y


@dataclass
class DipoleData:
    """``phi`` has shape ``(n_bands, n_kappa)``; ``X`` has ``(n_kappa, n_bands, n_bands)``."""

    kappa: np.ndarray
    phi: np.ndarray
    X: np.ndarray

    @property
    def phi_real(self):
        return self.phi.real


def dipole_terms(bs, dk=None, order=4):
    """Couplings ``X[n, l](kappa)`` and ``Phi_n = -i D_n X[n, n]`` (units of um).

    ``d/dkappa`` of the normalised Bloch vectors is a centred difference
    (``order`` 2 or 4) with the gauge of the neighbours pinned to the same
    component as the centre. The cell integral reduces exactly to
    ``X = i y_n . dc_l/dkappa``.
    """
    if bs.d_signs is None:
        raise ValueError("call normalize_biorthogonal first")
    if not bs.unbroken:
        raise GapClosure("dipole terms need the unbroken phase")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    spec = bs.spec
    if dk is None:
        dk = (1e-4 if order == 2 else 1.5e-4) * spec.k_bragg
    nb = bs.n_bands
    X = np.empty((bs.kappa.size, nb, nb), dtype=complex)
    phi = np.empty((nb, bs.kappa.size), dtype=complex)
    for j, q in enumerate(bs.kappa):
        ref = bs.vectors[:, j]
        ref_m = _mirror_states(bs, j)
        idx = np.argmax(np.abs(ref), axis=1)
        idx_m = np.argmax(np.abs(ref_m), axis=1)
        fixed = (bs.m_max, ref, ref_m, bs.d_signs, idx, idx_m)
        c0, y0 = _local_states(spec, q, *fixed)
        cp, _ = _local_states(spec, q + dk, *fixed)
        cm, _ = _local_states(spec, q - dk, *fixed)
        jump = np.linalg.norm(cp - cm, axis=1) / np.linalg.norm(c0, axis=1)
        if np.any(jump > 0.5):
            raise GaugeFixFailure(f"gauge discontinuity at kappa={q:.6g}; refine dk or the grid")
        if order == 2:
            dc = (cp - cm) / (2.0 * dk)
        else:
            cpp, _ = _local_states(spec, q + 2 * dk, *fixed)
            cmm, _ = _local_states(spec, q - 2 * dk, *fixed)
            dc = (8.0 * (cp - cm) - (cpp - cmm)) / (12.0 * dk)
        X[j] = 1j * (y0 @ dc.T)
        phi[:, j] = -1j * bs.d_signs * np.diag(X[j])
    return DipoleData(bs.kappa.copy(), phi, X)


@dataclass(frozen=True)
class BandFit:
    E0: float
    Delta: float
    rms_residual: float

    @property
    def relative_residual(self):
        return self.rms_residual / abs(self.Delta) if self.Delta else np.inf

    @property
    def poor(self):
        return self.relative_residual > 0.05


def sinusoidal_fit_values(kappa, energy, a):
    """Least-squares ``E(kappa) ~ E0 - Delta cos(kappa a)``."""
    design = np.column_stack([np.ones_like(kappa), -np.cos(kappa * a)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(energy, dtype=float), rcond=None)
    resid = energy - design @ coef
    return BandFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))))


def sinusoidal_fit(bs, band=0):
    return sinusoidal_fit_values(bs.kappa, bs.energies[band].real, bs.spec.a)


def single_band_validity(bs, dd, F0, band=0, other=1):
    """``max_kappa |F0 X[band, other]| / |E_band - E_other|`` (Zener-tunnelling ratio)."""
    if bs.n_bands < 2:
        raise ValueError("need at least two tracked bands")
    gap = np.abs(bs.energies[band] - bs.energies[other])
    if gap.min() < 1e-12:
        raise GapClosure(f"bands {band} and {other} touch (min gap {gap.min():.3g})")
    return float(np.max(np.abs(F0 * dd.X[:, band, other]) / gap))
