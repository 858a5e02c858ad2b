"""Complex crystal potentials and their plane-wave representation."""

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class PotentialForm(enum.Enum):
    COS_SIN = "cossin"
    SINGLE_EXP = "singleexp"
    CUSTOM_FOURIER = "custom"


@dataclass(frozen=True)
class LatticeSpec:
    """Physical crystal.

    ``V(x) = V0 [cos(kB x) + i alpha sin(kB x)]`` for ``COS_SIN``,
    ``V0 exp(i kB x)`` for ``SINGLE_EXP`` (the ``alpha = 1`` member) and
    ``sum_m c_m exp(i m kB x)`` for ``CUSTOM_FOURIER`` with ``harmonics``
    given as ``(m, c_m)`` pairs. ``V0`` and ``alpha`` are ignored by the
    custom form.
    """

    a: float
    V0: float
    alpha: float = 0.0
    n_s: float = 1.42
    wavelength: float = 0.633
    form: PotentialForm = PotentialForm.COS_SIN
    harmonics: tuple = field(default=())

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "harmonics", tuple((int(m), complex(c)) for m, c in self.harmonics))

    def violations(self):
        out = []
        if not self.a > 0:
            out.append("a must be > 0")
        if not self.V0 >= 0:
            out.append("V0 must be >= 0")
        if not self.alpha >= 0:
            out.append("alpha must be >= 0")
        if not self.n_s > 0:
            out.append("n_s must be > 0")
        if not self.wavelength > 0:
            out.append("lambda must be > 0")
        if self.form is PotentialForm.CUSTOM_FOURIER and not self.harmonics:
            out.append("custom form needs at least one harmonic")
        return out

    @property
    def lambdabar(self):
        return self.wavelength / (2.0 * math.pi)

    @property
    def k_bragg(self):
        return 2.0 * math.pi / self.a

    def with_alpha(self, alpha):
        return LatticeSpec(self.a, self.V0, alpha, self.n_s, self.wavelength, self.form, self.harmonics)


def fourier_coefficients(spec, m_max=1):
    """Harmonics ``{m: V_m}`` for ``|m| <= m_max`` with ``V(x) = sum V_m e^{i m kB x}``."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    coeffs = {m: 0j for m in range(-m_max, m_max + 1)}
    if spec.form is PotentialForm.COS_SIN:
        coeffs[1] = complex(spec.V0 * (1.0 + spec.alpha) / 2.0)
        coeffs[-1] = complex(spec.V0 * (1.0 - spec.alpha) / 2.0)
    elif spec.form is PotentialForm.SINGLE_EXP:
        coeffs[1] = complex(spec.V0)
    else:
        for m, c in spec.harmonics:
            if abs(m) <= m_max:
                coeffs[m] += c
    return coeffs


def potential_eval(spec, x):
    """Complex potential at ``x`` (scalar or array), exact for every form."""
    x = np.asarray(x, dtype=float)
    kx = spec.k_bragg * x
    if spec.form is PotentialForm.COS_SIN:
        v = spec.V0 * (np.cos(kx) + 1j * spec.alpha * np.sin(kx))
    elif spec.form is PotentialForm.SINGLE_EXP:
        v = spec.V0 * np.exp(1j * kx)
    else:
        v = np.zeros_like(kx, dtype=complex)
        for m, c in spec.harmonics:
            v = v + c * np.exp(1j * m * kx)
    return v[()] if v.ndim == 0 else v


def pt_symmetry_check(spec, samples=257, tol=1e-12):
    """True iff ``max |V(-x) - conj(V(x))| <= tol`` over one sampled period."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    x = np.linspace(0.0, spec.a, samples)
    dev = np.abs(potential_eval(spec, -x) - np.conj(potential_eval(spec, x)))
    return bool(dev.max() <= tol)


def pt_symmetric_coefficients(spec, tol=1e-12):
    """Fourier-side PT test: ``V(-x) = V*(x)`` holds iff every ``V_m`` is real."""
    m_max = max([1] + [abs(m) for m, _ in spec.harmonics])
    return all(abs(c.imag) <= tol for c in fourier_coefficients(spec, m_max).values())
