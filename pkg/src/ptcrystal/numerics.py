"""Special functions, quadrature and root finding used across the package.

Kept in-repo so that the headline numbers (2.405, 0.95, 2.245) flow through
code that is pinned by tests against independent oracles.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NoSignChange, RangeError

_SERIES_LIMIT = 8.0
_J0_RANGE = 700.0


def _j0_series(x):
    q = 0.25 * x * x
    term = 1.0
    terms = [term]
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        terms.append(term)
        if abs(term) < 1e-18 and k > q:
            break
    return math.fsum(terms)


def _j0_miller(x):
    # Backward recurrence from well above x, normalised with J0 + 2*sum(J_2k) = 1.
    n = 2 * int((x + 30 + 10 * math.sqrt(x)) / 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    j0 = 0.0
    for k in range(n, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        j0 = j_cur
    norm += j0
    return j0 / norm


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Power series for ``|x| <= 8`` and Miller backward recurrence beyond; both
    are accurate to roughly 1e-14 absolute.

    Raises
    ------
    RangeError
        If ``|x| >= 700``.
    """
    x = abs(float(x))
    if not math.isfinite(x) or x >= _J0_RANGE:
        raise RangeError(f"bessel_j0 argument {x} outside |x| < {_J0_RANGE}")
    if x <= _SERIES_LIMIT:
        return _j0_series(x)
    return _j0_miller(x)


def bessel_j0_array(x):
    x = np.asarray(x, dtype=float)
    return np.vectorize(bessel_j0, otypes=[float])(x)


def airy_ai0():
    """Ai(0) = 3**(-2/3) / Gamma(2/3)."""
    return 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)


def fresnel_tail(x):
    """Asymptotic value of the integral of exp(i t**2) from ``x`` to infinity.

    Three terms of the integration-by-parts series; the error is below
    1e-9 for ``x >= 20``.
    """
    x = float(x)
    return np.exp(1j * x * x) * (0.5j / x + 0.25 / x**3 - 0.375j / x**5)


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "trapezoid"
    n_steps: int = 16
    tolerance: float = 1e-10
    max_doublings: int = 22

    def __post_init__(self):
        if self.rule not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")


def integrate(f, a, b, spec=QuadratureSpec()):
    """Integrate a vectorised ``f`` over ``[a, b]`` by adaptive step doubling.

    Each doubling reuses previous samples. The Simpson estimate is the
    Richardson combination of two successive trapezoid sums. Iteration stops
    when two successive estimates differ by less than ``spec.tolerance``.

    Raises
    ------
    NoConvergence
        If the tolerance is not met after ``spec.max_doublings`` doublings.
    """
    if b < a:
        raise ValueError("integrate requires a <= b")
    if a == b:
        return 0.0
    n = spec.n_steps
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x))
    h = (b - a) / n
    total = 0.5 * (y[0] + y[-1]) + y[1:-1].sum()
    trap = h * total
    prev = trap if spec.rule == "trapezoid" else None
    for _ in range(spec.max_doublings):
        mid = a + h * (np.arange(n) + 0.5)
        total = total + np.asarray(f(mid)).sum()
        n *= 2
        h *= 0.5
        new_trap = h * total
        if spec.rule == "trapezoid":
            est = new_trap
        else:
            est = (4.0 * new_trap - trap) / 3.0
        trap = new_trap
        if prev is not None and abs(est - prev) < spec.tolerance:
            return est
        prev = est
    raise NoConvergence(
        f"integrate did not reach tolerance {spec.tolerance} after {spec.max_doublings} doublings"
    )


def find_root_bracketed(f, lo, hi, tol=1e-12, max_iter=200):
    """Bisection on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo})={flo} and f({hi})={fhi} have the same sign")
    for _ in range(max_iter):
        if abs(hi - lo) < tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo, hi, tol=1e-10, max_iter=500):
    """Locate a minimum of a unimodal ``f`` on ``[lo, hi]``."""
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(hi - lo) < tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def cumulative_trapezoid(y, x):
    """Running trapezoid integral of samples ``y`` on nodes ``x``; starts at 0."""
    y = np.asarray(y)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(y, dtype=np.result_type(y, float))
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out
