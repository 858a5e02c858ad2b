import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptcrystal import DriveSpec, LatticeSpec
from ptcrystal import bragg
from ptcrystal.errors import NoCrossing, RegimeMismatch, UnderResolvedPhase
from ptcrystal.numerics import QuadratureSpec, integrate


def drive(fc, ratio, Lambda=1e4):
    return DriveSpec(ratio * fc, Lambda)


@pytest.fixture(scope="module")
def cascade_15(edge_spec, edge_fc):
    d = drive(edge_fc, 1.5)
    return bragg.cascade_amplitudes(edge_spec, d, 3, bragg.default_z_grid(edge_spec, d, 3, z_end=2e4))


def test_k_of_z_values(edge_spec):
    d = DriveSpec(2e-5, 1e4)
    lb = edge_spec.lambdabar
    assert bragg.k_of_z(d, 0.0, lb) == 0
    assert bragg.k_of_z(d, 2500.0, lb) == pytest.approx(d.F0 / (lb * d.omega))
    assert abs(bragg.k_of_z(d, 1e4, lb)) < 1e-15


def test_gamma_undriven_and_full_period(edge_spec):
    lb, ns, kb = edge_spec.lambdabar, edge_spec.n_s, edge_spec.k_bragg
    assert bragg.gamma_n(DriveSpec(0.0, 1e4), edge_spec, 2, 300.0) == pytest.approx(lb * 4 * kb**2 * 300 / (2 * ns))
    d = DriveSpec(5e-5, 1e4)
    K = d.F0 / (lb * d.omega)
    assert bragg.gamma_n(d, edge_spec, 0, 1e4) == pytest.approx(lb / (2 * ns) * K**2 * 5e3, rel=1e-12)


def test_gamma_closed_form_against_quadrature(edge_spec, edge_fc):
    rng = np.random.default_rng(12)
    lb, ns, kb = edge_spec.lambdabar, edge_spec.n_s, edge_spec.k_bragg
    d = drive(edge_fc, 1.5)
    q = QuadratureSpec("simpson", tolerance=1e-13, max_doublings=16)
    for n, z in zip(rng.integers(0, 4, 20), rng.uniform(0, 2e4, 20)):
        ref = lb / (2 * ns) * integrate(lambda x: (n * kb + d.k(x, lb)) ** 2, 0.0, z, q)
        got = float(bragg.gamma_n(d, edge_spec, int(n), z))
        assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_phi_is_gamma_difference(edge_spec, edge_fc):
    d = drive(edge_fc, 3.0)
    z = np.linspace(0, 1e4, 17)
    for n in (1, 2, 3):
        diff = bragg.gamma_n(d, edge_spec, n, z) - bragg.gamma_n(d, edge_spec, n - 1, z)
        assert np.allclose(bragg.phi_n(d, edge_spec, n, z), diff, rtol=1e-12, atol=1e-9)


def test_second_derivative_at_linear_point(edge_spec, edge_fc):
    d = drive(edge_fc, 1.5)
    h = 2.0

    def phi(z):
        return float(bragg.gamma_n(d, edge_spec, 1, z) - bragg.gamma_n(d, edge_spec, 0, z))

    for p in bragg.stationary_points(d, edge_spec, 1):
        z0 = p.z0
        fd = (-phi(z0 + 2 * h) + 16 * phi(z0 + h) - 30 * phi(z0) + 16 * phi(z0 - h) - phi(z0 - 2 * h)) / (12 * h * h)
        rule = float(d.force(z0)) * edge_spec.k_bragg / edge_spec.n_s
        assert abs(fd - rule) < 1e-8 * abs(rule)
        assert float(bragg.phi_derivative(d, edge_spec, 1, z0, 2)) == pytest.approx(rule, rel=1e-14)


def test_phi_first_derivative_vanishes_at_points(edge_spec, edge_fc):
    d = drive(edge_fc, 3.0)
    for n in (1, 2):
        for p in bragg.stationary_points(d, edge_spec, n):
            k = bragg.k_of_z(d, p.z0, edge_spec.lambdabar)
            assert k == pytest.approx(-edge_spec.k_bragg * (n - 0.5), rel=1e-10)
            scale = edge_spec.lambdabar * edge_spec.k_bragg**2 / edge_spec.n_s
            assert abs(float(bragg.phi_derivative(d, edge_spec, n, p.z0))) < 1e-9 * scale


def test_critical_force(edge_spec, edge_fc):
    assert abs(edge_fc - 3.314e-5) < 1e-8
    assert bragg.critical_force(edge_spec, DriveSpec(1.0, 2e4)) == pytest.approx(edge_fc / 2)
    wide = LatticeSpec(12.0, 2e-4, form=edge_spec.form)
    assert bragg.critical_force(wide, DriveSpec(1.0, 1e4)) == pytest.approx(edge_fc / 2)


def test_stationary_points_at_fc(edge_spec, edge_fc):
    (p,) = bragg.stationary_points(drive(edge_fc, 1.0), edge_spec, 1)
    assert p.kind == bragg.PARABOLIC and p.z0 == pytest.approx(7500.0)


def test_stationary_points_at_one_and_a_half_fc(edge_spec, edge_fc):
    pts = bragg.stationary_points(drive(edge_fc, 1.5), edge_spec, 1)
    # sin(w z0) = -2/3
    expected = [0.5 + math.asin(2 / 3) / (2 * math.pi), 1 - math.asin(2 / 3) / (2 * math.pi)]
    assert [p.kind for p in pts] == [bragg.LINEAR] * 2
    assert [p.z0 / 1e4 for p in pts] == pytest.approx(expected, abs=1e-10)
    assert [round(p.z0 / 1e4, 4) for p in pts] == [0.6161, 0.8839]


def test_no_crossing_below_fc(edge_spec, edge_fc):
    with pytest.raises(NoCrossing):
        bragg.stationary_points(drive(edge_fc, 0.5), edge_spec, 1)
    with pytest.raises(NoCrossing):
        bragg.stationary_points(drive(edge_fc, 2.9), edge_spec, 2)


def test_second_order_parabolic_at_three_fc(edge_spec, edge_fc):
    (p,) = bragg.stationary_points(drive(edge_fc, 3.0), edge_spec, 2)
    assert p.kind == bragg.PARABOLIC
    k = bragg.k_of_z(drive(edge_fc, 3.0), p.z0, edge_spec.lambdabar)
    assert k == pytest.approx(-1.5 * edge_spec.k_bragg)


def test_jump_factor_linear(edge_spec, edge_fc):
    d = drive(edge_fc, 1.5)
    lb, ns, kb, v0 = edge_spec.lambdabar, edge_spec.n_s, edge_spec.k_bragg, edge_spec.V0
    closed = v0 / lb * math.sqrt(2 * math.pi * ns / (kb * math.sqrt(d.F0**2 - edge_fc**2)))
    for p in bragg.stationary_points(d, edge_spec, 1):
        r = bragg.jump_factor(edge_spec, d, p)
        assert r == pytest.approx(closed, rel=1e-12)
        assert abs(r - 0.95) < 0.01


def test_jump_factor_parabolic(edge_spec, edge_fc):
    d = drive(edge_fc, 1.0)
    (p,) = bragg.stationary_points(d, edge_spec, 1)
    lb, ns, kb, v0 = edge_spec.lambdabar, edge_spec.n_s, edge_spec.k_bragg, edge_spec.V0
    ai0 = float(mpmath.airyai(0))
    closed = v0 / lb * 2 * math.pi * ai0 * (4 * ns / (lb * d.omega**2 * kb**2)) ** (1 / 3)
    r = bragg.jump_factor(edge_spec, d, p)
    assert r == pytest.approx(closed, rel=1e-12)
    assert abs(r - 2.245) < 0.01


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=20.0, max_value=1e4))
def test_linear_jump_decays_as_inverse_sqrt_force(edge_spec, edge_fc, ratio):
    d1, d2 = drive(edge_fc, ratio), drive(edge_fc, 4 * ratio)
    r1 = bragg.jump_factor(edge_spec, d1, bragg.stationary_points(d1, edge_spec, 1)[0])
    r2 = bragg.jump_factor(edge_spec, d2, bragg.stationary_points(d2, edge_spec, 1)[0])
    assert r1 / r2 == pytest.approx(2.0, rel=2e-3)


def test_regime_mismatch(edge_spec, edge_fc):
    point = bragg.StationaryPoint(1, 7500.0, bragg.LINEAR)
    with pytest.raises(RegimeMismatch):
        bragg.jump_factor(edge_spec, drive(edge_fc, 1.0), point)


def test_cascade_rejects_two_harmonic_lattice(cossin_spec):
    with pytest.raises(ValueError, match="single"):
        bragg.jump_factor(cossin_spec, DriveSpec(1e-4, 1e4), bragg.StationaryPoint(1, 7500.0, bragg.PARABOLIC))


@pytest.mark.parametrize("ratio", [1.0, 1.5])
def test_numerical_jump_factor_matches_stationary_phase(edge_spec, edge_fc, ratio):
    d = drive(edge_fc, ratio)
    for p in bragg.stationary_points(d, edge_spec, 1):
        assert bragg.numerical_jump_factor(edge_spec, d, p) == pytest.approx(bragg.jump_factor(edge_spec, d, p),
                                                                            rel=0.03)


def test_numerical_jump_factor_window_sensitivity(edge_spec, edge_fc):
    d = drive(edge_fc, 1.0)
    (p,) = bragg.stationary_points(d, edge_spec, 1)
    vals = list(bragg.jump_factor_sensitivity(edge_spec, d, p).values())
    assert np.ptp(vals) < 0.03 * np.mean(vals)


def test_cascade_zero_order_fixed(cascade_15):
    assert np.all(cascade_15.amplitudes[0] == 1)
    assert cascade_15.amplitudes.shape[0] == 4


def test_cascade_first_jump_reaches_r(cascade_15, edge_spec):
    z = cascade_15.z
    first = cascade_15.points[0]
    a1 = np.abs(cascade_15.amplitudes[1])
    before = a1[z < first.z0 - 2000].max()
    plateau = a1[(z > 7000) & (z < 7800)].mean()
    assert before < 0.1
    assert plateau == pytest.approx(0.95, rel=0.1)


def test_subcritical_cascade_stays_small(edge_spec, edge_fc):
    d = drive(edge_fc, 0.5)
    cr = bragg.cascade_amplitudes(edge_spec, d, 3, bragg.default_z_grid(edge_spec, d, 3, z_end=3e4))
    assert cr.points == []
    assert np.abs(cr.amplitudes[1]).max() < 0.2
    power, summary = bragg.staircase_prediction(cr)
    assert summary == []
    assert np.abs(power - 1).max() < 0.03


def test_first_power_jump(cascade_15):
    _, summary = bragg.staircase_prediction(cascade_15)
    assert summary[0]["power_jump"] == pytest.approx(0.90, rel=0.1)


def test_jump_rule_residuals(cascade_15, edge_spec, edge_fc):
    _, summary = bragg.staircase_prediction(cascade_15)
    assert max(s["residual"] for s in summary) < 0.05


def test_second_order_events_at_three_fc(edge_spec, edge_fc):
    d = drive(edge_fc, 3.0)
    cr = bragg.cascade_amplitudes(edge_spec, d, 3, bragg.default_z_grid(edge_spec, d, 3))
    orders = {(p.n, p.kind) for p in cr.points}
    assert orders == {(1, bragg.LINEAR), (2, bragg.PARABOLIC)}
    a2 = np.abs(cr.amplitudes[2])
    assert a2[cr.z > 8500].mean() > 5 * a2[cr.z < 6500].max()


def test_under_resolved_phase(edge_spec, edge_fc):
    with pytest.raises(UnderResolvedPhase):
        bragg.cascade_amplitudes(edge_spec, drive(edge_fc, 1.5), 2, np.linspace(0, 1e4, 200))


@pytest.mark.xfail(strict=True, reason="|da_n/dz| = (V0/lbar)|a_(n-1)| never vanishes; literal bound unattainable")
def test_flatness_literal(cascade_15):
    z = cascade_15.z
    pts = [p for p in cascade_15.points if p.n == 1]
    for p, q in zip(pts[:-1], pts[1:]):
        sel = (z > p.z0) & (z < q.z0)
        a = cascade_15.amplitudes[1][sel]
        slope = np.abs(np.diff(a) / np.diff(z[sel])).max()
        assert slope * (q.z0 - p.z0) < 0.05 * np.abs(a).mean()


def test_plateau_ripple_between_distant_crossings(cascade_15):
    # 8839 -> 16161: the long stretch where k(z) stays far from the zone edge
    z = cascade_15.z
    lo, hi = 8839 + 0.25 * 7322, 16161 - 0.25 * 7322
    a = np.abs(cascade_15.amplitudes[1][(z > lo) & (z < hi)])
    assert np.ptp(a) < 0.05 * a.mean()
