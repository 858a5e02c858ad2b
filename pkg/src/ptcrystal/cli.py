"""Command-line front end: ``ptcrystal <command> --config run.ini [--out DIR] [--strict]``.

Exit codes: 0 success, 2 configuration error, 3 numerical or physics
failure, 4 validity warning escalated by ``--strict``.
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bloch, bragg, propagator, quasienergy
from .config import parse_config
from .csvout import write_csv
from .errors import (
    ConfigError,
    DegenerateBandWarning,
    NoBreakingFound,
    NumericalError,
    PhysicsError,
    PhysicsValidityWarning,
)

COMMANDS = ("bands", "alpha-scan", "quasienergy", "dl-scan", "propagate", "cascade", "compare-staircase")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_STRICT = 0, 2, 3, 4


class Context:
    def __init__(self, cfg, command, out, figures):
        self.cfg = cfg
        self.command = command
        self.out = Path(out)
        self.figures = figures
        self.written = []

    def csv(self, name, columns, rows, notes=()):
        self.written.append(write_csv(self.out / name, columns, rows, self.cfg.digest, self.command, notes))

    def figure(self, name, fn, *args, **kwargs):
        if self.figures:
            self.written.append(fn(self.out / name, *args, **kwargs))


def _require(cfg, *parts):
    missing = [p for p in parts if getattr(cfg, p) is None]
    if missing:
        raise ConfigError([f"{p}: section required for this command" for p in missing])


def _validity(ctx, bs, fit=None):
    """Zener ratio of the lowest band (and fit quality); warn when over threshold."""
    cfg = ctx.cfg
    ratio = float("nan")
    if cfg.drive is not None and bs.n_bands >= 2 and bs.unbroken:
        nb = bloch.normalize_biorthogonal(bs)
        dd = bloch.dipole_terms(_subset(nb, 2))
        ratio = bloch.single_band_validity(_subset(nb, 2), dd, cfg.drive.F0)
        if ratio > cfg.run["validity_threshold"]:
            warnings.warn(f"interband coupling ratio {ratio:.3g} exceeds "
                          f"{cfg.run['validity_threshold']:g}; single-band model questionable",
                          PhysicsValidityWarning)
    if fit is not None and fit.poor:
        warnings.warn(f"sinusoidal fit residual {fit.relative_residual:.3g} of Delta", PhysicsValidityWarning)
    return ratio


def _subset(bs, n):
    from dataclasses import replace

    n = min(n, bs.n_bands)
    return replace(bs, energies=bs.energies[:n], vectors=bs.vectors[:n],
                   left=None if bs.left is None else bs.left[:n],
                   d_signs=None if bs.d_signs is None else bs.d_signs[:n])


def _bands(cfg):
    r = cfg.run
    return bloch.band_structure(cfg.lattice, r["n_kappa"], r["m_max"], r["n_bands"], r["reality_tol"])


def cmd_bands(ctx):
    cfg = ctx.cfg
    bs = _bands(cfg)
    phi = np.full(bs.energies.shape, np.nan)
    if bs.unbroken:
        nb = bloch.normalize_biorthogonal(_subset(bs, cfg.run["dipole_bands"]))
        phi[: nb.n_bands] = bloch.dipole_terms(nb).phi_real
    else:
        warnings.warn("spectrum complex (broken phase); dipole terms not computed", PhysicsValidityWarning)
    rows = [(q, b, bs.energies[b, j].real, bs.energies[b, j].imag, phi[b, j])
            for b in range(bs.n_bands) for j, q in enumerate(bs.kappa)]
    ctx.csv("bands.csv", ("kappa", "band", "re_E", "im_E", "phi"), rows)
    fit = bloch.sinusoidal_fit(bs, 0)
    ctx.csv("bands_fit.csv", ("band", "E0", "Delta", "rms_residual", "relative_residual", "max_im_E"),
            [(0, fit.E0, fit.Delta, fit.rms_residual, fit.relative_residual, float(np.abs(bs.energies.imag).max()))])
    ratio = _validity(ctx, bs, fit)
    if not np.isnan(ratio):
        ctx.csv("validity.csv", ("F0", "zener_ratio", "threshold"),
                [(cfg.drive.F0, ratio, cfg.run["validity_threshold"])])
    from . import plotting

    ctx.figure("bands.png", plotting.plot_bands, bs.kappa, bs.energies,
               fit.E0 - fit.Delta * np.cos(bs.kappa * cfg.lattice.a), cfg.lattice.k_bragg)


def cmd_alpha_scan(ctx):
    cfg = ctx.cfg
    r = cfg.run
    alphas = np.linspace(r["alpha_min"], r["alpha_max"], r["alpha_steps"])
    kw = dict(m_max=r["m_max"], n_bands=r["n_bands"])
    rows = [(a, bloch.max_imag_energy(cfg.lattice.with_alpha(a), **kw)) for a in alphas]
    ctx.csv("alpha_scan.csv", ("alpha", "max_im_E"), rows)
    try:
        ac = bloch.symmetry_breaking_scan(cfg.lattice, alphas, r["reality_tol"], **kw)
        status = "found"
    except NoBreakingFound:
        ac, status = float("nan"), "above range"
    ctx.csv("alpha_c.csv", ("alpha_c", "status"), [(ac, status)])
    from . import plotting

    ctx.figure("alpha_scan.png", plotting.plot_curve, alphas, [[row[1] for row in rows]],
               r"$\alpha$", "max |Im E|", marks=() if np.isnan(ac) else (ac,))


def _band0_tables(cfg):
    bs = _bands(cfg)
    if not bs.unbroken:
        raise PhysicsError("quasienergy needs a real (unbroken) spectrum")
    nb = bloch.normalize_biorthogonal(_subset(bs, 2))
    dd = bloch.dipole_terms(nb)
    return bs, nb, dd


def cmd_quasienergy(ctx):
    cfg = ctx.cfg
    _require(cfg, "drive")
    bs, nb, dd = _band0_tables(cfg)
    kappa = bs.kappa
    fit = bloch.sinusoidal_fit(bs, 0)
    ratio = _validity(ctx, bs, fit)
    e_num = quasienergy.quasienergy_numeric((kappa, bs.energies[0].real), (kappa, dd.phi_real[0]),
                                            cfg.drive, cfg.lattice, kappa, cfg.run["quad_steps"])
    gamma = quasienergy.gamma_parameter(cfg.drive, cfg.lattice)
    e_tb = quasienergy.quasienergy_nntb(fit, gamma, kappa, cfg.lattice.a)
    ctx.csv("quasi.csv", ("kappa", "gamma", "re_E", "im_E"),
            [(q, gamma, e.real, e.imag) for q, e in zip(kappa, e_num)])
    ctx.csv("quasi_nntb.csv", ("kappa", "gamma", "re_E", "im_E"),
            [(q, gamma, float(e), 0.0) for q, e in zip(kappa, e_tb)])
    odd = quasienergy.odd_symmetry_check(cfg.drive)
    ctx.csv("quasi_report.csv",
            ("gamma", "max_im_E", "bandwidth", "nntb_bandwidth", "odd_point", "zener_ratio"),
            [(gamma, float(np.abs(e_num.imag).max()), float(np.ptp(e_num.real)), float(np.ptp(e_tb)),
              float("nan") if odd is None else odd, ratio)])
    from . import plotting

    ctx.figure("quasi.png", plotting.plot_curve, kappa / cfg.lattice.k_bragg, [e_num.real, e_tb],
               r"$\kappa / k_B$", "Re quasienergy", labels=["numeric", "tight binding"])


def cmd_dl_scan(ctx):
    cfg = ctx.cfg
    r = cfg.run
    bs = _bands(cfg)
    fit = bloch.sinusoidal_fit(bs, 0)
    if fit.poor:
        warnings.warn(f"sinusoidal fit residual {fit.relative_residual:.3g} of Delta", PhysicsValidityWarning)
    a = cfg.lattice.a
    points = quasienergy.dl_scan(fit, (r["gamma_min"], r["gamma_max"]), r["gamma_points"], a)
    gammas = np.linspace(r["gamma_min"], r["gamma_max"], r["gamma_points"])
    kappa = -np.pi / a + np.arange(64) * (2 * np.pi / a / 64)
    widths = [quasienergy.band_collapse_metric(quasienergy.nntb_band(fit, g, kappa, a))[0] for g in gammas]
    ctx.csv("dl_curve.csv", ("gamma", "bandwidth"), list(zip(gammas, widths)))
    ctx.csv("dl_points.csv", ("index", "gamma"), list(enumerate(points)))
    from . import plotting

    ctx.figure("dl_scan.png", plotting.plot_curve, gammas, [widths], r"$\Gamma$", "quasienergy bandwidth",
               marks=points)


def _run_propagation(cfg, orders=None, snapshot_every=0):
    _require(cfg, "grid")
    r = cfg.run
    z_end = r["z_end"] or (cfg.drive.Lambda if cfg.drive is not None else None)
    if z_end is None:
        raise ConfigError(["run.z_end: required without a drive section"])
    dz = cfg.dz or (cfg.drive.Lambda / 20000.0 if cfg.drive is not None else 1.0)
    field = propagator.init_gaussian(cfg.grid, r["w"], r["x0"], r["k0"])
    return propagator.propagate(field, cfg.lattice, cfg.drive, cfg.absorber, z_end, dz,
                                record_every=r["record_every"], snapshot_every=snapshot_every,
                                orders=orders)


def cmd_propagate(ctx):
    cfg = ctx.cfg
    series, _ = _run_propagation(cfg, snapshot_every=cfg.run["snapshot_every"])
    ctx.csv("power.csv", ("z", "P", "centroid", "width", "fidelity"),
            zip(series.z, series.P, series.centroid, series.width, series.fidelity))
    x = cfg.grid.x
    for i, (z, psi) in enumerate(sorted(series.snapshots.items())):
        ctx.csv(f"snapshot_{i:04d}.csv", ("x", "re_psi", "im_psi", "abs_psi"),
                zip(x, psi.real, psi.imag, np.abs(psi)), notes=(f"z={z:.9g}",))
    from . import plotting

    ctx.figure("power.png", plotting.plot_curve, series.z, [series.P], r"z ($\mu$m)", "P(z)")
    if series.snapshots:
        zs = sorted(series.snapshots)
        ctx.figure("intensity.png", plotting.plot_intensity, x, zs, [np.abs(series.snapshots[z]) for z in zs])


def _cascade(cfg):
    _require(cfg, "drive")
    r = cfg.run
    z_end = r["z_end"] or cfg.drive.Lambda
    grid = bragg.default_z_grid(cfg.lattice, cfg.drive, r["n_max"], z_end)
    return bragg.cascade_amplitudes(cfg.lattice, cfg.drive, r["n_max"], grid)


def cmd_cascade(ctx):
    cfg = ctx.cfg
    cr = _cascade(cfg)
    stride = cfg.run["cascade_stride"]
    idx = np.unique(np.append(np.arange(0, cr.z.size, stride), cr.z.size - 1))
    rows = [(cr.z[i], n, cr.amplitudes[n, i].real, cr.amplitudes[n, i].imag, abs(cr.amplitudes[n, i]))
            for n in range(cr.amplitudes.shape[0]) for i in idx]
    ctx.csv("cascade.csv", ("z", "n", "re_a", "im_a", "abs_a"), rows)
    ctx.csv("stationary.csv", ("n", "z0", "kind", "R_abs"),
            [(p.n, p.z0, p.kind, rf) for p, rf in zip(cr.points, cr.jump_factors)])
    _, summary = bragg.staircase_prediction(cr)
    ctx.csv("jump_check.csv", ("n", "z0", "kind", "R_abs", "delta_abs", "residual"),
            [(s["n"], s["z0"], s["kind"], s["R_abs"], s["delta_abs"], s["residual"]) for s in summary])
    from . import plotting

    ctx.figure("cascade.png", plotting.plot_curve, cr.z[idx], [np.abs(a[idx]) for a in cr.amplitudes],
               r"z ($\mu$m)", r"$|a_n|$", labels=[f"n={n}" for n in range(cr.amplitudes.shape[0])],
               marks=[p.z0 for p in cr.points])


def jump_span(cfg):
    span = cfg.run["jump_span"]
    return span if span else cfg.drive.Lambda / 20.0


def compare_staircase(series, cr, span):
    """Joined ``P(z)`` table and per-crossing jump comparison.

    Each predicted stationary point is paired with the nearest jump detected
    in the propagator's ``P(z)`` (within ``span``); the plane-wave jump is
    the plateau-to-plateau change of ``|a_n|**2``.
    """
    p_cas = np.interp(series.z, cr.z, cr.power)
    joined = [(z, p, q, (p - q) / q) for z, p, q in zip(series.z, series.P, p_cas)]
    events = propagator.detect_jumps(series.z, series.P, span)
    _, summary = bragg.staircase_prediction(cr)
    crossings = []
    for s in summary:
        match = min(events, key=lambda e: abs(e.z - s["z0"]), default=None)
        if match is None or abs(match.z - s["z0"]) > span:
            crossings.append((s["n"], s["z0"], s["kind"], s["power_jump"], float("nan"), float("nan"),
                              float("nan")))
            continue
        crossings.append((s["n"], s["z0"], s["kind"], s["power_jump"], match.z, match.height,
                          (match.height - s["power_jump"]) / s["power_jump"]))
    return joined, crossings


def cmd_compare_staircase(ctx):
    cfg = ctx.cfg
    _require(cfg, "drive", "grid")
    series, _ = _run_propagation(cfg)
    cr = _cascade(cfg)
    joined, crossings = compare_staircase(series, cr, jump_span(cfg))
    ctx.csv("staircase.csv", ("z", "P_propagator", "P_cascade", "rel_error"), joined)
    ctx.csv("crossings.csv", ("n", "z0", "kind", "jump_cascade", "z_propagator", "jump_propagator",
                              "rel_error"), crossings)
    from . import plotting

    ctx.figure("staircase.png", plotting.plot_curve, series.z, [series.P, [j[2] for j in joined]],
               r"z ($\mu$m)", "P(z)", labels=["propagator", "plane-wave cascade"],
               marks=[p.z0 for p in cr.points])


HANDLERS = {
    "bands": cmd_bands,
    "alpha-scan": cmd_alpha_scan,
    "quasienergy": cmd_quasienergy,
    "dl-scan": cmd_dl_scan,
    "propagate": cmd_propagate,
    "cascade": cmd_cascade,
    "compare-staircase": cmd_compare_staircase,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="ptcrystal", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--strict", action="store_true", help="exit 4 on physics-validity warnings")
    ap.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSVs")
    return ap


def run_command(command, cfg, out=".", strict=False, figures=False):
    """Execute ``command``; returns the exit code. Messages go to stderr."""
    Path(out).mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, command, out, figures)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            HANDLERS[command](ctx)
        except ConfigError as exc:
            for v in exc.violations:
                print(f"config error: {v}", file=sys.stderr)
            return EXIT_CONFIG
        except (NumericalError, PhysicsError) as exc:
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
    validity = [w for w in caught if issubclass(w.category, (PhysicsValidityWarning, DegenerateBandWarning))]
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if strict and validity:
        return EXIT_STRICT
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    return run_command(args.command, cfg, args.out, args.strict, args.figures)


if __name__ == "__main__":
    sys.exit(main())
