"""INI run configuration: parsing, validation and a stable hash for provenance."""

import configparser
import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .lattice import LatticeSpec, PotentialForm
from .propagator import AbsorberSpec, Grid
from .quasienergy import DriveSpec

LATTICE_KEYS = {"a", "V0", "alpha", "n_s", "lambda", "form", "harmonics"}
DRIVE_KEYS = {"F0", "gamma", "F0_over_Fc", "Lambda", "waveform"}
GRID_KEYS = {"x_min", "x_max", "n_points", "dz", "absorber", "absorber_width", "absorber_strength"}

# name -> (type, default)
RUN_KEYS = {
    "n_kappa": (int, 64),
    "m_max": (int, 12),
    "n_bands": (int, 4),
    "dipole_bands": (int, 2),
    "reality_tol": (float, 1e-9),
    "alpha_min": (float, 0.0),
    "alpha_max": (float, 1.5),
    "alpha_steps": (int, 31),
    "gamma_min": (float, 0.0),
    "gamma_max": (float, 6.0),
    "gamma_points": (int, 601),
    "quad_steps": (int, 4096),
    "z_end": (float, None),
    "record_every": (int, 10),
    "snapshot_every": (int, 0),
    "w": (float, 20.0),
    "x0": (float, 0.0),
    "k0": (float, 0.0),
    "n_max": (int, 3),
    "cascade_stride": (int, 20),
    "jump_span": (float, None),
    "validity_threshold": (float, 0.1),
}

SECTIONS = {"lattice": LATTICE_KEYS, "drive": DRIVE_KEYS, "grid": GRID_KEYS, "run": set(RUN_KEYS)}


@dataclass
class RunConfig:
    lattice: LatticeSpec
    drive: DriveSpec = None
    grid: Grid = None
    absorber: AbsorberSpec = None
    dz: float = None
    run: dict = field(default_factory=dict)
    digest: str = ""


def _number(text, kind, key, problems):
    try:
        value = kind(text) if kind is float else int(text, 10)
    except ValueError:
        problems.append(f"{key}: cannot parse {text!r} as {kind.__name__}")
        return None
    if kind is float and not math.isfinite(value):
        problems.append(f"{key}: must be finite")
        return None
    return value


def _harmonics(text, problems):
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            m, c = item.split(":")
            out.append((int(m), complex(c.replace(" ", ""))))
        except ValueError:
            problems.append(f"lattice.harmonics: bad entry {item!r} (want m:value)")
    return tuple(out)


def config_digest(parser):
    """SHA-256 of the sorted ``section.key=value`` lines (comments and layout ignored)."""
    lines = sorted(f"{s}.{k}={v.strip()}" for s in parser.sections() for k, v in parser.items(s))
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def parse_config(path):
    """Read and validate a run configuration.

    Every problem found is collected before raising.

    Raises
    ------
    ConfigError
        With ``violations`` listing ``section.key: reason`` strings.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file {path} not found"]) from None
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from None
    return parse_parser(parser)


def parse_text(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from None
    return parse_parser(parser)


def parse_parser(parser):
    problems = []
    for section in parser.sections():
        if section not in SECTIONS:
            problems.append(f"{section}: unknown section")
            continue
        for key in parser[section]:
            if key not in SECTIONS[section]:
                problems.append(f"{section}.{key}: unknown key")
    if "lattice" not in parser:
        problems.append("lattice: section required")
        raise ConfigError(problems)

    lattice = _parse_lattice(parser["lattice"], problems)
    drive = _parse_drive(parser["drive"], lattice, problems) if "drive" in parser else None
    grid = absorber = dz = None
    if "grid" in parser:
        grid, absorber, dz = _parse_grid(parser["grid"], problems)
    run = _parse_run(parser["run"] if "run" in parser else {}, problems)
    if problems:
        raise ConfigError(problems)
    return RunConfig(lattice, drive, grid, absorber, dz, run, config_digest(parser))


def _parse_lattice(sec, problems):
    values = {}
    for key in ("a", "V0", "alpha", "n_s", "lambda"):
        if key in sec:
            values[key] = _number(sec[key], float, f"lattice.{key}", problems)
    for key in ("a", "V0"):
        if key not in sec:
            problems.append(f"lattice.{key}: required")
    form = PotentialForm.COS_SIN
    if "form" in sec:
        try:
            form = PotentialForm(sec["form"].strip().lower())
        except ValueError:
            problems.append(f"lattice.form: unknown form {sec['form']!r} (cossin, singleexp, custom)")
    harmonics = _harmonics(sec.get("harmonics", ""), problems)
    incomplete = any(v is None for v in values.values()) or "a" not in values or "V0" not in values

    def pick(key, default):
        # unparsable or missing entries are already reported; probe the rest with a valid stand-in
        v = values.get(key)
        return default if v is None else v

    kwargs = dict(a=pick("a", 1.0), V0=pick("V0", 0.0), alpha=pick("alpha", 0.0),
                  n_s=pick("n_s", 1.42), wavelength=pick("lambda", 0.633),
                  form=form, harmonics=harmonics)
    probe = LatticeSpec.__new__(LatticeSpec)
    for k, v in kwargs.items():
        object.__setattr__(probe, k, v)
    bad = probe.violations()
    if bad:
        problems.extend(f"lattice.{b}" for b in bad)
    if bad or incomplete:
        return None
    return LatticeSpec(**kwargs)


def _parse_drive(sec, lattice, problems):
    lam = _number(sec["Lambda"], float, "drive.Lambda", problems) if "Lambda" in sec else None
    if "Lambda" not in sec:
        problems.append("drive.Lambda: required")
    given = [k for k in ("F0", "gamma", "F0_over_Fc") if k in sec]
    if len(given) != 1:
        problems.append("drive: give exactly one of F0, gamma, F0_over_Fc")
        return None
    amp = _number(sec[given[0]], float, f"drive.{given[0]}", problems)
    waveform = sec.get("waveform", "cosine").strip()
    if lam is None or amp is None:
        return None
    if not lam > 0:
        problems.append("drive.Lambda must be > 0")
        return None
    if lattice is None and given[0] != "F0":
        return None
    omega = 2.0 * math.pi / lam
    if given[0] == "gamma":
        f0 = amp * lattice.lambdabar * omega / lattice.a
    elif given[0] == "F0_over_Fc":
        f0 = amp * 0.5 * lattice.lambdabar * omega * lattice.k_bragg
    else:
        f0 = amp
    probe = DriveSpec.__new__(DriveSpec)
    for k, v in (("F0", f0), ("Lambda", lam), ("waveform", waveform)):
        object.__setattr__(probe, k, v)
    bad = probe.violations()
    if bad:
        problems.extend(bad)
        return None
    return DriveSpec(f0, lam, waveform)


def _parse_grid(sec, problems):
    vals = {}
    for key, kind in (("x_min", float), ("x_max", float), ("n_points", int), ("dz", float),
                      ("absorber_width", float), ("absorber_strength", float)):
        if key in sec:
            vals[key] = _number(sec[key], kind, f"grid.{key}", problems)
    for key in ("x_min", "x_max", "n_points"):
        if key not in sec:
            problems.append(f"grid.{key}: required")
    if any(vals.get(k) is None for k in ("x_min", "x_max", "n_points")):
        return None, None, None
    probe = Grid.__new__(Grid)
    for k in ("x_min", "x_max", "n_points"):
        object.__setattr__(probe, k, vals[k])
    bad = probe.violations()
    if bad:
        problems.extend(bad)
        return None, None, None
    grid = Grid(vals["x_min"], vals["x_max"], vals["n_points"])
    dz = vals.get("dz")
    if dz is not None and not dz > 0:
        problems.append("grid.dz must be > 0")
    switch = sec.get("absorber", "on").strip().lower()
    if switch not in ("on", "off"):
        problems.append("grid.absorber: must be on or off")
        return grid, None, dz
    absorber = None
    if switch == "on":
        width = vals.get("absorber_width")
        width = 0.1 * grid.length if width is None else width
        strength = vals.get("absorber_strength")
        strength = 0.005 if strength is None else strength
        if not width > 0:
            problems.append("grid.absorber_width must be > 0")
        elif not width < grid.length / 4:
            problems.append("grid.absorber_width must be < domain/4")
        if not strength > 0:
            problems.append("grid.absorber_strength must be > 0")
        if width > 0 and width < grid.length / 4 and strength > 0:
            absorber = AbsorberSpec(width, strength)
    return grid, absorber, dz


def _parse_run(sec, problems):
    run = {k: default for k, (_, default) in RUN_KEYS.items()}
    for key in sec:
        if key not in RUN_KEYS:
            continue
        kind = RUN_KEYS[key][0]
        value = _number(sec[key], kind, f"run.{key}", problems)
        if value is not None:
            run[key] = value
    positive = ("n_kappa", "m_max", "n_bands", "dipole_bands", "alpha_steps", "gamma_points",
                "quad_steps", "record_every", "n_max", "cascade_stride")
    for key in positive:
        if run[key] is not None and run[key] < 1:
            problems.append(f"run.{key} must be >= 1")
    if run["n_kappa"] < 8:
        problems.append("run.n_kappa must be >= 8")
    if run["snapshot_every"] < 0:
        problems.append("run.snapshot_every must be >= 0")
    if run["alpha_max"] <= run["alpha_min"]:
        problems.append("run.alpha_max must exceed run.alpha_min")
    if not 0 <= run["gamma_min"] < run["gamma_max"]:
        problems.append("run.gamma range must satisfy 0 <= gamma_min < gamma_max")
    if run["z_end"] is not None and not run["z_end"] > 0:
        problems.append("run.z_end must be > 0")
    if not run["w"] > 0:
        problems.append("run.w must be > 0")
    if run["n_bands"] > 2 * run["m_max"] + 1:
        problems.append("run.n_bands must be <= 2*m_max+1")
    return run
