"""Run configuration: an INI file with one section per command.

Keys match the dataclass field names below; all values are SI. Lists are
comma separated. The ``[design]`` section also accepts ``lambda`` as an
alias of ``wavelength``.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field

import numpy as np

from .fabry_perot import REFERENCE_DESIGN, CavityDesign

PRESETS = {"reference": REFERENCE_DESIGN}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class StaticsOptions:
    phi_min: float = -5.0
    phi_max: float = 5.0
    phi_points: int = 201
    phis: tuple | None = None

    def values(self):
        if self.phis is not None:
            return np.array(self.phis, dtype=float)
        return np.linspace(self.phi_min, self.phi_max, self.phi_points)


@dataclass(frozen=True)
class PolesOptions:
    tuning_min: float = 0.01
    tuning_max: float = 100.0
    tuning_points: int = 30
    tunings: tuple | None = None
    num_zeros: int = 1
    num_poles: int = 4
    f_min: float = 0.5
    f_max: float = 500.0
    n_points: int = 400
    polish: bool = True

    def values(self):
        if self.tunings is not None:
            return np.array(self.tunings, dtype=float)
        return np.geomspace(self.tuning_min, self.tuning_max, self.tuning_points)


@dataclass(frozen=True)
class BodeOptions:
    f_min: float = 1.0
    f_max: float = 1000.0
    n_points: int = 600


@dataclass(frozen=True)
class NoiseOptions:
    f_min: float = 1.0
    f_max: float = 1000.0
    n_points: int = 600
    threshold: float = 1.05


@dataclass(frozen=True)
class SimulateOptions:
    seed: int = 42
    realizations: int = 10000
    f_min: float = 1.0
    f_max: float = 1000.0
    n_points: int = 200
    controller: str = "none"
    gain: float = 3e-28
    corner: float = 2 * np.pi * 200
    damping: float | None = None
    max_outlier_fraction: float = 0.05
    z_limit: float = 4.0


@dataclass(frozen=True)
class RunConfig:
    design: CavityDesign = REFERENCE_DESIGN
    statics: StaticsOptions = field(default_factory=StaticsOptions)
    poles: PolesOptions = field(default_factory=PolesOptions)
    bode: BodeOptions = field(default_factory=BodeOptions)
    noise: NoiseOptions = field(default_factory=NoiseOptions)
    simulate: SimulateOptions = field(default_factory=SimulateOptions)


SECTIONS = {
    "design": CavityDesign,
    "statics": StaticsOptions,
    "poles": PolesOptions,
    "bode": BodeOptions,
    "noise": NoiseOptions,
    "simulate": SimulateOptions,
}

ALIASES = {("design", "lambda"): "wavelength"}


def _convert(section, key, raw, default):
    raw = raw.strip()
    where = f"[{section}] {key}"
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(raw) if raw.lstrip("+-").isdigit() else int(value)
        if isinstance(default, float):
            value = float(raw)
            if not np.isfinite(value):
                raise ValueError(raw)
            return value
        if isinstance(default, str):
            return raw
        # optional list or optional float
        if key in ("phis", "tunings"):
            if raw.lower() == "none":
                return None
            if raw == "":
                return ()
            return tuple(float(x) for x in raw.split(","))
        if raw.lower() in ("", "none"):
            return None
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def _build(section, cls, values):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse INI text on top of ``base`` (the reference preset by default)."""
    base = base or RunConfig()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    sections = {}
    for name, cls in SECTIONS.items():
        current = getattr(base, name)
        if not parser.has_section(name):
            sections[name] = current
            continue
        known = {f.name: getattr(current, f.name) for f in dataclasses.fields(cls)}
        values = dict(known)
        for key, raw in parser.items(name):
            target = ALIASES.get((name, key), key)
            if target not in known:
                raise ConfigError(f"[{name}] {key}: unknown key")
            default = cls.__dataclass_fields__[target].default
            values[target] = _convert(name, target, raw, default)
        sections[name] = _build(name, cls, values)

    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for name in ("bode", "noise", "simulate", "poles"):
        opts = getattr(cfg, name)
        if not 0 < opts.f_min < opts.f_max:
            raise ConfigError(f"[{name}] f_min/f_max: need 0 < f_min < f_max")
        if opts.n_points < 2:
            raise ConfigError(f"[{name}] n_points: need at least 2")
    if cfg.statics.phis is None and cfg.statics.phi_points < 0:
        raise ConfigError("[statics] phi_points: must be >= 0")
    p = cfg.poles
    if p.tunings is None and (p.tuning_min <= 0 or p.tuning_max < p.tuning_min or p.tuning_points < 1):
        raise ConfigError("[poles] tuning_min/tuning_max/tuning_points: need 0 < min <= max, points >= 1")
    if p.tunings is not None and any(t <= 0 for t in p.tunings):
        raise ConfigError("[poles] tunings: values must be > 0")
    if p.num_zeros < 0 or p.num_poles < max(p.num_zeros, 1):
        raise ConfigError("[poles] num_zeros/num_poles: need num_poles >= max(num_zeros, 1)")
    s = cfg.simulate
    if s.realizations < 2:
        raise ConfigError("[simulate] realizations: must be >= 2")
    if not 0 <= s.seed < 2**64:
        raise ConfigError("[simulate] seed: must fit in 64 bits")
    if s.controller not in ("none", "velocity"):
        raise ConfigError("[simulate] controller: expected 'none' or 'velocity'")
    if s.corner <= 0:
        raise ConfigError("[simulate] corner: must be > 0")
    if not 0 <= s.max_outlier_fraction <= 1:
        raise ConfigError("[simulate] max_outlier_fraction: must lie in [0, 1]")
    if s.z_limit <= 0:
        raise ConfigError("[simulate] z_limit: must be > 0")


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name in SECTIONS:
        obj = getattr(cfg, name)
        parser[name] = {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load_config(path=None, preset: str | None = None) -> RunConfig:
    """Load ``path`` on top of ``preset`` (``"reference"`` when omitted)."""
    name = preset or "reference"
    if name not in PRESETS:
        raise ConfigError(f"--preset: unknown preset {name!r}")
    base = RunConfig(design=PRESETS[name])
    if path is None:
        return base
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base)
