"""Sectioned ``key = value`` run configuration with mandatory units.

A configuration file looks like::

    # readout at a single coupling strength
    [probe]
    omega = 0.2gamma
    duration = 6us

    coupling.omega_max = 10gamma, 18gamma

Keys are ``section.name``; a ``[section]`` header prefixes the keys that
follow it.  Every physical value carries a unit: rates in ``gamma`` (D2
linewidths) or ``Hz``/``kHz``/``MHz`` (ordinary frequency), times in
``s``/``ms``/``us``/``ns``, lengths in ``m``/``um``/``nm`` and temperatures in
``K``/``mK``/``uK``.  Values are stored in linewidth units, seconds, metres
and kelvin.
"""

from dataclasses import dataclass
import hashlib
import json
import re

from . import constants
from .errors import ConfigError

_UNITS = {
    "rate": {"gamma": 1.0, "Hz": None, "kHz": None, "MHz": None},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
    "length": {"m": 1.0, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
}
_HZ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\d\s].*)?$")


@dataclass(frozen=True)
class _Key:
    kind: str
    default: object
    check: str = ""
    choices: tuple = ()
    many: bool = False


# check codes: "pos" > 0, "nonneg" >= 0, "frac" in (0, 1]
SCHEMA = {
    "scheme.gamma_e": _Key("rate", 1.0, "pos"),
    "scheme.dephasing": _Key("rate", 0.0, "nonneg"),
    "probe.omega": _Key("rate", 0.2, "pos"),
    "probe.duration": _Key("time", 6e-6, "pos"),
    "probe.rise": _Key("time", 1e-6, "pos"),
    "coupling.omega_max": _Key("rate", (1.0, 10.0, 18.0), "pos", many=True),
    "coupling.omega_min": _Key("rate", 0.0, "nonneg"),
    "coupling.node": _Key("length", 0.0),
    "coupling.lead": _Key("time", 1e-6, "pos"),
    "coupling.duration": _Key("time", 35e-6, "pos"),
    "coupling.arm_split": _Key("bool", False),
    "repump.enabled": _Key("bool", True),
    "repump.duration": _Key("time", 6e-6, "pos"),
    "repump.min_fraction": _Key("float", 0.1, "frac"),
    "sequence.repeats": _Key("int", 16, "pos"),
    "stark.omega": _Key("rate", 1.6, "nonneg"),
    "stark.delta": _Key("rate", 200.0, "pos"),
    "stark.duration": _Key("time", 15e-6, "nonneg"),
    "stark.mode": _Key("choice", "effective", choices=("effective", "explicit")),
    "stark.validate": _Key("bool", True),
    "grid.x_max": _Key("length", 0.0, "nonneg"),
    "grid.points": _Key("int", 17, "pos"),
    "grid.adaptive": _Key("bool", True),
    "grid.spacing_fraction": _Key("float", 0.1, "frac"),
    "trap.depth": _Key("temperature", 5e-3, "pos"),
    "detection.efficiency": _Key("float", constants.COMBINED_EFFICIENCY, "frac"),
    "dipole.distance": _Key("length", constants.QUBIT_SPACING, "pos"),
    "dipole.polarization": _Key("choice", "pi", choices=("pi", "sigma+", "sigma-")),
    "dipole.scale": _Key("float", 1.0, "nonneg"),
}

_READOUT = {}
_GATE = {
    "probe.omega": "8gamma",
    "probe.duration": "25us",
    "probe.rise": "5us",
    "coupling.duration": "35us",
    "coupling.omega_max": "16gamma, 128gamma, 208gamma",
    "coupling.omega_min": "8gamma",
    "grid.points": "9",
}

PRESETS = {
    "fig5": dict(_READOUT),
    "fig6": {**_READOUT, "coupling.omega_max": "18gamma", "grid.x_max": "128nm",
             "grid.points": "33"},
    "fig9": dict(_GATE),
    "fig10": {**_GATE, "coupling.omega_max": "208gamma"},
}


def _parse_scalar(key, spec, text):
    text = text.strip()
    if spec.kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(key, f"expected a boolean, got {text!r}")
    if spec.kind == "choice":
        if text not in spec.choices:
            raise ConfigError(key, f"must be one of {', '.join(spec.choices)}")
        return text
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(key, f"cannot parse {text!r} as a number")
    num, unit = float(m.group(1)), (m.group(2) or "").strip()
    if spec.kind in ("float", "int"):
        if unit:
            raise ConfigError(key, f"is dimensionless, unexpected unit {unit!r}")
        if spec.kind == "int":
            if num != int(num):
                raise ConfigError(key, "must be an integer")
            return int(num)
        return num
    units = _UNITS[spec.kind]
    if not unit:
        raise ConfigError(key, f"missing unit, expected one of {', '.join(units)}")
    if unit not in units:
        raise ConfigError(key, f"unit {unit!r} is not a {spec.kind} unit ({', '.join(units)})")
    if unit in _HZ:
        return constants.hz_to_gamma(num * _HZ[unit])
    return num * units[unit]


def _check(key, spec, value):
    vals = value if isinstance(value, tuple) else (value,)
    for v in vals:
        if spec.check == "pos" and not v > 0:
            raise ConfigError(key, "must be > 0")
        if spec.check == "nonneg" and not v >= 0:
            raise ConfigError(key, "must be >= 0")
        if spec.check == "frac" and not 0 < v <= 1:
            raise ConfigError(key, "must lie in (0, 1]")


def parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(key, "unknown key")
    spec = SCHEMA[key]
    if spec.many:
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise ConfigError(key, "needs at least one value")
        value = tuple(_parse_scalar(key, spec, p) for p in parts)
    else:
        value = _parse_scalar(key, spec, text)
    _check(key, spec, value)
    return value


def parse_text(text):
    """Parse configuration text into ``{key: raw string}`` (no unit conversion)."""
    out = {}
    section = ""
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", "expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if section and "." not in key:
            key = f"{section}.{key}"
        out[key] = val
    return out


@dataclass(frozen=True)
class SimConfig:
    """Validated configuration; index it with the dotted key names."""

    values: tuple
    preset: str = ""

    def __getitem__(self, key):
        return dict(self.values)[key]

    def as_dict(self):
        return dict(self.values)

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def build_config(overrides=None, preset=""):
    """Defaults, then ``preset``, then ``overrides`` (raw strings keyed by dotted name)."""
    if preset and preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset!r} (have {', '.join(PRESETS)})")
    raw = dict(PRESETS.get(preset, {}))
    raw.update(overrides or {})
    values = {k: spec.default for k, spec in SCHEMA.items()}
    for key, text in raw.items():
        values[key] = parse_value(key, text)
    return SimConfig(tuple(sorted(values.items())), preset)


def load_config(path=None, preset=""):
    """Read a configuration file (``None`` for defaults only) on top of ``preset``."""
    overrides = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                overrides = parse_text(fh.read())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    return build_config(overrides, preset)
