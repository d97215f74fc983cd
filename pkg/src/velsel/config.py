"""Run configuration: flat ``key = value`` text (or JSON with the same keys).

Dimensioned values need a unit suffix ("T0 = 292 nK", "gradient = 0.5 G/cm");
counts and names do not.  ``U0`` takes a comma-separated list.  Values are
converted to internal units (um, ms, nK) on ingestion.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .units import MU_B, UnitError, parse_quantity, temperature_from_packet_width

ENGINES = ("analytic", "classical-quasistatic", "classical-dynamic", "quantum")


class ConfigError(ValueError):
    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")
        self.key, self.line = key, line


@dataclass
class RunConfig:
    engine: str
    r0: float
    gradient: float
    U0: list
    w0: float
    T0: float = math.nan
    x0: float = math.nan
    x_start: float = 0.0
    x_end: float | None = None          # None: x_start + 2.5 r0
    speed: float | None = None          # um/ms; None: speed_vc * v_c
    speed_vc: float = 0.1
    dt: float | None = None             # classical step; None: automatic
    hold_periods: float = 5.0
    n_atoms: int = 100000
    grid_min: float = -400.0
    grid_max: float = 400.0
    n_points: int = 8192
    n_packets: int = 32
    mode: str = "incoherent"
    n_realizations: int = 32
    selection: str = "bound"
    quantum_dt: float = 0.01
    snapshot_every: int = 0
    seed: int = 0
    output: str = "out"
    moment_factor: float = 1.0          # magnetic moment in Bohr magnetons (G/cm input only)

    def echo(self):
        """Normalized ``key = value unit`` lines in internal units."""
        lines = []
        for key, (kind, unit) in _SCHEMA.items():
            value = getattr(self, key)
            if value is None:
                text = "auto"
            elif isinstance(value, float) and math.isnan(value):
                continue
            elif key == "U0":
                text = ", ".join(f"{v!r} nK" for v in value)
            elif unit:
                text = f"{value!r} {unit}"
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        return lines

    def to_dict(self):
        return asdict(self)


# key -> (kind, internal unit); kind is a parse_quantity dimension or a plain type
_SCHEMA = {
    "engine": ("choice", ""),
    "r0": ("length", "um"),
    "T0": ("energy", "nK"),
    "x0": ("length", "um"),
    "gradient": ("gradient", "nK/um"),
    "U0": ("energy-list", "nK"),
    "w0": ("length", "um"),
    "x_start": ("length", "um"),
    "x_end": ("length-auto", "um"),
    "speed": ("velocity-auto", "um/ms"),
    "speed_vc": ("number", ""),
    "dt": ("time-auto", "ms"),
    "hold_periods": ("number", ""),
    "n_atoms": ("count", ""),
    "grid_min": ("signed-length", "um"),
    "grid_max": ("signed-length", "um"),
    "n_points": ("count", ""),
    "n_packets": ("count", ""),
    "mode": ("choice", ""),
    "n_realizations": ("count", ""),
    "selection": ("choice", ""),
    "quantum_dt": ("time", "ms"),
    "snapshot_every": ("count0", ""),
    "seed": ("count0", ""),
    "output": ("text", ""),
    "moment_factor": ("number", ""),
}
_CHOICES = {
    "engine": ENGINES,
    "mode": ("incoherent", "coherent"),
    "selection": ("bound", "window"),
}
_REQUIRED = ("engine", "r0", "gradient", "U0", "w0")
_POSITIVE = ("r0", "w0", "T0", "x0", "speed", "speed_vc", "dt",
             "quantum_dt", "moment_factor")


def _convert(key, raw, line, moment=MU_B):
    kind, _ = _SCHEMA[key]
    text = str(raw).strip()
    try:
        if kind == "choice":
            if text not in _CHOICES[key]:
                raise ConfigError(key, f"must be one of {', '.join(_CHOICES[key])}, got {text!r}",
                                  line)
            return text
        if kind == "text":
            return text
        if kind in ("count", "count0"):
            value = int(text)
            if value < (1 if kind == "count" else 0):
                raise ConfigError(key, f"must be a {'positive' if kind == 'count' else 'non-negative'} "
                                       f"integer, got {text!r}", line)
            return value
        if kind == "number":
            return float(text)
        if kind.endswith("-auto"):
            if text.lower() == "auto":
                return None
            kind = kind[:-5]
        if kind == "energy-list":
            return [parse_quantity(part, "energy") for part in text.split(",")]
        if kind == "signed-length":
            kind = "length"
        return parse_quantity(text, kind, moment=moment)
    except (UnitError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, str(exc), line) from None


def _build(items):
    """items: iterable of (key, raw value, line or None)."""
    items = list(items)
    values, lines = {}, {}
    moment = MU_B
    for key, raw, line in items:
        if key == "moment_factor":
            factor = _convert(key, raw, line)
            if not factor > 0:
                raise ConfigError(key, f"must be > 0, got {factor!r}", line)
            moment = MU_B * factor
    for key, raw, line in items:
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key", line)
        if key in values:
            raise ConfigError(key, f"duplicate key (first on line {lines[key]})", line)
        values[key] = _convert(key, raw, line, moment)
        lines[key] = line
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(key, "missing required key")
    has_T0, has_x0 = "T0" in values, "x0" in values
    if has_T0 == has_x0:
        raise ConfigError("T0", "give exactly one of T0 and x0", lines.get("T0", lines.get("x0")))
    for key in _POSITIVE:
        v = values.get(key)
        if v is not None and not v > 0:
            raise ConfigError(key, f"must be > 0, got {v!r}", lines.get(key))
    if values.get("hold_periods", 0.0) < 0:
        raise ConfigError("hold_periods", "must be >= 0", lines.get("hold_periods"))
    if values["gradient"] < 0:
        raise ConfigError("gradient", "must be >= 0", lines.get("gradient"))
    if any(u < 0 for u in values["U0"]):
        raise ConfigError("U0", "barrier heights must be >= 0", lines.get("U0"))
    cfg = RunConfig(**values)
    if has_x0:
        cfg.T0 = float(temperature_from_packet_width(cfg.x0))
    if cfg.x_end is not None and not cfg.x_end > cfg.x_start:
        raise ConfigError("x_end", "must exceed x_start", lines.get("x_end"))
    if not cfg.grid_max > cfg.grid_min:
        raise ConfigError("grid_max", "must exceed grid_min", lines.get("grid_max"))
    n = cfg.n_points
    if n & (n - 1):
        raise ConfigError("n_points", f"must be a power of two, got {n}", lines.get("n_points"))
    return cfg


def parse_config(text):
    """Parse ``key = value`` text; ``#`` starts a comment."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_config_json(text)
    items = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], "expected 'key = value'", no)
        key, value = (s.strip() for s in line.split("=", 1))
        if not value:
            raise ConfigError(key, "empty value", no)
        items.append((key, value, no))
    return _build(items)


def parse_config_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc), exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("<json>", "top level must be an object")
    items = []
    for key, value in data.items():
        if key == "U0" and isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        items.append((key, value, None))
    return _build(items)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
