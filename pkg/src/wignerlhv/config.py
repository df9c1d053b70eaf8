"""Experiment configuration: flat ``key = value`` files plus flag overrides.

Recognised keys (dashes and underscores are interchangeable)::

    chi             squeezing, e.g. 0.2
    chi_grid        comma-separated squeezing values; wins over chi
    angles          theta_a, theta_a', theta_b, theta_b' (radians by default)
    representation  eq3 | eq4
    samples         samples per analyzer pair (1e7 style accepted)
    seed            master seed, 0 <= seed < 2**64
    chunks          chunks per analyzer pair (>= 32 for error bars)
    out_csv         CSV output path
    out_json        JSON summary path
    epsilon         degenerate-denominator threshold factor
    tolerance       validate tolerance in standard errors
    dump_cap        largest sample-dump allowed

Angles accept a ``deg`` (or degree sign) suffix, and multiples of pi such as
``pi/8`` or ``3pi/8``. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .lhv_model import BellAngles, Representation
from .rng import MAX_SEED

MIN_ERROR_CHUNKS = 32

_PI_RE = re.compile(r"^([+-]?)((?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?$")


@dataclass(frozen=True)
class ExperimentConfig:
    chi: float = 0.2
    chi_grid: tuple[float, ...] | None = None
    angles: BellAngles = field(default_factory=BellAngles)
    representation: Representation = Representation.EQ3
    samples: int = 1_000_000
    seed: int = 20240607
    chunks: int = 32
    out_csv: Path | None = None
    out_json: Path | None = None
    epsilon: float = 1e-12
    tolerance: float = 5.0
    dump_cap: int = 100_000

    @property
    def chis(self) -> tuple[float, ...]:
        return self.chi_grid if self.chi_grid else (self.chi,)

    def require_error_bars(self) -> None:
        if self.chunks < MIN_ERROR_CHUNKS:
            raise ConfigError(f"chunks must be >= {MIN_ERROR_CHUNKS} for error bars, got {self.chunks}")
        if self.samples < self.chunks:
            raise ConfigError(f"samples ({self.samples}) must be >= chunks ({self.chunks})")

    def to_dict(self) -> dict:
        return {
            "chi": self.chi,
            "chi_grid": list(self.chi_grid) if self.chi_grid else None,
            "angles": list(self.angles.as_tuple()),
            "representation": self.representation.value,
            "samples": self.samples,
            "seed": self.seed,
            "chunks": self.chunks,
            "out_csv": str(self.out_csv) if self.out_csv else None,
            "out_json": str(self.out_json) if self.out_json else None,
            "epsilon": self.epsilon,
            "tolerance": self.tolerance,
            "dump_cap": self.dump_cap,
        }


def parse_angle(text: str) -> float:
    """Radians from ``0.39``, ``22.5deg``, ``22.5°`` or ``3pi/8``."""
    s = str(text).strip().lower()
    for suffix in ("deg", "°"):
        if s.endswith(suffix):
            return math.radians(_finite(s[: -len(suffix)], "angle"))
    m = _PI_RE.match(s)
    if m:
        factor = float(m.group(2)) if m.group(2) else 1.0
        if m.group(1) == "-":
            factor = -factor
        divisor = float(m.group(3)) if m.group(3) else 1.0
        if divisor == 0:
            raise ConfigError(f"bad angle {text!r}")
        return factor * math.pi / divisor
    return _finite(s, "angle")


def _finite(text, what: str) -> float:
    try:
        value = float(str(text).strip())
    except ValueError:
        raise ConfigError(f"bad {what} {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{what} must be finite, got {text!r}")
    return value


def _int(text, what: str, lo: int, hi: int | None = None) -> int:
    s = str(text).strip().replace("_", "")
    try:
        value = int(s)
    except ValueError:
        f = _finite(s, what)
        if f != int(f):
            raise ConfigError(f"{what} must be an integer, got {text!r}") from None
        value = int(f)
    if value < lo or (hi is not None and value > hi):
        raise ConfigError(f"{what} out of range: {value}")
    return value


def _chi(text) -> float:
    value = _finite(text, "chi")
    if value < 0:
        raise ConfigError(f"chi must be >= 0, got {value}")
    return value


def _list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t for t in (p.strip() for p in str(text).split(",")) if t]


def _angles(text) -> BellAngles:
    parts = _list(text)
    if len(parts) != 4:
        raise ConfigError(f"angles needs four values, got {len(parts)}")
    return BellAngles(*(parse_angle(p) for p in parts))


def _representation(text) -> Representation:
    try:
        return Representation.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _grid(text) -> tuple[float, ...]:
    values = tuple(_chi(p) for p in _list(text))
    if not values:
        raise ConfigError("chi_grid is empty")
    return values


def _positive(text, what) -> float:
    value = _finite(text, what)
    if value <= 0:
        raise ConfigError(f"{what} must be > 0, got {value}")
    return value


_PARSERS = {
    "chi": _chi,
    "chi_grid": _grid,
    "angles": _angles,
    "representation": _representation,
    "samples": lambda t: _int(t, "samples", 1),
    "seed": lambda t: _int(t, "seed", 0, MAX_SEED),
    "chunks": lambda t: _int(t, "chunks", 1),
    "out_csv": Path,
    "out_json": Path,
    "epsilon": lambda t: _positive(t, "epsilon"),
    "tolerance": lambda t: _positive(t, "tolerance"),
    "dump_cap": lambda t: _int(t, "dump_cap", 1),
}
KEYS = tuple(_PARSERS)


def _norm_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def read_config_file(path) -> dict[str, str]:
    """Raw ``key -> value`` strings from a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = _norm_key(key)
        if key not in _PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def build_config(raw: dict | None = None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply raw string values on top of ``base`` (defaults if omitted)."""
    values = {}
    for key, value in (raw or {}).items():
        key = _norm_key(key)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        if value is None:
            continue
        values[key] = _PARSERS[key](value)
    try:
        return dataclasses.replace(base or ExperimentConfig(), **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    config = build_config(read_config_file(path)) if path else ExperimentConfig()
    return build_config(overrides, config)


def write_config(config: ExperimentConfig, path) -> None:
    """Write ``config`` in the file format read by :func:`load_config`."""
    d = config.to_dict()
    lines = []
    for key in KEYS:
        value = d[key]
        if value is None:
            continue
        if isinstance(value, list):
            value = ", ".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")
