"""Run configuration: ``key = value`` files, validation and manifests."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config_text", "load_config", "dump_config", "DUMP_MODES"]

DUMP_MODES = ("none", "ends", "all")


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one simulation run and of the checks made on it.

    ``t_end_fraction`` is measured in units of the core collapse time.
    Tolerances are kept here so resolution studies can tighten them.
    """

    a0: float = 1.0
    epsilon: float = 0.2
    N: int = 100_000
    dt: float = 1e-3
    dt_hist: float = 1e-2
    t_end_fraction: float = 0.9
    seed: int = 0
    thread_count: int = 1
    output_dir: str = "run"
    softening: float = 0.0
    dt_char: float = 1e-3
    n_probes: int = 200
    core_every: int = 1
    rho_bin: float = 0.02
    snapshot_dumps: str = "ends"
    tol_core_mid: float = 0.05
    tol_core_late: float = 0.10
    tol_boundary: float = 1e-3
    tol_core_exact: float = 1e-4
    tol_energy: float = 0.01

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                need(math.isfinite(v), f.name, f"must be finite, got {v!r}")
        need(self.a0 > 0, "a0", f"must be positive, got {self.a0!r}")
        need(0 < self.epsilon <= 1, "epsilon", f"must lie in (0, 1], got {self.epsilon!r}")
        need(self.N >= 1000, "N", f"must be at least 1000, got {self.N!r}")
        need(0 < self.dt <= 1e-2, "dt", f"must lie in (0, 0.01], got {self.dt!r}")
        ratio = self.dt_hist / self.dt
        need(self.dt_hist > 0 and ratio >= 1 - 1e-9 and abs(ratio - round(ratio)) < 1e-9,
             "dt_hist", f"must be a positive multiple of dt={self.dt!r}, got {self.dt_hist!r}")
        need(0 <= self.t_end_fraction < 1, "t_end_fraction",
             f"must lie in [0, 1), got {self.t_end_fraction!r}")
        need(self.thread_count >= 1, "thread_count", f"must be at least 1, got {self.thread_count!r}")
        need(bool(str(self.output_dir)), "output_dir", "must not be empty")
        need(self.softening >= 0, "softening", f"must be nonnegative, got {self.softening!r}")
        need(self.dt_char > 0, "dt_char", f"must be positive, got {self.dt_char!r}")
        need(self.n_probes >= 0, "n_probes", f"must be nonnegative, got {self.n_probes!r}")
        need(self.core_every >= 1, "core_every", f"must be at least 1, got {self.core_every!r}")
        need(self.rho_bin > 0, "rho_bin", f"must be positive, got {self.rho_bin!r}")
        need(self.snapshot_dumps in DUMP_MODES, "snapshot_dumps",
             f"must be one of {', '.join(DUMP_MODES)}, got {self.snapshot_dumps!r}")
        for name in ("tol_core_mid", "tol_core_late", "tol_boundary", "tol_core_exact",
                     "tol_energy"):
            need(getattr(self, name) > 0, name, f"must be positive, got {getattr(self, name)!r}")

    @property
    def hist_every(self):
        """Number of time steps between history snapshots."""
        return int(round(self.dt_hist / self.dt))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_ALIASES = {"eps": "epsilon", "n_particles": "N", "threads": "thread_count", "out": "output_dir",
            "t_end_frac": "t_end_fraction"}


def _convert(key, raw):
    kind = _TYPES[key]
    try:
        if kind == "int":
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None
    return raw


def normalize_key(key):
    key = key.strip().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in _TYPES:
        raise ConfigError(key, "unknown configuration key")
    return key


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of typed values.

    ``#`` starts a comment; blank lines are ignored.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = normalize_key(key)
        values[key] = _convert(key, raw)
    return values


def coerce(overrides):
    """Type-convert a mapping of (possibly aliased) keys to raw strings or values."""
    out = {}
    for key, value in overrides.items():
        key = normalize_key(key)
        out[key] = _convert(key, value) if isinstance(value, str) else value
    return out


def load_config(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides``."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        values.update(parse_config_text(text))
    if overrides:
        values.update(coerce(overrides))
    return RunConfig(**values)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config, header=()):
    """Serialize ``config`` so that :func:`parse_config_text` restores it exactly."""
    lines = [f"# {h}" for h in header]
    lines += [f"{f.name} = {_fmt(getattr(config, f.name))}" for f in fields(config)]
    return "\n".join(lines) + "\n"
