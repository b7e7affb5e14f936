"""Run configuration: INI parsing with line-aware errors, validation and emission.

Sections and keys (defaults in brackets)::

    [problem]    benchmark [slab-case-1], g [0.0], mask [], geometry [slab],
                 sigma_t [1.0], sigma_s [0.5], source [1.0],
                 inflow_left [0.0], inflow_right [0.0]
    [grid]       cells [50], ny [0 = same as cells]
    [quadrature] kind [uniform], level [8], delta [0.0]
    [solver]     tol [1e-10], max_iters [10000], scheme [characteristic]
    [ensemble]   samples [64], seed [0], jobs [0 = ROMSN_JOBS or 1], reference []
    [output]     dir [romsn-out], psi [false], pgm [true], profile []

``geometry``, ``sigma_*``, ``source`` and ``inflow_*`` only apply to
``benchmark = custom`` (constant fields).
"""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

BENCHMARKS = ("slab-case-1", "slab-case-2", "slab-case-3", "center-source", "lattice", "custom")

SECTIONS = {
    "problem": (
        "benchmark", "g", "mask", "geometry", "sigma_t", "sigma_s", "source",
        "inflow_left", "inflow_right",
    ),
    "grid": ("cells", "ny"),
    "quadrature": ("kind", "level", "delta"),
    "solver": ("tol", "max_iters", "scheme"),
    "ensemble": ("samples", "seed", "jobs", "reference"),
    "output": ("dir", "psi", "pgm", "profile"),
}


@dataclass(frozen=True)
class RunConfig:
    benchmark: str = "slab-case-1"
    g: float = 0.0
    mask: str = ""
    geometry: str = "slab"
    sigma_t: float = 1.0
    sigma_s: float = 0.5
    source: float = 1.0
    inflow_left: float = 0.0
    inflow_right: float = 0.0
    cells: int = 50
    ny: int = 0
    kind: str = "uniform"
    level: int = 8
    delta: float = 0.0
    tol: float = 1e-10
    max_iters: int = 10_000
    scheme: str = "characteristic"
    samples: int = 64
    seed: int = 0
    jobs: int = 0
    reference: str = ""
    dir: str = "romsn-out"
    psi: bool = False
    pgm: bool = True
    profile: str = ""

    @property
    def resolved_geometry(self):
        if self.benchmark == "custom":
            return self.geometry
        return "slab" if self.benchmark.startswith("slab") else "xy"


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _convert(key, raw, line=None):
    kind = _TYPES[key]
    text = str(raw).strip()
    try:
        if kind == "bool":
            return _BOOL[text.lower()]
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except (ValueError, KeyError):
        raise ConfigError(f"expected {kind}, got {text!r}", key, line) from None
    return text


def validate(cfg, lines=None):
    """Raise :class:`ConfigError` naming the offending key on any constraint violation."""
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, key, lines.get(key))

    if cfg.benchmark not in BENCHMARKS:
        fail("benchmark", f"unknown benchmark {cfg.benchmark!r}; choose from {', '.join(BENCHMARKS)}")
    if not -1.0 <= cfg.g <= 1.0:
        fail("g", "anisotropy g must lie in [-1, 1]")
    if cfg.geometry not in ("slab", "xy"):
        fail("geometry", "geometry must be 'slab' or 'xy'")
    if cfg.sigma_s < 0:
        fail("sigma_s", "sigma_s must be nonnegative")
    if cfg.sigma_s >= cfg.sigma_t:
        fail("sigma_s", "constraint sigma_t > sigma_s violated")
    if cfg.cells < 1:
        fail("cells", "cells must be >= 1")
    if cfg.ny < 0:
        fail("ny", "ny must be >= 0")
    if cfg.kind not in ("uniform", "gauss", "rom"):
        fail("kind", "quadrature kind must be uniform, gauss or rom")
    if cfg.level < 1:
        fail("level", "level must be >= 1")
    if cfg.kind == "rom" and cfg.resolved_geometry == "slab" and cfg.level % 2:
        fail("level", "slab random ordinate partitions need an even cell count")
    if not 0.0 <= cfg.delta < 1.0:
        fail("delta", "delta must lie in [0, 1)")
    if not cfg.tol > 0:
        fail("tol", "tol must be positive")
    if cfg.max_iters < 1:
        fail("max_iters", "max_iters must be >= 1")
    if cfg.scheme not in ("characteristic", "diamond"):
        fail("scheme", "scheme must be characteristic or diamond")
    if cfg.samples < 1:
        fail("samples", "samples must be >= 1")
    if cfg.seed < 0:
        fail("seed", "seed must be nonnegative")
    if cfg.jobs < 0:
        fail("jobs", "jobs must be >= 0")
    if cfg.profile and len(cfg.profile.split(",")) != 4:
        fail("profile", "profile must be 'cx,cy,r,K'")
    return cfg


def _key_lines(text):
    """Map ``key -> line number`` (1-based) and collect every (section, key, line)."""
    section = None
    entries = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            entries.append((section, None, n))
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
        entries.append((section, key, n))
    return entries


def parse_text(text, overrides=None):
    """Parse INI ``text`` into a validated :class:`RunConfig`; ``overrides`` win over the file."""
    entries = _key_lines(text)
    lines = {}
    for section, key, n in entries:
        if section is None:
            raise ConfigError("key outside any section", key, n)
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", section, n)
        if key is None:
            continue
        if key not in SECTIONS[section]:
            raise ConfigError(f"unknown key in [{section}]", key, n)
        lines[key] = n
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            values[key] = _convert(key, raw, lines.get(key))
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in _TYPES:
            raise ConfigError("unknown option", key)
        values[key] = _convert(key, raw) if isinstance(raw, str) else raw
        lines.pop(key, None)
    return validate(RunConfig(**values), lines)


def parse_config(path=None, overrides=None):
    """Read a configuration file (or only defaults when ``path`` is None)."""
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration file: {exc}") from None
    return parse_text(text, overrides)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg):
    """INI text that parses back to ``cfg``."""
    data = asdict(cfg)
    out = []
    for section, keys in SECTIONS.items():
        out.append(f"[{section}]")
        out.extend(f"{k} = {_format(data[k])}" for k in keys)
        out.append("")
    return "\n".join(out)


def with_overrides(cfg, **changes):
    return validate(replace(cfg, **{k: v for k, v in changes.items() if v is not None}))
