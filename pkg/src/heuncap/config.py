"""
Run configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Every key is optional; missing
keys take the reference constants. Unknown keys and non-positive thresholds
are rejected with the offending line number.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import BasinSpec
from .engine import AbsorptionMode, EngineConfig
from .interval import Interval

__all__ = ["ConfigError", "AnalysisConfig", "RunConfig", "load_config", "parse_config", "dump_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class AnalysisConfig:
    basin_x1_min: float = 0.0
    basin_x1_max: float = 9.0
    basin_x2_min: float = 0.0
    basin_x2_max: float = 9.0
    basin_nx: int = 200
    basin_ny: int = 200
    basin_capture_radius: float = 0.1
    basin_confirm_steps: int = 8
    basin_escape_radius: float = 1e3
    basin_origin_radius: float = 1e-6
    basin_max_iter: int = 2000
    scan_lambda_lo: float = 10.0
    scan_lambda_hi: float = 300.0
    scan_steps: int = 29001
    scan_transient: int = 1000
    scan_samples: int = 256
    scan_bisect_transient: int = 10_000
    period_tol: float = 1e-6
    max_period: int = 64
    shadow_samples: int = 1000

    def basin_spec(self) -> BasinSpec:
        return BasinSpec(
            x1_range=(self.basin_x1_min, self.basin_x1_max),
            x2_range=(self.basin_x2_min, self.basin_x2_max),
            resolution=(self.basin_nx, self.basin_ny),
            capture_radius=self.basin_capture_radius,
            confirm_steps=self.basin_confirm_steps,
            escape_radius=self.basin_escape_radius,
            origin_radius=self.basin_origin_radius,
            max_iter=self.basin_max_iter,
        )


# the config file drives the reference reproduction, so its absorption test
# defaults to the one behind the reference table
_ENGINE_DEFAULT = EngineConfig(absorption_mode=AbsorptionMode.PAPER_FAITHFUL)


@dataclass(frozen=True)
class RunConfig:
    engine: EngineConfig = _ENGINE_DEFAULT
    analysis: AnalysisConfig = AnalysisConfig()
    # decimal text of h and lambda as written, for conservative enclosure
    literals: dict = field(default_factory=dict, compare=False)

    def interval(self, key: str) -> Interval:
        """Enclosure of the decimal value of ``key`` (``h`` or ``lambda_stiff``)."""
        text = self.literals.get(key, repr(float(getattr(self.engine, key))))
        return Interval.from_decimal(text)


_ENGINE_FIELDS = {f.name: f for f in dataclasses.fields(EngineConfig)}
_ANALYSIS_FIELDS = {f.name: f for f in dataclasses.fields(AnalysisConfig)}
# keys that may be zero (range bounds); every other numeric key must be > 0
_SIGNED = {"basin_x1_min", "basin_x1_max", "basin_x2_min", "basin_x2_max"}
_INTS = {"max_steps", "max_boxes"} | {k for k, f in _ANALYSIS_FIELDS.items() if f.type == "int"}


def _parse_bool(text):
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_value(key, text):
    if key == "absorption_mode":
        return AbsorptionMode(text)
    if key == "snap_enabled":
        return _parse_bool(text)
    if key == "sink_points":
        return tuple(float(s) for s in text.split(",") if s.strip())
    if key in _INTS:
        return int(text)
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{key} must be finite")
    if key not in _SIGNED and value <= 0:
        raise ValueError(f"{key} must be positive, got {text}")
    return value


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    engine, analysis, literals = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, _, value = (s.strip() for s in line.partition("="))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        if key not in _ENGINE_FIELDS and key not in _ANALYSIS_FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        try:
            parsed = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno, source) from None
        if key in _INTS and parsed < 1:
            raise ConfigError(f"{key} must be at least 1", lineno, source)
        (engine if key in _ENGINE_FIELDS else analysis)[key] = parsed
        if key in ("h", "lambda_stiff"):
            literals[key] = value
    try:
        cfg = RunConfig(engine=dataclasses.replace(_ENGINE_DEFAULT, **engine),
                        analysis=AnalysisConfig(**analysis), literals=literals)
        cfg.analysis.basin_spec()
    except ValueError as exc:
        raise ConfigError(str(exc), None, source) from None
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def _fmt(value):
    if isinstance(value, AbsorptionMode):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value)


def dump_config(cfg: RunConfig) -> str:
    """Text form of every setting; ``parse_config`` reads it back unchanged."""
    lines = ["# engine"]
    for name in _ENGINE_FIELDS:
        value = cfg.literals.get(name) or _fmt(getattr(cfg.engine, name))
        lines.append(f"{name} = {value}")
    lines.append("# analysis")
    for name in _ANALYSIS_FIELDS:
        lines.append(f"{name} = {_fmt(getattr(cfg.analysis, name))}")
    return "\n".join(lines) + "\n"
