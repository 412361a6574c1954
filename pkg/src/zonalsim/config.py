"""Scenario configuration: JSON schema, validation, defaults.

Unknown keys are rejected outright so a typo in a config file fails fast
instead of silently running the default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .netsim import FaultPlan, LatencyParams, PartitionWindow

MODES = ("zonal", "baseline")
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """The scenario configuration violates its schema or invariants."""


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "zonal"
    seed: int = 0
    zone_count: int = 4
    user_count: int = 100
    sp_count: int = 2
    auth_count: int = 1000
    in_zone_probability: float = 0.9
    cache_ttl_s: float = 300.0
    fetch_timeout_s: float = 30.0
    enroll_interval_ms: int = 10
    auth_interval_ms: int = 1000
    latency_base_ms: int = 10
    latency_jitter_ms: int = 0
    drop_probability: float = 0.0
    partitions: tuple[PartitionWindow, ...] = ()
    link_latency: tuple[tuple[str, LatencyParams], ...] = ()
    debug_plant_leak: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.zone_count < 1:
            raise ConfigError("zone_count must be >= 1")
        for name in ("user_count", "sp_count", "auth_count"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("in_zone_probability", "drop_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        for name in ("cache_ttl_s", "fetch_timeout_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("enroll_interval_ms", "auth_interval_ms", "latency_base_ms", "latency_jitter_ms"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for window in self.partitions:
            if window.start_ms > window.end_ms or window.start_ms < 0:
                raise ConfigError("partition windows must satisfy 0 <= start <= end")

    @property
    def cache_ttl_ms(self) -> int:
        return round(self.cache_ttl_s * 1000)

    @property
    def fetch_timeout_ms(self) -> int:
        return round(self.fetch_timeout_s * 1000)

    def fault_plan(self) -> FaultPlan:
        return FaultPlan(
            default_latency=LatencyParams(self.latency_base_ms, self.latency_jitter_ms),
            link_latency=dict(self.link_latency),
            drop_probability=self.drop_probability,
            partitions=self.partitions,
        )

    def replace(self, **overrides) -> "ScenarioConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(overrides)
        return ScenarioConfig(**values)

    # ------------------------------------------------------------------
    # JSON round trip
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "zone_count": self.zone_count,
            "user_count": self.user_count,
            "sp_count": self.sp_count,
            "auth_count": self.auth_count,
            "in_zone_probability": self.in_zone_probability,
            "cache_ttl_s": self.cache_ttl_s,
            "fetch_timeout_s": self.fetch_timeout_s,
            "enroll_interval_ms": self.enroll_interval_ms,
            "auth_interval_ms": self.auth_interval_ms,
            "latency_base_ms": self.latency_base_ms,
            "latency_jitter_ms": self.latency_jitter_ms,
            "drop_probability": self.drop_probability,
            "partitions": [
                {"src": w.src, "dst": w.dst, "start_ms": w.start_ms, "end_ms": w.end_ms}
                for w in self.partitions
            ],
            "link_latency": {
                link: {"base_ms": lat.base_ms, "jitter_ms": lat.jitter_ms}
                for link, lat in self.link_latency
            },
            "debug_plant_leak": self.debug_plant_leak,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values: dict = {}
        for key, value in raw.items():
            if key == "partitions":
                values[key] = tuple(_parse_partition(item) for item in _expect_list(key, value))
            elif key == "link_latency":
                values[key] = tuple(
                    sorted(
                        (link, _parse_latency(link, params))
                        for link, params in _expect_dict(key, value).items()
                    )
                )
            elif key == "mode":
                values[key] = _expect_str(key, value)
            elif key == "debug_plant_leak":
                values[key] = _expect_bool(key, value)
            elif key in ("in_zone_probability", "drop_probability", "cache_ttl_s", "fetch_timeout_s"):
                values[key] = _expect_number(key, value)
            else:
                values[key] = _expect_int(key, value)
        return cls(**values)

    @classmethod
    def loads(cls, text: str) -> "ScenarioConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path: Path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.loads(text)

    def save(self, path: Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def _expect_list(key: str, value) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be a list")
    return value


def _expect_dict(key: str, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be an object")
    return value


def _expect_str(key: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string")
    return value


def _expect_bool(key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be a boolean")
    return value


def _expect_int(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer")
    return value


def _expect_number(key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return float(value)


def _parse_partition(item) -> PartitionWindow:
    obj = _expect_dict("partitions entry", item)
    extra = set(obj) - {"src", "dst", "start_ms", "end_ms"}
    if extra:
        raise ConfigError(f"unknown partition keys: {sorted(extra)}")
    return PartitionWindow(
        src=_expect_str("partitions.src", obj.get("src")),
        dst=_expect_str("partitions.dst", obj.get("dst")),
        start_ms=_expect_int("partitions.start_ms", obj.get("start_ms")),
        end_ms=_expect_int("partitions.end_ms", obj.get("end_ms")),
    )


def _parse_latency(link: str, params) -> LatencyParams:
    obj = _expect_dict(f"link_latency[{link}]", params)
    extra = set(obj) - {"base_ms", "jitter_ms"}
    if extra:
        raise ConfigError(f"unknown link_latency keys: {sorted(extra)}")
    return LatencyParams(
        base_ms=_expect_int("link_latency.base_ms", obj.get("base_ms", 10)),
        jitter_ms=_expect_int("link_latency.jitter_ms", obj.get("jitter_ms", 0)),
    )
