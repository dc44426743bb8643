"""Engine configuration: thresholds, mapping, synthesis, network.

Loadable from a YAML file (every section and key optional, defaults are
the shipped paper values); SONONAV_PORT and SONONAV_LOG_DIR environment
variables override the OSC ingress port and the log directory.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

import yaml

from .fsm import ZoneThresholds
from .mapping import MappingConfig
from .synth import SynthConfig


@dataclass(frozen=True)
class NetworkConfig:
    osc_host: str = "127.0.0.1"
    osc_port: int = 9000
    bridge_host: str = "127.0.0.1"
    bridge_port: int = 8765
    osc_out: str | None = None   # "host:port" synth-parameter egress
    log_dir: str = "."


@dataclass(frozen=True)
class EngineConfig:
    thresholds: ZoneThresholds = ZoneThresholds()
    mapping: MappingConfig = MappingConfig()
    synth: SynthConfig = SynthConfig()
    network: NetworkConfig = NetworkConfig()
    tick_rate_hz: float = 50.0
    drill_dwell_s: float = 0.5

    def __post_init__(self):
        if self.tick_rate_hz <= 0:
            raise ValueError("tick rate must be positive")
        if self.drill_dwell_s < 0:
            raise ValueError("drill dwell must be nonnegative")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        # tuples become lists through asdict+yaml; normalized on load
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        def section(name, factory):
            fields = {f.name for f in dataclasses.fields(factory)}
            raw = data.get(name) or {}
            unknown = set(raw) - fields
            if unknown:
                raise ValueError(f"unknown {name} config keys: {sorted(unknown)}")
            kwargs = {}
            for key, value in raw.items():
                kwargs[key] = tuple(value) if isinstance(value, list) else value
            return factory(**kwargs)

        kwargs = {}
        for name, factory in (("thresholds", ZoneThresholds),
                              ("mapping", MappingConfig),
                              ("synth", SynthConfig),
                              ("network", NetworkConfig)):
            if name in data:
                kwargs[name] = section(name, factory)
        for key in ("tick_rate_hz", "drill_dwell_s"):
            if key in data:
                kwargs[key] = data[key]
        unknown = set(data) - {"thresholds", "mapping", "synth", "network",
                               "tick_rate_hz", "drill_dwell_s"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


def _apply_env(config: EngineConfig) -> EngineConfig:
    port = os.environ.get("SONONAV_PORT")
    log_dir = os.environ.get("SONONAV_LOG_DIR")
    if port is None and log_dir is None:
        return config
    network = dataclasses.replace(
        config.network,
        **({"osc_port": int(port)} if port is not None else {}),
        **({"log_dir": log_dir} if log_dir is not None else {}))
    return dataclasses.replace(config, network=network)


def load_config(path=None) -> EngineConfig:
    """Config from YAML (or defaults), with environment overrides applied."""
    if path is None:
        return _apply_env(EngineConfig())
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a mapping, got {type(data).__name__}")
    return _apply_env(EngineConfig.from_dict(data))


def save_config(path, config: EngineConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)
