"""Session configuration: one JSON file covering gains, speeds, and wiring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from ..autonomy.laws import AlignmentGains, GovernorConfig


class ConfigError(Exception):
    pass


@dataclass
class SpeedFractions:
    """Tier-1 command magnitudes as fractions of the hardware speed limits."""

    base: float = 0.4
    turn: float = 0.25   # x4 fast tier saturates exactly at the hardware rate
    lift: float = 0.5
    arm: float = 0.5
    wrist: float = 0.5
    gripper: float = 0.6


@dataclass
class ServiceConfig:
    seed: int = 0
    world_file: str | None = None
    start_room: str = "bedroom"
    udp_endpoint: str | None = None
    emg_endpoint: str | None = None
    console_port: int = 8360
    keyboard_enabled: bool = True
    gesture_on_start: bool = True
    assist_enabled: bool = True
    left_model: str | None = None
    right_model: str | None = None
    k_v: float = 1.0
    k_omega: float = 1.0
    lidar_beams: int = 60
    lidar_max_range: float = 4.0
    goal_radius: float = 0.5
    latency_budget_ms: int = 100
    speeds: SpeedFractions = field(default_factory=SpeedFractions)
    governor: GovernorConfig = field(default_factory=GovernorConfig)
    alignment: AlignmentGains = field(default_factory=AlignmentGains)
    # {"ArmDrive": {"left:wrist_back": "base_backward", ...}, ...}
    action_table: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {
    "speeds": SpeedFractions,
    "governor": GovernorConfig,
    "alignment": AlignmentGains,
}


def config_from_dict(doc: dict) -> ServiceConfig:
    doc = dict(doc)
    kwargs = {}
    known = {f for f in ServiceConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, cls in _NESTED.items():
        if name in doc:
            sub = doc.pop(name)
            if not isinstance(sub, dict):
                raise ConfigError(f"{name} must be an object")
            bad = set(sub) - set(cls.__dataclass_fields__)
            if bad:
                raise ConfigError(f"unknown {name} keys: {sorted(bad)}")
            kwargs[name] = cls(**sub)
    kwargs.update(doc)
    try:
        return ServiceConfig(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> ServiceConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(doc)


def parse_action_table(overrides: dict) -> dict:
    """Expand {"Mode": {"arm:label": "action"}} into the runtime table form."""
    from ..intent import DEFAULT_ACTION_TABLE

    table = {mode: dict(entries) for mode, entries in DEFAULT_ACTION_TABLE.items()}
    for mode, entries in overrides.items():
        if mode not in table:
            raise ConfigError(f"action table references unknown mode {mode!r}")
        for key, action in entries.items():
            arm, _, label = key.partition(":")
            if arm not in ("left", "right") or not label:
                raise ConfigError(f"bad action table key {key!r}; want 'arm:label'")
            table[mode][(arm, label)] = action
    return table
