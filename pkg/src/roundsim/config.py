"""Scenario configuration and its flat ``key = value`` file format.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines
are ignored; keys are unique. Omitted keys take defaults, some of which
depend on ``scenario``. See ``KEYS`` for the accepted keys.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .attack import AttackConfig, AttackMode
from .beaconing import FRAME_SIZE, ChannelModel
from .detection import DEFAULT_EPSILON_SIGMA, FogModel
from .errors import ConfigError, InvalidParameterError
from .mobility import (DEFAULT_RHO_MAX, DEFAULT_WINDOW, MPH, SPEED_BANDS_MPH, RoadNetwork,
                       ScenarioKind)

BASE_LOSS = {ScenarioKind.URBAN: 0.005, ScenarioKind.HIGHWAY: 0.01}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_kind: ScenarioKind = ScenarioKind.URBAN
    road_length: float = 6000.0
    lanes: int = 2
    n_vehicles: int = 500
    speed_band: tuple = SPEED_BANDS_MPH[ScenarioKind.URBAN]  # mph
    rho_max: float = DEFAULT_RHO_MAX
    density_window: float = DEFAULT_WINDOW
    beacon_interval: int = 100  # ms
    beacon_size: int = FRAME_SIZE
    sim_time: float = 700.0
    warmup_rounds: int = 2
    epsilon_sigma: float = DEFAULT_EPSILON_SIGMA
    suppress_clean_guard_payload: bool = False
    attack: AttackConfig = field(default_factory=AttackConfig)
    channel: ChannelModel = field(default_factory=lambda: ChannelModel(
        base_loss_prob=BASE_LOSS[ScenarioKind.URBAN]))
    fog: FogModel = field(default_factory=FogModel)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario_kind", ScenarioKind(self.scenario_kind))
        object.__setattr__(self, "speed_band", tuple(float(v) for v in self.speed_band))
        lo, hi = self.speed_band
        checks = [
            ("road_length", math.isfinite(self.road_length) and self.road_length > 0),
            ("lanes", self.lanes >= 1),
            ("n_vehicles", self.n_vehicles >= 1),
            ("speed_band", 0 <= lo <= hi and hi > 0 and math.isfinite(hi)),
            ("rho_max", math.isfinite(self.rho_max) and self.rho_max > 0),
            ("density_window", math.isfinite(self.density_window) and self.density_window > 0),
            ("beacon_interval", self.beacon_interval >= 1),
            ("beacon_size", self.beacon_size == FRAME_SIZE),
            ("sim_time", math.isfinite(self.sim_time) and self.sim_time > 0),
            ("warmup_rounds", self.warmup_rounds >= 0),
            ("epsilon_sigma", self.epsilon_sigma >= 0),
            ("seed", 0 <= self.seed < 2**64),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value {getattr(self, key)!r}", key)

    def road(self):
        lo, hi = self.speed_band
        return RoadNetwork(length=self.road_length, lanes=self.lanes,
                           scenario_kind=self.scenario_kind, s_max=hi * MPH,
                           rho_max=self.rho_max, speed_min=lo * MPH)

    @property
    def n_slots(self):
        return int(math.floor(self.sim_time * 1000.0 / self.beacon_interval + 1e-9))

    def replace(self, **changes):
        """Copy with top-level or flat attack/channel/fog keys changed."""
        base = to_mapping(self)
        if "false_speed_mph" in changes:
            base.pop("false_speed")
        return from_mapping({**base, **changes})


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v):
    if isinstance(v, bool):
        raise ValueError("boolean where an integer is expected")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"not an integer: {v!r}")
        return int(v)
    return int(str(v).strip(), 0)


def _float(v):
    return float(v)


def _band(v):
    if isinstance(v, str):
        parts = [p for p in v.replace("-", ",").split(",") if p.strip()]
    else:
        parts = list(v)
    if len(parts) != 2:
        raise ValueError("speed_band needs two values: low,high (mph)")
    return (float(parts[0]), float(parts[1]))


def _capacity(v):
    if v is None or str(v).strip().lower() in ("none", "inf", "unbounded"):
        return None
    return _int(v)


# key -> (section, field, parser)
KEYS = {
    "scenario": (None, "scenario_kind", lambda v: ScenarioKind(str(v).strip().lower())),
    "road_length": (None, "road_length", _float),
    "lanes": (None, "lanes", _int),
    "n_vehicles": (None, "n_vehicles", _int),
    "speed_band": (None, "speed_band", _band),
    "rho_max": (None, "rho_max", _float),
    "density_window": (None, "density_window", _float),
    "beacon_interval": (None, "beacon_interval", _int),
    "beacon_size": (None, "beacon_size", _int),
    "sim_time": (None, "sim_time", _float),
    "warmup_rounds": (None, "warmup_rounds", _int),
    "epsilon_sigma": (None, "epsilon_sigma", _float),
    "suppress_clean_guard_payload": (None, "suppress_clean_guard_payload", _bool),
    "seed": (None, "seed", _int),
    "rogue_fraction": ("attack", "rogue_fraction", _float),
    "false_speed": ("attack", "false_speed", _float),
    "false_speed_mph": ("attack", "false_speed", lambda v: float(v) * MPH),
    "onset": ("attack", "onset", _float),
    "coordinated": ("attack", "coordinated", _bool),
    "jitter": ("attack", "jitter", _float),
    "attack_mode": ("attack", "mode", lambda v: AttackMode(str(v).strip().lower())),
    "ramp_time": ("attack", "ramp_time", _float),
    "tx_range": ("channel", "tx_range", _float),
    "capacity": ("channel", "capacity", _capacity),
    "base_loss_prob": ("channel", "base_loss_prob", _float),
    "background_load": ("channel", "background_load", _float),
    "per_obu_rate": ("fog", "per_obu_rate", _float),
    "gamma": ("fog", "gamma", _float),
    "alpha": ("fog", "alpha", _float),
}


def from_mapping(values):
    """Build a validated config from flat keys, applying defaults."""
    values = dict(values)
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ConfigError("unknown key", unknown[0])
    if "false_speed" in values and "false_speed_mph" in values:
        raise ConfigError("give false_speed or false_speed_mph, not both", "false_speed_mph")
    top, sections = {}, {"attack": {}, "channel": {}, "fog": {}}
    for key, raw in values.items():
        section, name, parse = KEYS[key]
        try:
            val = parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot parse {raw!r} ({exc})", key) from None
        (top if section is None else sections[section])[name] = val
    kind = top.get("scenario_kind", ScenarioKind.URBAN)
    top.setdefault("speed_band", SPEED_BANDS_MPH[kind])
    sections["channel"].setdefault("base_loss_prob", BASE_LOSS[kind])
    built = {}
    for section, cls in (("attack", AttackConfig), ("channel", ChannelModel), ("fog", FogModel)):
        try:
            built[section] = cls(**sections[section])
        except InvalidParameterError as exc:
            key = _key_for(section, str(exc))
            raise ConfigError(str(exc), key) from None
    return ScenarioConfig(**top, **built)


def _key_for(section, message):
    for key, (sec, name, _) in KEYS.items():
        if sec == section and message.startswith(name):
            return key
    return section


def to_mapping(cfg):
    """Flat key -> value echo of a config; inverse of ``from_mapping``."""
    out = {}
    for key, (section, name, _) in KEYS.items():
        if key == "false_speed_mph":
            continue
        obj = cfg if section is None else getattr(cfg, section)
        val = getattr(obj, name)
        if isinstance(val, (ScenarioKind, AttackMode)):
            val = val.value
        out[key] = val
    return out


def parse_text(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key", key)
        values[key] = val
    return values


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return from_mapping(parse_text(text))


def dumps(cfg):
    lines = []
    for key, val in to_mapping(cfg).items():
        if key == "speed_band":
            val = f"{val[0]!r},{val[1]!r}"
        elif val is None:
            val = "none"
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


