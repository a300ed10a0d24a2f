"""Vehicle kinematics on a ring road under the Greenshield speed-density law."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import InvalidParameterError, NotFoundError

MPH = 0.44704  # m/s per mph
LANE_WIDTH = 3.7  # m, lateral offset used for 2-D positions
MAX_ACCEL = 3.0  # m/s^2, bound on speed relaxation
DEFAULT_RHO_MAX = 0.15  # vehicles per meter per lane at jam
DEFAULT_WINDOW = 1000.0  # m, 500 m ahead + 500 m behind


class ScenarioKind(str, enum.Enum):
    URBAN = "urban"
    HIGHWAY = "highway"


# mph bands the target speed is held within
SPEED_BANDS_MPH = {
    ScenarioKind.URBAN: (30.0, 45.0),
    ScenarioKind.HIGHWAY: (60.0, 70.0),
}


@dataclass(frozen=True)
class RoadNetwork:
    length: float = 6000.0
    lanes: int = 2
    scenario_kind: ScenarioKind = ScenarioKind.URBAN
    s_max: float = 45.0 * MPH
    rho_max: float = DEFAULT_RHO_MAX
    speed_min: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise InvalidParameterError(f"road length must be > 0, got {self.length}")
        if self.lanes < 1:
            raise InvalidParameterError(f"lanes must be >= 1, got {self.lanes}")
        if not (math.isfinite(self.s_max) and self.s_max > 0):
            raise InvalidParameterError(f"s_max must be > 0, got {self.s_max}")
        if not (math.isfinite(self.rho_max) and self.rho_max > 0):
            raise InvalidParameterError(f"rho_max must be > 0, got {self.rho_max}")
        if not (0 <= self.speed_min <= self.s_max):
            raise InvalidParameterError("speed_min must lie in [0, s_max]")

    @classmethod
    def preset(cls, kind, length=6000.0, lanes=2, rho_max=DEFAULT_RHO_MAX):
        kind = ScenarioKind(kind)
        lo, hi = SPEED_BANDS_MPH[kind]
        return cls(length=length, lanes=lanes, scenario_kind=kind,
                   s_max=hi * MPH, rho_max=rho_max, speed_min=lo * MPH)


@dataclass(frozen=True)
class VehicleState:
    id: int
    pos: float
    lane: int
    speed: float
    accel: float
    is_rogue: bool


@dataclass
class World:
    """Struct-of-arrays vehicle table; row i is one vehicle for the whole run."""

    road: RoadNetwork
    ids: np.ndarray
    pos: np.ndarray
    lane: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    is_rogue: np.ndarray
    desired: np.ndarray
    clock: float = 0.0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.uint32)
        self.pos = np.asarray(self.pos, dtype=np.float64)
        self.lane = np.asarray(self.lane, dtype=np.int64)
        self.speed = np.asarray(self.speed, dtype=np.float64)
        self.accel = np.asarray(self.accel, dtype=np.float64)
        self.is_rogue = np.asarray(self.is_rogue, dtype=bool)
        self.desired = np.asarray(self.desired, dtype=np.float64)
        n = len(self.ids)
        for name in ("pos", "lane", "speed", "accel", "is_rogue", "desired"):
            if len(getattr(self, name)) != n:
                raise InvalidParameterError(f"{name} has the wrong length")
        if len(np.unique(self.ids)) != n:
            raise InvalidParameterError("vehicle ids must be unique")
        self._index = {int(v): i for i, v in enumerate(self.ids)}

    @classmethod
    def from_vehicles(cls, road, vehicles, clock=0.0):
        vs = list(vehicles)
        return cls(road=road,
                   ids=[v.id for v in vs],
                   pos=[v.pos for v in vs],
                   lane=[v.lane for v in vs],
                   speed=[v.speed for v in vs],
                   accel=[v.accel for v in vs],
                   is_rogue=[v.is_rogue for v in vs],
                   desired=[road.s_max] * len(vs),
                   clock=clock)

    @property
    def n(self):
        return len(self.ids)

    def index_of(self, vehicle_id):
        try:
            return self._index[int(vehicle_id)]
        except KeyError:
            raise NotFoundError(f"no vehicle with id {vehicle_id}") from None

    def vehicle(self, i):
        return VehicleState(id=int(self.ids[i]), pos=float(self.pos[i]),
                            lane=int(self.lane[i]), speed=float(self.speed[i]),
                            accel=float(self.accel[i]), is_rogue=bool(self.is_rogue[i]))

    @property
    def vehicles(self):
        return tuple(self.vehicle(i) for i in range(self.n))

    def points(self):
        """2-D positions: distance along the road and lateral lane offset."""
        return np.column_stack((self.pos, self.lane * LANE_WIDTH))

    def copy(self):
        return World(road=self.road, ids=self.ids.copy(), pos=self.pos.copy(),
                     lane=self.lane.copy(), speed=self.speed.copy(),
                     accel=self.accel.copy(), is_rogue=self.is_rogue.copy(),
                     desired=self.desired.copy(), clock=self.clock)


def _check_param(name, value, allow_zero=False):
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise InvalidParameterError(f"{name} must be finite and "
                                    f"{'>= 0' if allow_zero else '> 0'}, got {value}")


def greenshield_speed(rho, s_max, rho_max):
    """Linear speed-density law, clamped to [0, s_max]."""
    _check_param("rho", rho, allow_zero=True)
    _check_param("s_max", s_max)
    _check_param("rho_max", rho_max)
    if rho >= rho_max:
        return 0.0
    return min(s_max, max(0.0, s_max - (rho / rho_max) * s_max))


def _greenshield_array(rho, s_max, rho_max):
    return np.clip(s_max - (rho / rho_max) * s_max, 0.0, s_max)


def density_field(world, window=DEFAULT_WINDOW, backend=None):
    """Local density (vehicles/m/lane) around every vehicle."""
    if not window > 0:
        raise InvalidParameterError(f"window must be > 0, got {window}")
    order = _core.sort_order(world.pos)
    counts = _core.window_counts(world.pos, order, world.road.length, window / 2.0,
                                 backend=backend)
    return counts / (window * world.road.lanes)


def local_density(vehicle_id, world, window=DEFAULT_WINDOW):
    i = world.index_of(vehicle_id)
    return float(density_field(world, window)[i])


def step(world, dt, window=DEFAULT_WINDOW, backend=None):
    """Advance every vehicle by ``dt`` seconds in place and return the world.

    Speeds relax toward the Greenshield target at most ``MAX_ACCEL``; rogue
    vehicles move exactly like honest ones.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    road = world.road
    rho = density_field(world, window, backend=backend)
    target = np.clip(_greenshield_array(rho, world.desired, road.rho_max),
                     road.speed_min, road.s_max)
    accel = np.clip((target - world.speed) / dt, -MAX_ACCEL, MAX_ACCEL)
    world.speed = np.clip(world.speed + accel * dt, 0.0, road.s_max)
    world.accel = accel
    world.pos = np.mod(world.pos + world.speed * dt, road.length)
    world.clock += dt
    return world


def rogue_count(n, rogue_fraction):
    return int(math.floor(rogue_fraction * n + 0.5))


def _unique_ids(rng, n):
    ids = np.empty(0, dtype=np.uint64)
    while len(ids) < n:
        draw = rng.integers(1, 2**32, size=n - len(ids), dtype=np.uint64)
        ids = np.concatenate((ids, draw))
        _, first = np.unique(ids, return_index=True)
        ids = ids[np.sort(first)]
    return ids.astype(np.uint32)


def spawn_vehicles(config, rng):
    """Place ``config.n_vehicles`` vehicles on the ring with seeded jitter."""
    n = config.n_vehicles
    rf = config.attack.rogue_fraction
    if n < 1:
        raise InvalidParameterError(f"n_vehicles must be >= 1, got {n}")
    if not 0.0 <= rf <= 1.0:
        raise InvalidParameterError(f"rogue_fraction must be in [0, 1], got {rf}")
    road = config.road()
    spacing = road.length / n
    ids = _unique_ids(rng, n)
    jitter = rng.uniform(-0.4, 0.4, n) * spacing
    pos = np.mod(np.arange(n) * spacing + jitter, road.length)
    lane = np.arange(n) % road.lanes
    speed = rng.uniform(road.speed_min, road.s_max, n)
    is_rogue = np.zeros(n, dtype=bool)
    k = rogue_count(n, rf)
    if k:
        is_rogue[rng.choice(n, size=k, replace=False)] = True
    return World(road=road, ids=ids, pos=pos, lane=lane, speed=speed,
                 accel=np.zeros(n), is_rogue=is_rogue, desired=speed.copy())
