"""Deterministic VANET beaconing simulator with a guard-node rogue detector."""
from ._core import BACKEND
from .attack import AttackConfig, AttackMode, apply_attack
from .beaconing import (BeaconMessage, ChannelModel, DeliveryLedger, GuardPayload,
                        decode_beacon, deliver, emit_beacons, encode_beacon)
from .config import ScenarioConfig, load_config
from .detection import (DetectionReport, FogModel, GuardSelection, SpeedAggregate, Verdict,
                        aggregate, build_guard_beacon, centroid, detect, fog_processing_time,
                        hypothesis_test, select_guard)
from .errors import (ConfigError, ContractViolation, DecodeError, EncodeError,
                     InvalidParameterError, NoEligibleGuard, NoQuorum, NotFoundError,
                     RoundSimError)
from .harness import RunResult, emit, run_scenario, summarize, sweep
from .metrics import GroundTruth, MetricsReport, avg_throughput, fpr, overhead, p_sysfail, plr, tpr
from .mobility import (RoadNetwork, ScenarioKind, VehicleState, World, greenshield_speed,
                       local_density, spawn_vehicles, step)

__version__ = "0.1.0"
