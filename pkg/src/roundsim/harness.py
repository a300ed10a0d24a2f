"""Deterministic event loop, parameter sweeps, and CSV/JSON result emission."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .attack import effective_onsets, reported_speeds
from .beaconing import FRAME_SIZE, MAX_ROGUE_IDS, DeliveryLedger, draw_slot_key
from .config import ScenarioConfig, to_mapping
from .detection import accept_mask, aggregate_arrays, fog_processing_time, select_guard_index
from .errors import InvalidParameterError, NoQuorum
from .metrics import MetricsReport, payload_bytes
from .mobility import density_field, spawn_vehicles, step

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario", "n_vehicles", "rogue_fraction", "seed", "tpr", "fpr", "plr",
               "throughput_bps", "overhead_bytes", "overhead_ratio", "processing_time_s")
SWEEP_AXES = ("n_vehicles", "rogue_fraction")


@dataclass(frozen=True)
class TraceRow:
    round: int
    guard_id: int
    s_avg: float | None
    sigma: float | None
    flagged_ids: tuple


@dataclass
class RunResult:
    config: ScenarioConfig
    metrics: MetricsReport
    trace: list
    ledger: DeliveryLedger
    guard_beacons: int = 0
    oversized_guard_payloads: int = 0
    slot_ledgers: list | None = field(default=None, repr=False)

    def row(self):
        c, m = self.config, self.metrics
        return {
            "scenario": c.scenario_kind.value,
            "n_vehicles": c.n_vehicles,
            "rogue_fraction": c.attack.rogue_fraction,
            "seed": c.seed,
            "tpr": m.tpr,
            "fpr": m.fpr,
            "plr": m.plr,
            "throughput_bps": m.avg_throughput,
            "overhead_bytes": m.overhead_bytes,
            "overhead_ratio": m.overhead_ratio,
            "processing_time_s": m.processing_time,
        }

    def to_dict(self):
        cfg = to_mapping(self.config)
        cfg["speed_band"] = list(cfg["speed_band"])
        return {
            "config": cfg,
            "metrics": self.row(),
            "ledger": {k: getattr(self.ledger, k) for k in
                       ("sent", "delivered", "lost_base", "lost_congestion",
                        "out_of_range", "ignored")},
            "guard_beacons": self.guard_beacons,
            "oversized_guard_payloads": self.oversized_guard_payloads,
            "trace": [[r.round, r.guard_id, r.s_avg, r.sigma, list(r.flagged_ids)]
                      for r in self.trace],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _mean_defined(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def run_scenario(config, backend=None, record_slots=False, on_round=None):
    """Simulate one scenario end to end.

    Each beacon slot: move vehicles, emit (attacked) beacons, deliver them,
    elect a guard, run detection on the beacons the fog layer collected, and
    queue the verdict for the guard's next beacon. Receivers that accept a
    guard beacon ignore the flagged senders from then on.

    Detection metrics (TPR, FPR, overhead, processing time) cover rounds
    after ``warmup_rounds``; overhead counts the guard payloads that carry
    those rounds' verdicts. Network metrics cover every slot.

    ``on_round(k, sender_ids, speeds, flagged_ids, rogue_ids)`` is called
    after every detection round, for external checking.
    """
    rng = np.random.default_rng(config.seed)
    world = spawn_vehicles(config, rng)
    n = world.n
    if n < 2:
        raise NoQuorum(f"a run needs at least 2 vehicles, got {n}")
    attack, channel, fog = config.attack, config.channel, config.fog
    dt = config.beacon_interval / 1000.0
    capacity = channel.effective_capacity(n)
    onsets = effective_onsets(world.ids, attack)
    honest = ~world.is_rogue
    n_rogue = int(world.is_rogue.sum())
    n_honest = n - n_rogue
    ignore = np.zeros((n, n), dtype=np.uint8)

    total = DeliveryLedger()
    slots = [] if record_slots else None
    trace, tprs, fprs, ptimes = [], [], [], []
    overhead_bytes = guard_beacons = oversized = beacons_sent = 0
    pending = None  # (guard index, flagged indices, rlt, round) from the previous round

    for k in range(1, config.n_slots + 1):
        t = k * config.beacon_interval / 1000.0
        step(world, dt, config.density_window, backend=backend)
        speeds = reported_speeds(world.speed, world.is_rogue, onsets, attack, t)
        speeds = speeds.astype(np.float32).astype(np.float64)
        rho = density_field(world, config.density_window, backend=backend)
        rho = rho.astype(np.float32).astype(np.float64)

        guard_tx = -1
        measured = k - 1 > config.warmup_rounds  # the verdict carried this slot is measured
        if pending is not None:
            g_prev, flagged_prev, rlt_prev = pending
            if rlt_prev or not config.suppress_clean_guard_payload:
                guard_tx = g_prev
                guard_beacons += 1
                if measured:
                    overhead_bytes += payload_bytes(len(flagged_prev))
                if len(flagged_prev) > MAX_ROGUE_IDS:
                    oversized += 1
        if measured:
            beacons_sent += n

        slot_key = draw_slot_key(rng)
        arrival = _core.arrival_rank(slot_key, world.ids)
        order = _core.sort_order(world.pos)
        eligible, delivered, lost_b, lost_c, ignored, reached, got_guard = _core.resolve_slot(
            world.pos, world.ids, order, world.road.length, channel.tx_range,
            channel.base_loss_prob, capacity, slot_key, arrival, ignore, guard_tx,
            backend=backend)
        sl = DeliveryLedger(sent=n * (n - 1), delivered=int(delivered.sum()),
                            lost_base=int(lost_b.sum()), lost_congestion=int(lost_c.sum()),
                            ignored=int(ignored.sum()))
        sl.out_of_range = sl.sent - int(eligible.sum())
        total.add(sl)
        if slots is not None:
            slots.append((sl.sent, sl.delivered, sl.lost, sl.out_of_range))
        if guard_tx >= 0 and len(pending[1]):
            ignore[np.ix_(got_guard.astype(bool), pending[1])] = 1

        g, _, _ = select_guard_index(world.points(), honest, rng)
        collected = reached > 0
        collected[g] = True
        idx = np.flatnonzero(collected)
        s_avg = sigma = None
        flagged = np.empty(0, dtype=np.int64)
        try:
            agg = aggregate_arrays(speeds[idx], rho[idx])
        except NoQuorum:
            pending = None
        else:
            mask = accept_mask(speeds[idx], agg, config.epsilon_sigma)
            flagged = idx[~mask]
            s_avg, sigma = agg.s_avg, agg.sigma
            pending = (g, flagged, 1 if len(flagged) else 0)
            if on_round is not None:
                on_round(k, world.ids[idx].copy(), speeds[idx].copy(),
                         world.ids[flagged].copy(), world.ids[world.is_rogue].copy())
        if k > config.warmup_rounds:
            trace.append(TraceRow(k, int(world.ids[g]), s_avg, sigma,
                                  tuple(int(i) for i in np.sort(world.ids[flagged]))))
            if pending is not None:
                ptimes.append(fog_processing_time(len(idx), n, fog))
            hits = int(world.is_rogue[flagged].sum())
            tprs.append(hits / n_rogue if n_rogue else None)
            fprs.append((len(flagged) - hits) / n_honest if n_honest else None)

    eligible_total = total.eligible
    sim_time = config.n_slots * dt
    metrics = MetricsReport(
        tpr=_mean_defined(tprs),
        fpr=_mean_defined(fprs),
        plr=total.lost / eligible_total if eligible_total else 0.0,
        avg_throughput=total.delivered * FRAME_SIZE * 8 / sim_time,
        overhead_bytes=overhead_bytes,
        overhead_ratio=overhead_bytes / (beacons_sent * FRAME_SIZE) if beacons_sent else 0.0,
        processing_time=sum(ptimes) / len(ptimes) if ptimes else 0.0,
    )
    if oversized:
        log.info("%d guard payloads exceeded the %d-id frame cap", oversized, MAX_ROGUE_IDS)
    return RunResult(config=config, metrics=metrics, trace=trace, ledger=total,
                     guard_beacons=guard_beacons, oversized_guard_payloads=oversized,
                     slot_ledgers=slots)


def derive_seed(base_seed, index):
    """Child seed: splitmix64(base + golden * (index + 1)) mod 2**64."""
    z = (int(base_seed) + 0x9E3779B97F4A7C15 * (int(index) + 1)) % 2**64
    return int(_core.mix64(np.uint64(z)))


def _run_one(args):
    cfg, backend = args
    return run_scenario(cfg, backend=backend)


def sweep(base, axis, values, repeats=1, jobs=1, backend=None):
    """One run per (value, repeat), ordered by value then repeat.

    Point i gets seed ``derive_seed(base.seed, i)`` where i is the value's
    position in ``values``; repeat r > 0 of that point uses
    ``derive_seed(point_seed, r)``.
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameterError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    if repeats < 1:
        raise InvalidParameterError(f"repeats must be >= 1, got {repeats}")
    points = []
    for i, v in enumerate(values):
        point_seed = derive_seed(base.seed, i)
        for r in range(repeats):
            seed = point_seed if r == 0 else derive_seed(point_seed, r)
            points.append((v, i, r, base.replace(**{axis: v, "seed": seed})))
    points.sort(key=lambda p: (p[0], p[1], p[2]))
    cfgs = [(p[3], backend) for p in points]
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, cfgs))
    return [_run_one(c) for c in cfgs]


def summarize(results, repeats=1):
    """Average each group of ``repeats`` consecutive sweep results into one row.

    Undefined rates are averaged over the runs where they are defined.
    """
    rows = []
    for start in range(0, len(results), repeats):
        group = [r.row() for r in results[start:start + repeats]]
        row = dict(group[0])
        for key in ("tpr", "fpr", "plr", "throughput_bps", "overhead_bytes",
                    "overhead_ratio", "processing_time_s"):
            row[key] = _mean_defined([g[key] for g in group])
        if repeats > 1:
            row["overhead_bytes"] = float(row["overhead_bytes"])
        rows.append(row)
    return rows


def _rows(results):
    return [r.row() if isinstance(r, RunResult) else dict(r) for r in results]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_results(results, fmt="csv"):
    rows = _rows(results)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([{c: row[c] for c in CSV_COLUMNS} for row in rows], indent=2) + "\n"
    raise InvalidParameterError(f"unknown format {fmt!r}")


def emit(results, fmt, path):
    text = format_results(results, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path):
    """Rows of an emitted CSV, with empty cells as None and numbers parsed."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                if v == "":
                    row[k] = None
                elif k == "scenario":
                    row[k] = v
                else:
                    row[k] = int(v) if v.lstrip("-").isdigit() else float(v)
            out.append(row)
    return out

