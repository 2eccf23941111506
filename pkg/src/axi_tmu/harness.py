"""
Cycle-driven simulation of manager, TMU and subordinate.

Each cycle runs in a fixed order:

1. the manager drives its request channels;
2. the TMU admits new requests (or gates them when it has no room, or
   severs the bus while isolated);
3. the subordinate drives ready/response signals, consulting the injector;
4. the settled manager-side sample goes to the TMU's second half;
5. both models update on the handshakes that fired.

The recorded trace is the manager-side view of the bus, so replaying it
through ``Tmu.observe`` reproduces the live verdicts.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .axi_model import (
    MAX_BURST_LEN,
    AddrChannel,
    BChannel,
    CycleSample,
    Direction,
    RChannel,
    RespCode,
    WChannel,
    handshake_fired,
)
from .config import LogLevel, RegisterFile, parse_kv_text
from .fault_unit import SyntheticResponse
from .guard import PRESCALER_STEPS, BudgetConfig, Variant, Verdict
from .injector import FaultSpec, Injector, Trigger, parse_campaign
from .monitor import Gates, Tmu
from .stats import CampaignReport, finalize

log = logging.getLogger(__name__)


class ConfigRejected(ValueError):
    pass


# -- configuration -------------------------------------------------------------


@dataclass
class TrafficSpec:
    n_txns: int = 32
    burst_min: int = 1
    burst_max: int = 16
    read_fraction: float = 0.5
    gap_min: int = 0
    gap_max: int = 4
    n_raw_ids: int = 6
    raw_id_bits: int = 16


@dataclass
class SubordinateSpec:
    """Cycles from the first visible valid (or from the triggering handshake) to the response."""

    aw_latency: int = 1
    w_latency: int = 1
    b_latency: int = 2
    ar_latency: int = 1
    r_latency: int = 3
    jitter: int = 0


@dataclass
class SimConfig:
    variant: Variant = Variant.FULL
    max_uniq_ids: int = 4
    txn_per_uniq_id: int = 4
    max_outstanding: Optional[int] = None
    prescaler_step: int = 1
    budgets: BudgetConfig = field(default_factory=BudgetConfig)
    reset_latency: int = 16
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    subordinate: SubordinateSpec = field(default_factory=SubordinateSpec)
    faults: list[FaultSpec] = field(default_factory=list)
    max_cycles: int = 100_000
    seed: int = 0
    enable: bool = True
    attach_tmu: bool = True
    irq_enable: bool = True
    log_level: LogLevel = LogLevel.ERRORS

    @property
    def capacity(self) -> int:
        return self.max_outstanding or self.max_uniq_ids * self.txn_per_uniq_id

    def with_capacity(self, capacity: int) -> "SimConfig":
        cfg = copy.deepcopy(self)
        cfg.max_outstanding = capacity
        cfg.txn_per_uniq_id = max(1, math.ceil(capacity / cfg.max_uniq_ids))
        return cfg

    def validate(self) -> None:
        if not 1 <= self.max_uniq_ids <= 64:
            raise ConfigRejected(f"max_uniq_ids {self.max_uniq_ids} outside [1, 64]")
        if self.txn_per_uniq_id < 1:
            raise ConfigRejected("txn_per_uniq_id must be >= 1")
        limit = self.max_uniq_ids * self.txn_per_uniq_id
        if self.max_outstanding is not None and not 1 <= self.max_outstanding <= limit:
            raise ConfigRejected(
                f"capacity mismatch: max_outstanding {self.max_outstanding} not in [1, {limit}]")
        if self.prescaler_step not in PRESCALER_STEPS:
            raise ConfigRejected(f"prescaler_step {self.prescaler_step} not in {PRESCALER_STEPS}")
        if self.reset_latency < 1 or self.max_cycles < 1:
            raise ConfigRejected("reset_latency and max_cycles must be >= 1")
        t = self.traffic
        if not 1 <= t.burst_min <= t.burst_max <= MAX_BURST_LEN:
            raise ConfigRejected(f"burst range [{t.burst_min}, {t.burst_max}] invalid")
        if not 0.0 <= t.read_fraction <= 1.0 or t.n_txns < 0 or t.n_raw_ids < 1:
            raise ConfigRejected("bad traffic spec")
        if not 0 <= t.gap_min <= t.gap_max:
            raise ConfigRejected("bad gap range")
        if t.n_raw_ids >= 1 << t.raw_id_bits:
            raise ConfigRejected("raw id space too small")
        for f in self.faults:
            if f.target_txn >= t.n_txns:
                raise ConfigRejected(f"fault target {f.target_txn} beyond {t.n_txns} transactions")
        try:
            self.budgets.validate()
            self.budgets.check_fits(self.capacity)
        except ValueError as exc:
            raise ConfigRejected(str(exc)) from None

    def to_kv(self) -> dict[str, str]:
        return config_to_kv(self)

    def digest(self) -> str:
        text = json.dumps(self.to_kv(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


# Flat config keys. Register-style names are accepted for budgets.
_BUDGET_KEYS = {
    "budget_p1": "p1", "budget_p3": "p3", "budget_p5": "p5", "budget_p6": "p6",
    "budget_r1": "r1", "budget_r3": "r3", "budget_r5": "r5",
    "tc_budget": "tc_total", "unit_budget_per_beat": "unit_budget_per_beat",
    "queue_wait_base": "queue_wait_base",
    "queue_wait_per_outstanding": "queue_wait_per_outstanding",
    "max_budget": "max_budget",
}
_TRAFFIC_KEYS = {f.name for f in dataclasses.fields(TrafficSpec)}
_SUB_KEYS = {f.name for f in dataclasses.fields(SubordinateSpec)}
_TOP_INT = {"max_uniq_ids", "txn_per_uniq_id", "prescaler_step", "reset_latency",
            "max_cycles", "seed"}
_TOP_BOOL = {"enable", "attach_tmu", "irq_enable"}


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def apply_kv(cfg: SimConfig, kv: dict[str, str]) -> SimConfig:
    """Return a copy of ``cfg`` with flat key=value settings applied."""
    cfg = copy.deepcopy(cfg)
    if "preset" in kv:
        cfg = preset(kv["preset"])
    for key, value in kv.items():
        key = key.strip().lower()
        if key == "preset":
            continue
        try:
            if key == "variant":
                cfg.variant = Variant.parse(value)
            elif key in _TOP_INT:
                setattr(cfg, key, int(value))
            elif key in _TOP_BOOL:
                setattr(cfg, key, _bool(value))
            elif key == "log_level":
                v = value.strip()
                cfg.log_level = LogLevel(int(v)) if v.isdigit() else LogLevel[v.upper()]
            elif key == "max_outstanding":
                cfg.max_outstanding = None if value.strip() in ("", "auto") else int(value)
            elif key == "capacity":
                cfg = cfg.with_capacity(int(value))
            elif key in _BUDGET_KEYS:
                setattr(cfg.budgets, _BUDGET_KEYS[key], int(value))
            elif key == "burst_len":
                cfg.traffic.burst_min = cfg.traffic.burst_max = int(value)
            elif key == "read_fraction":
                cfg.traffic.read_fraction = float(value)
            elif key in _TRAFFIC_KEYS:
                setattr(cfg.traffic, key, int(value))
            elif key in _SUB_KEYS:
                setattr(cfg.subordinate, key, int(value))
            elif key == "fault":
                cfg.faults = [FaultSpec.parse(line) for line in value.splitlines() if line.strip()]
            elif key == "campaign":
                with open(value.strip()) as fh:
                    cfg.faults = parse_campaign(fh.read())
            else:
                raise ConfigRejected(f"unknown config key {key!r}")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigRejected):
                raise
            raise ConfigRejected(f"{key}: {exc}") from None
    return cfg


def config_from_text(text: str, base: Optional[SimConfig] = None) -> SimConfig:
    return apply_kv(base or SimConfig(), parse_kv_text(text))


def config_to_kv(cfg: SimConfig) -> dict[str, str]:
    out = {
        "variant": cfg.variant.value,
        "max_uniq_ids": str(cfg.max_uniq_ids),
        "txn_per_uniq_id": str(cfg.txn_per_uniq_id),
        "max_outstanding": "auto" if cfg.max_outstanding is None else str(cfg.max_outstanding),
        "prescaler_step": str(cfg.prescaler_step),
        "reset_latency": str(cfg.reset_latency),
        "max_cycles": str(cfg.max_cycles),
        "seed": str(cfg.seed),
        "enable": str(int(cfg.enable)),
        "attach_tmu": str(int(cfg.attach_tmu)),
        "irq_enable": str(int(cfg.irq_enable)),
        "log_level": cfg.log_level.name.lower(),
    }
    for key, attr in _BUDGET_KEYS.items():
        out[key] = str(getattr(cfg.budgets, attr))
    for f in dataclasses.fields(TrafficSpec):
        out[f.name] = str(getattr(cfg.traffic, f.name))
    for f in dataclasses.fields(SubordinateSpec):
        out[f.name] = str(getattr(cfg.subordinate, f.name))
    if cfg.faults:
        out["fault"] = "\n".join(f.to_line() for f in cfg.faults)
    return out


def config_to_text(cfg: SimConfig) -> str:
    lines = []
    for key, value in config_to_kv(cfg).items():
        for part in value.splitlines() or [""]:
            lines.append(f"{key}={part}")
    return "\n".join(lines) + "\n"


def preset(name: str) -> SimConfig:
    name = name.strip().lower()
    if name == "default":
        return SimConfig(
            budgets=BudgetConfig(queue_wait_base=32, queue_wait_per_outstanding=24),
            subordinate=SubordinateSpec(jitter=2),
        )
    if name == "ethernet250":
        # One 250-beat write. Queue wait 70 plus 250 data cycles gives a
        # Tc budget of 320.
        return SimConfig(
            max_uniq_ids=4,
            txn_per_uniq_id=4,
            budgets=BudgetConfig(p1=10, p3=10, p5=16, p6=10, r1=10, r3=10, r5=10,
                                 unit_budget_per_beat=1, queue_wait_base=70,
                                 queue_wait_per_outstanding=0),
            traffic=TrafficSpec(n_txns=1, burst_min=250, burst_max=250, read_fraction=0.0,
                                gap_min=0, gap_max=0, n_raw_ids=1),
            subordinate=SubordinateSpec(aw_latency=1, w_latency=1, b_latency=2,
                                        ar_latency=1, r_latency=2, jitter=0),
            max_cycles=5_000,
        )
    raise ConfigRejected(f"unknown preset {name!r}")


PRESETS = ("default", "ethernet250")


# -- traffic -------------------------------------------------------------------


@dataclass(frozen=True)
class TxnPlan:
    ordinal: int
    dir: Direction
    raw_id: int
    addr: int
    burst_len: int
    gap: int


def generate_traffic(spec: TrafficSpec, seed: int) -> tuple[list[TxnPlan], list[int]]:
    rng = random.Random(f"traffic-{seed}")
    pool = sorted(rng.sample(range(1 << spec.raw_id_bits), spec.n_raw_ids))
    plans = []
    for i in range(spec.n_txns):
        dir = Direction.READ if rng.random() < spec.read_fraction else Direction.WRITE
        plans.append(TxnPlan(
            ordinal=i,
            dir=dir,
            raw_id=rng.choice(pool),
            addr=0x1000_0000 + 0x1000 * i,
            burst_len=rng.randint(spec.burst_min, spec.burst_max),
            gap=rng.randint(spec.gap_min, spec.gap_max),
        ))
    return plans, pool


def _unused_id(pool: Iterable[int]) -> int:
    taken = set(pool)
    return next(i for i in itertools.count() if i not in taken)


# -- manager -------------------------------------------------------------------


@dataclass
class _Live:
    plan: TxnPlan
    beats: int = 0


@dataclass
class ManagerDrive:
    aw: AddrChannel
    w: WChannel
    ar: AddrChannel
    aw_tag: Optional[int] = None
    ar_tag: Optional[int] = None
    w_tag: Optional[int] = None
    w_beat: int = 0


class ManagerModel:
    """Issues planned transactions; W data follows its AW in AW order."""

    def __init__(self, plans: list[TxnPlan], injector: Injector):
        self.injector = injector
        self.queue = {d: deque(p for p in plans if p.dir is d) for d in Direction}
        self.cur: dict[Direction, Optional[_Live]] = {d: None for d in Direction}
        self.next_at = {d: (q[0].gap if q else 0) for d, q in self.queue.items()}
        self.w_queue: deque[_Live] = deque()
        self.outstanding: dict[Direction, list[_Live]] = {d: [] for d in Direction}
        self.outcome: dict[int, str] = {}
        self.unexpected = 0

    def drive(self, cycle: int) -> ManagerDrive:
        chans = {}
        for d in Direction:
            if self.cur[d] is None and self.queue[d] and cycle >= self.next_at[d]:
                self.cur[d] = _Live(self.queue[d].popleft())
            live = self.cur[d]
            if live is None:
                chans[d] = (AddrChannel(), None)
            else:
                p = live.plan
                chans[d] = (AddrChannel(True, False, p.raw_id, p.addr, p.burst_len), p.ordinal)
        w, w_tag, w_beat = WChannel(), None, 0
        if self.w_queue:
            front = self.w_queue[0]
            w_tag, w_beat = front.plan.ordinal, front.beats
            if not self.injector.w_valid_blocked(w_tag, w_beat):
                w = WChannel(True, False, w_beat == front.plan.burst_len - 1)
        return ManagerDrive(chans[Direction.WRITE][0], w, chans[Direction.READ][0],
                            chans[Direction.WRITE][1], chans[Direction.READ][1], w_tag, w_beat)

    def _retire_cur(self, d: Direction, cycle: int) -> None:
        self.cur[d] = None
        self.next_at[d] = cycle + 1 + (self.queue[d][0].gap if self.queue[d] else 0)

    def _match(self, d: Direction, raw_id: int, include_cur: bool) -> Optional[_Live]:
        for live in self.outstanding[d]:
            if live.plan.raw_id == raw_id:
                return live
        cur = self.cur[d]
        if include_cur and cur is not None and cur.plan.raw_id == raw_id:
            return cur
        return None

    def _finish(self, d: Direction, live: _Live, outcome: str, cycle: int) -> None:
        self.outcome[live.plan.ordinal] = outcome
        if live is self.cur[d]:
            self._retire_cur(d, cycle)
        else:
            self.outstanding[d].remove(live)
        if live in self.w_queue:
            self.w_queue.remove(live)

    def update(self, s: CycleSample) -> None:
        cycle = s.cycle
        if handshake_fired(s.aw.valid, s.aw.ready):
            live = self.cur[Direction.WRITE]
            self.w_queue.append(live)
            self.outstanding[Direction.WRITE].append(live)
            self._retire_cur(Direction.WRITE, cycle)
        if handshake_fired(s.w.valid, s.w.ready) and self.w_queue:
            front = self.w_queue[0]
            front.beats += 1
            if front.beats >= front.plan.burst_len:
                self.w_queue.popleft()
        if handshake_fired(s.b.valid, s.b.ready):
            err = s.b.resp is RespCode.SLVERR
            live = self._match(Direction.WRITE, s.b.id, err)
            if live is None:
                self.unexpected += 1
            else:
                self._finish(Direction.WRITE, live, "Aborted" if err else "Done", cycle)
        if handshake_fired(s.ar.valid, s.ar.ready):
            live = self.cur[Direction.READ]
            self.outstanding[Direction.READ].append(live)
            self._retire_cur(Direction.READ, cycle)
        if handshake_fired(s.r.valid, s.r.ready):
            err = s.r.resp is RespCode.SLVERR
            live = self._match(Direction.READ, s.r.id, err)
            if live is None:
                self.unexpected += 1
            elif err:
                self._finish(Direction.READ, live, "Aborted", cycle)
            else:
                live.beats += 1
                if s.r.last:
                    self._finish(Direction.READ, live, "Done", cycle)

    def done(self) -> bool:
        return not any(self.queue.values()) and all(c is None for c in self.cur.values()) \
            and not any(self.outstanding.values()) and not self.w_queue


# -- subordinate ---------------------------------------------------------------


@dataclass
class _SubTxn:
    tag: Optional[int]
    id: int
    burst_len: int
    beats: int = 0
    ready_at: Optional[int] = None


@dataclass
class SubDrive:
    aw_ready: bool = False
    w_ready: bool = False
    ar_ready: bool = False
    b: BChannel = field(default_factory=BChannel)
    r: RChannel = field(default_factory=RChannel)


class SubordinateModel:
    """In-order responder with fixed per-channel latencies plus seeded jitter."""

    def __init__(self, spec: SubordinateSpec, seed: int, injector: Injector):
        self.spec = spec
        self.injector = injector
        self.rng = random.Random(f"subordinate-{seed}")
        self.reset()

    def reset(self) -> None:
        self.aw_ready_at: Optional[int] = None
        self.ar_ready_at: Optional[int] = None
        self.w_bursts: deque[_SubTxn] = deque()
        self.b_fifo: deque[_SubTxn] = deque()
        self.r_fifo: deque[_SubTxn] = deque()
        self.aw_tag: Optional[int] = None
        self.ar_tag: Optional[int] = None

    def _lat(self, base: int) -> int:
        return base + (self.rng.randint(0, self.spec.jitter) if self.spec.jitter else 0)

    def drive(self, cycle: int, aw: AddrChannel, aw_tag, w: WChannel, ar: AddrChannel, ar_tag) -> SubDrive:
        inj = self.injector
        out = SubDrive()
        self.aw_tag, self.ar_tag = aw_tag, ar_tag
        if aw.valid:
            if self.aw_ready_at is None:
                self.aw_ready_at = cycle + self._lat(self.spec.aw_latency)
            out.aw_ready = cycle >= self.aw_ready_at and not inj.aw_ready_blocked(aw_tag)
        if ar.valid:
            if self.ar_ready_at is None:
                self.ar_ready_at = cycle + self._lat(self.spec.ar_latency)
            out.ar_ready = cycle >= self.ar_ready_at and not inj.ar_ready_blocked(ar_tag)
        if w.valid and self.w_bursts:
            front = self.w_bursts[0]
            if front.ready_at is None:
                front.ready_at = cycle + self._lat(self.spec.w_latency)
            if cycle >= front.ready_at:
                out.w_ready = not inj.w_ready_blocked(front.tag, front.beats)
        if self.b_fifo and self.b_fifo[0].ready_at <= cycle:
            front = self.b_fifo[0]
            if not inj.b_valid_blocked(front.tag):
                out.b = BChannel(True, False, inj.b_id(front.tag, front.id), RespCode.OKAY)
        if self.r_fifo and self.r_fifo[0].ready_at <= cycle:
            front = self.r_fifo[0]
            if not inj.r_valid_blocked(front.tag, front.beats):
                last = front.beats == front.burst_len - 1
                out.r = RChannel(True, False, inj.r_id(front.tag, front.beats, front.id), last,
                                 RespCode.OKAY)
        return out

    def update(self, s: CycleSample) -> None:
        cycle = s.cycle
        if handshake_fired(s.aw.valid, s.aw.ready):
            self.w_bursts.append(_SubTxn(self.aw_tag, s.aw.id, s.aw.burst_len))
            self.aw_ready_at = None
        if handshake_fired(s.w.valid, s.w.ready) and self.w_bursts:
            front = self.w_bursts[0]
            front.beats += 1
            if front.beats >= front.burst_len:
                self.w_bursts.popleft()
                front.ready_at = cycle + max(1, self._lat(self.spec.b_latency))
                self.b_fifo.append(front)
        if handshake_fired(s.b.valid, s.b.ready) and self.b_fifo:
            self.b_fifo.popleft()
        if handshake_fired(s.ar.valid, s.ar.ready):
            self.r_fifo.append(_SubTxn(self.ar_tag, s.ar.id, s.ar.burst_len,
                                       ready_at=cycle + max(1, self._lat(self.spec.r_latency))))
            self.ar_ready_at = None
        if handshake_fired(s.r.valid, s.r.ready) and self.r_fifo:
            front = self.r_fifo[0]
            front.beats += 1
            if front.beats >= front.burst_len:
                self.r_fifo.popleft()


# -- run -----------------------------------------------------------------------


@dataclass
class RunResult:
    trace: list[CycleSample]
    events: list[dict]
    report: CampaignReport
    valid: bool = True
    verdicts: list[Verdict] = field(default_factory=list)
    tmu: Optional[Tmu] = None
    outcomes: dict[int, str] = field(default_factory=dict)
    ott_dumps: list[list[str]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.trace, self.events, self.report))


def build_tmu(cfg: SimConfig) -> Tmu:
    regs = RegisterFile(
        variant=cfg.variant,
        budgets=copy.deepcopy(cfg.budgets),
        prescaler_step=cfg.prescaler_step,
        enable=cfg.enable,
        irq_enable=cfg.irq_enable,
        log_level=cfg.log_level,
        max_outstanding=cfg.capacity,
    )
    return Tmu(regs, cfg.max_uniq_ids, cfg.txn_per_uniq_id, cfg.max_outstanding, cfg.reset_latency)


def _severed_sample(cycle: int, md: ManagerDrive, resp: Optional[SyntheticResponse]) -> CycleSample:
    b, r = BChannel(), RChannel()
    if resp is not None and resp.dir is Direction.WRITE:
        b = BChannel(True, True, resp.id, resp.resp)
    elif resp is not None:
        r = RChannel(True, True, resp.id, True, resp.resp)
    return CycleSample(
        cycle,
        aw=dataclasses.replace(md.aw, ready=False),
        w=dataclasses.replace(md.w, ready=md.w.valid),
        b=b,
        ar=dataclasses.replace(md.ar, ready=False),
        r=r,
    )


def run(cfg: SimConfig) -> RunResult:
    cfg.validate()
    plans, pool = generate_traffic(cfg.traffic, cfg.seed)
    injector = Injector(cfg.faults, plans, corrupt_id=_unused_id(pool))
    manager = ManagerModel(plans, injector)
    sub = SubordinateModel(cfg.subordinate, cfg.seed, injector)
    tmu = build_tmu(cfg) if cfg.attach_tmu else None

    trace: list[CycleSample] = []
    events: list[dict] = []
    detections: list[Optional[dict]] = [None] * len(injector.faults)
    slot_tag: dict[int, int] = {}
    ott_dumps: list[list[str]] = []
    data_beats = 0
    finished = False

    for cycle in range(cfg.max_cycles):
        injector.now = cycle
        md = manager.drive(cycle)
        gates = tmu.begin_cycle(cycle, md.aw, md.ar) if tmu is not None else Gates()
        if gates.aw_slot is not None:
            slot_tag[gates.aw_slot] = md.aw_tag
        if gates.ar_slot is not None:
            slot_tag[gates.ar_slot] = md.ar_tag

        if gates.severed:
            sample = _severed_sample(cycle, md, gates.response)
        else:
            aw_sub = md.aw if gates.aw_open else AddrChannel()
            ar_sub = md.ar if gates.ar_open else AddrChannel()
            sd = sub.drive(cycle, aw_sub, md.aw_tag, md.w, ar_sub, md.ar_tag)
            sample = CycleSample(
                cycle,
                aw=dataclasses.replace(md.aw, ready=sd.aw_ready and gates.aw_open),
                w=dataclasses.replace(md.w, ready=sd.w_ready),
                b=dataclasses.replace(sd.b, ready=True),
                ar=dataclasses.replace(md.ar, ready=sd.ar_ready and gates.ar_open),
                r=dataclasses.replace(sd.r, ready=True),
            )

        verdicts = tmu.end_cycle(sample) if tmu is not None else []
        manager.update(sample)
        if not gates.severed:
            sub.update(sample)
        data_beats += handshake_fired(sample.w.valid, sample.w.ready) and not gates.severed
        data_beats += handshake_fired(sample.r.valid, sample.r.ready) and sample.r.resp is RespCode.OKAY
        trace.append(sample)

        if verdicts:
            ott_dumps.append(tmu.pre_abort_dump)
            aborted = {slot: slot_tag.get(slot) for slot in tmu.last_aborted}
            _attribute(cfg, injector, detections, verdicts, aborted, tmu, cycle)
            for tag in aborted.values():
                if tag is not None:
                    injector.cancel_target(tag)
            sub.reset()

        if manager.done() and (tmu is None or (tmu.monitoring and tmu.ott.occupancy == 0)):
            finished = True
            break

    total_cycles = len(trace)
    if not finished:
        events.append({"cycle": total_cycles - 1, "kind": "NonTermination", "slot": None,
                       "what": f"{len(manager.outcome)}/{len(plans)} transactions finished",
                       "action": "report"})
        log.warning("run hit max_cycles=%d with live transactions", cfg.max_cycles)
    valid = True
    for i, f in enumerate(injector.faults):
        if injector.triggered[i] is None and detections[i] is None:
            valid = False
            events.append({"cycle": total_cycles - 1, "kind": "TargetNotReached", "slot": None,
                           "what": f.to_line(), "action": "report"})
            detections[i] = {"fault": f.to_line(), "target_txn": f.target_txn,
                             "detected": False, "reason": "TargetNotReached"}
        elif detections[i] is None:
            detections[i] = {"fault": f.to_line(), "target_txn": f.target_txn,
                             "trigger_cycle": injector.triggered[i], "detected": False,
                             "reason": "Undetected"}

    if tmu is not None:
        events = sorted(tmu.fault_unit.events + events, key=lambda e: e["cycle"])
        records = tmu.stats.records
    else:
        records = []
    report = finalize(
        records,
        variant=cfg.variant,
        total_cycles=total_cycles,
        data_beats=data_beats,
        config_digest=cfg.digest(),
        detection_latencies=[d for d in detections if d is not None],
        n_faults_injected=len(injector.faults),
        events=events,
    )
    return RunResult(trace, events, report, valid,
                     verdicts=list(tmu.verdicts) if tmu is not None else [],
                     tmu=tmu, outcomes=dict(manager.outcome), ott_dumps=ott_dumps)


def _attribute(cfg, injector, detections, verdicts, aborted, tmu, cycle) -> None:
    slot_of = {tag: slot for slot, tag in aborted.items() if tag is not None}
    for i, f in enumerate(injector.faults):
        if detections[i] is not None or f.target_txn not in slot_of:
            continue
        slot = slot_of[f.target_txn]
        trig = injector.triggered[i]
        if trig is None:
            detections[i] = {"fault": f.to_line(), "target_txn": f.target_txn,
                             "detected": False, "reason": "AbortedBeforeTrigger"}
            continue
        own = [v for v in verdicts if v.slot == slot]
        v = own[0] if own else verdicts[0]
        issue = tmu.ott.ld[slot].issue_cycle
        detections[i] = {
            "fault": f.to_line(),
            "target_txn": f.target_txn,
            "trigger_cycle": trig,
            "issue_cycle": issue,
            "detect_cycle": cycle,
            "latency": cycle - trig,
            "latency_from_issue": cycle - issue,
            "verdict": v.kind,
            "what": v.label,
            "detected": True,
        }


# -- lint ----------------------------------------------------------------------


def lint(trace: Iterable[CycleSample], cfg: Optional[SimConfig] = None) -> list[Verdict]:
    """Replay the guards over a recorded manager-side trace."""
    cfg = cfg or SimConfig()
    tmu = build_tmu(cfg)
    out: list[Verdict] = []
    for s in trace:
        out.extend(tmu.observe(s))
    return out


# -- sweep ---------------------------------------------------------------------

SWEEP_AXES = ("capacity", "prescaler_step", "variant", "fault_position")


@dataclass
class SweepResult:
    params: dict
    report: Optional[CampaignReport]
    error: Optional[str] = None


def grid_points(axes: dict[str, list]) -> list[dict]:
    for key in axes:
        if key not in SWEEP_AXES:
            raise ConfigRejected(f"sweep axis {key!r} not in {SWEEP_AXES}")
    keys = list(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


def parse_grid(text: str) -> dict[str, list[str]]:
    return {k: [v.strip() for v in val.replace("\n", ",").split(",") if v.strip()]
            for k, val in parse_kv_text(text).items()}


def configure_point(base: SimConfig, params: dict) -> SimConfig:
    cfg = copy.deepcopy(base)
    for key, value in params.items():
        if key == "capacity":
            cfg = cfg.with_capacity(int(value))
        elif key == "prescaler_step":
            cfg.prescaler_step = int(value)
        elif key == "variant":
            cfg.variant = value if isinstance(value, Variant) else Variant.parse(value)
        elif key == "fault_position":
            trig = value if isinstance(value, Trigger) else Trigger.parse(str(value))
            cfg.faults = [dataclasses.replace(f, trigger=trig) for f in cfg.faults]
    return cfg


def _run_point(args) -> SweepResult:
    base, params = args
    try:
        return SweepResult(params, run(configure_point(base, params)).report)
    except Exception as exc:  # collected, sweep continues
        return SweepResult(params, None, f"{type(exc).__name__}: {exc}")


def sweep(base: SimConfig, axes: dict[str, list], parallel: bool = False,
          workers: Optional[int] = None) -> list[SweepResult]:
    points = grid_points(axes) if axes else [{}]
    jobs = [(base, p) for p in points]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]
