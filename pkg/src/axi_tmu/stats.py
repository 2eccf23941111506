"""Per-transaction latency records and the aggregated run report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .axi_model import Direction
from .guard import Variant

PHASE_ORDER = ("P1", "P2", "P3", "P4", "P5", "P6", "R1", "R2", "R3", "R4", "R5")


@dataclass
class TxnRecord:
    serial: int
    dir: Direction
    burst_len: int
    issue_cycle: int
    phases: list[tuple[str, int, int]] = field(default_factory=list)
    end_cycle: Optional[int] = None
    outcome: Optional[str] = None  # "Done" | "Aborted"

    @property
    def total_latency(self) -> Optional[int]:
        return None if self.end_cycle is None else self.end_cycle - self.issue_cycle


def record_phase(rec: TxnRecord, phase: str, entry_cycle: int, exit_cycle: int) -> None:
    if exit_cycle < entry_cycle:
        raise ValueError(f"phase {phase} exits ({exit_cycle}) before it enters ({entry_cycle})")
    rec.phases.append((phase, entry_cycle, exit_cycle))


def summarize(samples: list[int]) -> dict:
    """count/min/mean/max and nearest-rank p99 of exact samples."""
    if not samples:
        return {"count": 0, "min": None, "mean": None, "max": None, "p99": None}
    ordered = sorted(samples)
    n = len(ordered)
    rank = max(1, math.ceil(0.99 * n))
    return {
        "count": n,
        "min": ordered[0],
        "mean": round(sum(ordered) / n, 6),
        "max": ordered[-1],
        "p99": ordered[rank - 1],
    }


class StatsCollector:
    """Append-only sink the monitor writes into during a run."""

    def __init__(self, variant: Variant):
        self.variant = variant
        self.records: list[TxnRecord] = []
        self._open: dict[int, TxnRecord] = {}
        self.data_beats = 0
        self.error_log: list[dict] = []

    def open_txn(self, slot: int, serial: int, dir: Direction, burst_len: int, issue_cycle: int) -> None:
        self._open[slot] = TxnRecord(serial, dir, burst_len, issue_cycle)

    def record_phase(self, slot: int, phase, entry_cycle: int, exit_cycle: int) -> None:
        if self.variant is not Variant.FULL:
            return
        name = phase if isinstance(phase, str) else phase.short
        record_phase(self._open[slot], name, entry_cycle, exit_cycle)

    def close_txn(self, slot: int, outcome: str, cycle: int) -> TxnRecord:
        rec = self._open.pop(slot)
        rec.end_cycle = cycle
        rec.outcome = outcome
        self.records.append(rec)
        return rec

    def open_slots(self) -> list[int]:
        return sorted(self._open)

    def log_error(self, entry: dict) -> None:
        self.error_log.append(entry)


@dataclass
class CampaignReport:
    config_digest: str
    variant: str
    n_txns: int
    n_done: int
    n_aborted: int
    n_faults_injected: int
    n_detected: int
    detection_latencies: list[dict]
    latency_stats: dict
    bottleneck: Optional[str]
    total_cycles: int
    data_beats: int
    throughput_beats_per_cycle: float
    events: list[dict]

    def to_dict(self) -> dict:
        out = {
            "config_digest": self.config_digest,
            "variant": self.variant,
            "n_txns": self.n_txns,
            "n_done": self.n_done,
            "n_aborted": self.n_aborted,
            "n_faults_injected": self.n_faults_injected,
            "n_detected": self.n_detected,
            "detection_latencies": self.detection_latencies,
            "latency_stats": self.latency_stats,
            "throughput_beats_per_cycle": self.throughput_beats_per_cycle,
            "total_cycles": self.total_cycles,
            "data_beats": self.data_beats,
            "events": self.events,
        }
        if self.bottleneck is not None:
            out["bottleneck"] = self.bottleneck
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def finalize(
    records: list[TxnRecord],
    *,
    variant: Variant,
    total_cycles: int,
    data_beats: int,
    config_digest: str = "",
    detection_latencies: Optional[list[dict]] = None,
    n_faults_injected: int = 0,
    events: Optional[list[dict]] = None,
) -> CampaignReport:
    detection_latencies = list(detection_latencies or [])
    totals = [r.total_latency for r in records if r.total_latency is not None]
    latency_stats: dict = {"total": summarize(totals)}
    bottleneck = None
    if variant is Variant.FULL:
        per_phase: dict[str, list[int]] = {}
        for r in records:
            for name, entry, exit_ in r.phases:
                per_phase.setdefault(name, []).append(exit_ - entry)
        phases = {name: summarize(per_phase[name]) for name in PHASE_ORDER if name in per_phase}
        latency_stats["phases"] = phases
        if phases:
            bottleneck = max(phases, key=lambda k: (phases[k]["mean"], -PHASE_ORDER.index(k)))
    throughput = round(data_beats / total_cycles, 6) if total_cycles else 0.0
    return CampaignReport(
        config_digest=config_digest,
        variant=variant.value,
        n_txns=len(records),
        n_done=sum(1 for r in records if r.outcome == "Done"),
        n_aborted=sum(1 for r in records if r.outcome == "Aborted"),
        n_faults_injected=n_faults_injected,
        n_detected=sum(1 for d in detection_latencies if d.get("detected")),
        detection_latencies=detection_latencies,
        latency_stats=latency_stats,
        bottleneck=bottleneck,
        total_cycles=total_cycles,
        data_beats=data_beats,
        throughput_beats_per_cycle=throughput,
        events=list(events or []),
    )
