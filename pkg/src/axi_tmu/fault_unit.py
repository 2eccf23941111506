"""Isolation and recovery sequence run after a timeout or protocol violation."""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .axi_model import CycleSample, Direction, RespCode
from .ott import OutstandingTable

log = logging.getLogger(__name__)


class IsolationState(enum.Enum):
    MONITORING = "Monitoring"
    ISOLATED = "Isolated"
    RESETTING = "Resetting"
    RESUMING = "Resuming"


@dataclass(frozen=True)
class SyntheticResponse:
    dir: Direction
    id: int
    slot: int
    resp: RespCode = RespCode.SLVERR


@dataclass
class RecoveryOutputs:
    sever_request_path: bool = False
    sever_response_path: bool = False
    irq: bool = False
    reset_req: bool = False
    synthetic_responses: list[SyntheticResponse] = field(default_factory=list)


class ResetUnit:
    """External reset controller, modelled as a fixed delay."""

    def __init__(self, latency: int = 16):
        if latency < 1:
            raise ValueError("reset latency must be >= 1")
        self.latency = latency
        self.done_at: Optional[int] = None

    def request(self, cycle: int) -> int:
        self.done_at = cycle + self.latency
        return self.done_at

    def poll(self, cycle: int) -> bool:
        if self.done_at is not None and cycle >= self.done_at:
            self.done_at = None
            return True
        return False


class FaultUnit:
    def __init__(self, ott: OutstandingTable, reset_latency: int = 16, irq_enable: bool = True):
        self.ott = ott
        self.reset_unit = ResetUnit(reset_latency)
        self.irq_enable = irq_enable
        self.state = IsolationState.MONITORING
        self.since: Optional[int] = None
        self.done_at: Optional[int] = None
        self.reset_done = False
        self.pending: deque[SyntheticResponse] = deque()
        self.irq_pulses = 0
        self.isolations = 0
        self.events: list[dict] = []
        self.last_resume_cycle: Optional[int] = None

    @property
    def severed(self) -> bool:
        return self.state in (IsolationState.ISOLATED, IsolationState.RESETTING)

    def current_response(self) -> Optional[SyntheticResponse]:
        return self.pending[0] if (self.severed and self.pending) else None

    def outputs(self) -> RecoveryOutputs:
        return RecoveryOutputs(
            sever_request_path=self.severed,
            sever_response_path=self.severed,
            reset_req=self.state in (IsolationState.ISOLATED, IsolationState.RESETTING)
            and not self.reset_done,
            synthetic_responses=list(self.pending),
        )

    def on_verdict(self, verdicts, cycle: int) -> RecoveryOutputs:
        if not verdicts or self.state is not IsolationState.MONITORING:
            return RecoveryOutputs()
        entries = {s: self.ott.ld[s] for s in self.ott.in_use_slots()}
        aborted = self.ott.abort_all()
        responses = [SyntheticResponse(entries[s].dir, entries[s].raw_id, s) for s in aborted]
        self.pending.extend(responses)
        self.state = IsolationState.ISOLATED
        self.since = cycle
        self.reset_done = False
        self.done_at = self.reset_unit.request(cycle)
        self.isolations += 1
        irq = self.irq_enable
        if irq:
            self.irq_pulses += 1
        first = verdicts[0]
        self.events.append({
            "cycle": cycle,
            "kind": first.kind,
            "slot": first.slot,
            "what": first.label,
            "action": "isolate",
            "aborted": len(aborted),
        })
        log.info("cycle %d: %s %s on slot %s, isolating (%d aborted)",
                 cycle, first.kind, first.label, first.slot, len(aborted))
        return RecoveryOutputs(True, True, irq, True, responses)

    def on_reset_done(self, cycle: int) -> None:
        if self.state is not IsolationState.RESETTING:
            log.warning("cycle %d: reset completion while %s; ignored", cycle, self.state.value)
            return
        self.reset_done = True
        self.events.append({"cycle": cycle, "kind": "reset_done", "slot": None,
                            "what": "", "action": "reset"})

    def step(self, sample: CycleSample) -> None:
        """Advance the recovery sequence at the end of a cycle."""
        cycle = sample.cycle
        if self.severed and self.pending:
            resp = self.pending[0]
            ch = sample.b if resp.dir is Direction.WRITE else sample.r
            if ch.valid and ch.ready and ch.id == resp.id:
                self.pending.popleft()

        if self.state is IsolationState.ISOLATED and cycle > self.since:
            self.state = IsolationState.RESETTING
        if self.state is IsolationState.RESETTING:
            if self.reset_unit.poll(cycle):
                self.on_reset_done(cycle)
            if self.reset_done and not self.pending:
                self.state = IsolationState.RESUMING
                return
        if self.state is IsolationState.RESUMING:
            self.state = IsolationState.MONITORING
            self.last_resume_cycle = cycle
            self.events.append({"cycle": cycle, "kind": "resume", "slot": None,
                                "what": "", "action": "resume"})
