"""
The transaction monitoring unit: remapper, OTT, guards and fault unit
evaluated once per clock cycle.

A cycle is split in two so the monitor can back-pressure requests it has no
room to track:

``begin_cycle``
    prescaler tick, then admission of newly presented AW/AR requests. The
    returned ``Gates`` tell the bus whether each request may pass.
``end_cycle``
    the settled handshakes of the cycle drive the phase machines; expired
    counters and protocol checks produce verdicts; any verdict starts
    isolation.

``observe`` runs both halves on a recorded sample, which is how traces are
linted offline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .axi_model import (
    AddrChannel,
    BeatEvent,
    CycleSample,
    Direction,
    OrphanW,
    TxnDescriptor,
    TxnId,
    classify_beat,
)
from .config import LogLevel, RegisterFile
from .fault_unit import FaultUnit, IsolationState, SyntheticResponse
from .guard import (
    PhaseCounterBank,
    ReadGuard,
    Variant,
    Verdict,
    WriteGuard,
    compute_budget,
    phase_of,
    timeout,
)
from .id_remapper import RemapTable, Stall
from .ott import OutstandingTable
from .stats import StatsCollector

log = logging.getLogger(__name__)


@dataclass
class Gates:
    aw_open: bool = True
    ar_open: bool = True
    severed: bool = False
    response: Optional[SyntheticResponse] = None
    aw_slot: Optional[int] = None  # slot admitted this cycle
    ar_slot: Optional[int] = None


class Tmu:
    def __init__(
        self,
        regs: RegisterFile,
        max_uniq_ids: int = 4,
        txn_per_uniq_id: int = 4,
        max_outstanding: Optional[int] = None,
        reset_latency: int = 16,
        stats: Optional[StatsCollector] = None,
    ):
        self.regs = regs
        self.variant = regs.variant
        self.remapper = RemapTable(max_uniq_ids)
        self.ott = OutstandingTable(max_uniq_ids, txn_per_uniq_id, max_outstanding, self.remapper)
        regs.max_outstanding = self.ott.max_outstanding
        regs.budgets.check_fits(self.ott.max_outstanding)
        regs.busy = lambda: self.ott.occupancy > 0
        self.bank = PhaseCounterBank(self.ott.max_outstanding, regs.prescaler_step)
        self.stats = stats if stats is not None else StatsCollector(self.variant)
        on_phase = self.stats.record_phase if self.variant is Variant.FULL else None
        self.write_guard = WriteGuard(self.ott, self.bank, self.remapper, self.variant,
                                      on_phase, self._on_done)
        self.read_guard = ReadGuard(self.ott, self.bank, self.remapper, self.variant,
                                    on_phase, self._on_done)
        self.fault_unit = FaultUnit(self.ott, reset_latency, regs.irq_enable)
        self.verdicts: list[Verdict] = []
        self.cycle = -1
        self.debug = False
        self.irq = False
        self.last_aborted: list[int] = []
        self.pre_abort_dump: list[str] = []

    @property
    def state(self) -> IsolationState:
        return self.fault_unit.state

    @property
    def monitoring(self) -> bool:
        return self.fault_unit.state is IsolationState.MONITORING

    # -- first half ----------------------------------------------------------

    def begin_cycle(self, cycle: int, aw: AddrChannel, ar: AddrChannel) -> Gates:
        self.cycle = cycle
        self.irq = False
        if not self.regs.enable:
            return Gates()
        fu = self.fault_unit
        fu.irq_enable = self.regs.irq_enable
        if fu.severed:
            return Gates(aw_open=False, ar_open=False, severed=True, response=fu.current_response())
        if fu.state is IsolationState.RESUMING:
            return Gates(aw_open=False, ar_open=False)
        if self.bank.prescaler_step != self.regs.prescaler_step and self.ott.occupancy == 0:
            self.bank.prescaler_step = self.regs.prescaler_step
        self.bank.tick(cycle)
        g = Gates()
        g.aw_open, g.aw_slot = self._admit(self.write_guard, Direction.WRITE, aw, cycle)
        g.ar_open, g.ar_slot = self._admit(self.read_guard, Direction.READ, ar, cycle)
        return g

    def _admit(self, guard, dir: Direction, ch: AddrChannel, cycle: int):
        if not ch.valid or guard.pending is not None:
            return True, None
        try:
            mapped = self.remapper.map(ch.id)
        except Stall:
            return False, None
        desc = TxnDescriptor(dir, TxnId(ch.id, mapped), ch.addr, ch.burst_len, cycle)
        budgets = compute_budget(desc, self.ott.occupancy, self.regs.budgets, self.variant)
        try:
            slot = self.ott.enqueue(desc, budgets)
        except Stall:
            self.remapper.release(mapped)
            return False, None
        guard.arm(slot, cycle)
        self.stats.open_txn(slot, self.ott.ld[slot].serial, dir, ch.burst_len, cycle)
        return True, slot

    # -- second half ---------------------------------------------------------

    def end_cycle(self, sample: CycleSample) -> list[Verdict]:
        if not self.regs.enable:
            return []
        if not self.monitoring:
            self.fault_unit.step(sample)
            return []
        cycle = sample.cycle
        wg, rg = self.write_guard, self.read_guard
        orphan = False
        try:
            events = classify_beat(sample, wg.open_burst_beats(sample), rg.open_burst_beats(sample))
        except OrphanW as exc:
            events, orphan = exc.events, True
        self.stats.data_beats += (BeatEvent.W_FIRE in events) + (BeatEvent.R_FIRE in events)

        verdicts = wg.step(events, sample, orphan)
        verdicts += rg.step(events, sample)
        flagged = {v.slot for v in verdicts if v.slot is not None}
        for slot in self.bank.expired_slots():
            if slot in flagged:
                continue
            e = self.ott.ld[slot]
            e.timeout_flag = True
            phase = phase_of(e.dir, e.state) if self.variant is Variant.FULL else None
            verdicts.append(timeout(cycle, slot, phase, e.dir))

        if verdicts:
            self._isolate(verdicts, cycle)
        if self.debug:
            self.ott.check_structure()
        return verdicts

    def observe(self, sample: CycleSample) -> list[Verdict]:
        self.begin_cycle(sample.cycle, sample.aw, sample.ar)
        return self.end_cycle(sample)

    # -- internals -----------------------------------------------------------

    def _on_done(self, slot: int, cycle: int) -> None:
        rec = self.stats.close_txn(slot, "Done", cycle)
        st = self.regs.stats
        st["txns_done"] += 1
        st["max_latency"] = max(st["max_latency"], rec.total_latency)
        if self.regs.log_level >= LogLevel.FULL:
            self.stats.log_error({"cycle": cycle, "kind": "complete", "serial": rec.serial,
                                  "dir": rec.dir.value, "latency": rec.total_latency})

    def _isolate(self, verdicts: list[Verdict], cycle: int) -> None:
        self.verdicts.extend(verdicts)
        if self.regs.log_level >= LogLevel.ERRORS:
            for v in verdicts:
                self.stats.log_error(v.to_dict())
        for slot in self.stats.open_slots():
            self.stats.close_txn(slot, "Aborted", cycle)
        self.refresh_elapsed(cycle)
        self.pre_abort_dump = self.ott.dump()
        out = self.fault_unit.on_verdict(verdicts, cycle)
        self.bank.clear()
        self.write_guard.pending = None
        self.read_guard.pending = None
        self.irq = out.irq
        self.last_aborted = [r.slot for r in out.synthetic_responses]
        st = self.regs.stats
        st["txns_aborted"] += len(out.synthetic_responses)
        st["faults"] += 1
        st["last_fault_cycle"] = cycle

    def refresh_elapsed(self, cycle: Optional[int] = None) -> None:
        cycle = self.cycle if cycle is None else cycle
        for slot in self.ott.in_use_slots():
            if slot in self.bank.active:
                self.ott.ld[slot].elapsed = self.bank.elapsed(slot, cycle)

    def dump_ott(self) -> list[str]:
        self.refresh_elapsed()
        return self.ott.dump()
