"""
Write/Read guards: phase state machines, timeout counters and protocol checks.

Full-Counter (Fc) keeps one counter per transaction for the phase it is
currently in and re-arms it with that phase's budget at every phase change.
Tiny-Counter (Tc) arms a single counter at issue with the whole-transaction
budget. Both share the same protocol checks.

Counters advance only on prescaler ticks (``cycle % step == 0``). A phase
budget of B cycles becomes a tick limit of ceil(B / step). When the phase
started late inside a prescaler interval, reaching that limit is not yet
proof that B cycles have passed; the counter then latches its sticky bit
and the timeout fires on the following tick. Detection therefore lands on
the first tick at or after ``start + B``: never early, and at most
``step - 1`` cycles late.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .axi_model import (
    MAX_BURST_LEN,
    BeatEvent,
    CycleSample,
    Direction,
    TxnDescriptor,
)
from .id_remapper import RemapTable
from .ott import OutstandingTable, TxnState

log = logging.getLogger(__name__)

PRESCALER_STEPS = (1, 2, 4, 8, 16, 32, 64, 128)


class Variant(enum.Enum):
    TINY = "tc"
    FULL = "fc"

    @classmethod
    def parse(cls, text) -> "Variant":
        if isinstance(text, Variant):
            return text
        t = str(text).strip().lower()
        if t in ("tc", "tiny", "tinycounter", "0"):
            return cls.TINY
        if t in ("fc", "full", "fullcounter", "1"):
            return cls.FULL
        raise ValueError(f"unknown variant {text!r}")


class WritePhase(enum.Enum):
    P1 = "P1_AddrHandshake"
    P2 = "P2_DataPhaseEntry"
    P3 = "P3_FirstDataHandshake"
    P4 = "P4_BurstTransfer"
    P5 = "P5_RespMonitor"
    P6 = "P6_RespReady"

    @property
    def short(self) -> str:
        return self.name


class ReadPhase(enum.Enum):
    R1 = "R1_AddrHandshake"
    R2 = "R2_DataPhaseEntry"
    R3 = "R3_FirstDataHandshake"
    R4 = "R4_BurstTransfer"
    R5 = "R5_LastReady"

    @property
    def short(self) -> str:
        return self.name


Phase = Union[WritePhase, ReadPhase]

WRITE_PHASE_OF = {
    TxnState.WAIT_ADDR_READY: WritePhase.P1,
    TxnState.WAIT_FIRST_DATA: WritePhase.P2,
    TxnState.WAIT_DATA_READY: WritePhase.P3,
    TxnState.BURST: WritePhase.P4,
    TxnState.WAIT_RESP: WritePhase.P5,
    TxnState.WAIT_RESP_READY: WritePhase.P6,
}
READ_PHASE_OF = {
    TxnState.WAIT_ADDR_READY: ReadPhase.R1,
    TxnState.WAIT_FIRST_DATA: ReadPhase.R2,
    TxnState.WAIT_DATA_READY: ReadPhase.R3,
    TxnState.BURST: ReadPhase.R4,
    TxnState.WAIT_RESP_READY: ReadPhase.R5,
}


def phase_of(dir: Direction, state: TxnState) -> Optional[Phase]:
    table = WRITE_PHASE_OF if dir is Direction.WRITE else READ_PHASE_OF
    return table.get(state)


# Budgets --------------------------------------------------------------------


class BudgetOverflow(ValueError):
    """A budget does not fit the timeout counters."""


@dataclass
class BudgetConfig:
    p1: int = 16
    p3: int = 16
    p5: int = 32
    p6: int = 16
    r1: int = 16
    r3: int = 16
    r5: int = 16
    tc_total: int = 0  # 0: adaptive (queue wait + data transfer)
    unit_budget_per_beat: int = 1
    queue_wait_base: int = 32
    queue_wait_per_outstanding: int = 0
    max_budget: int = 0  # counter sizing in cycles; 0: sized to fit the worst case

    def validate(self) -> None:
        for name in ("p1", "p3", "p5", "p6", "r1", "r3", "r5", "unit_budget_per_beat"):
            if getattr(self, name) < 1:
                raise ValueError(f"budget {name} must be >= 1")
        for name in ("tc_total", "queue_wait_base", "queue_wait_per_outstanding", "max_budget"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def worst_case(self, max_outstanding: int, max_burst: int = MAX_BURST_LEN) -> int:
        qw = self.queue_wait_base + self.queue_wait_per_outstanding * max(0, max_outstanding - 1)
        data = self.unit_budget_per_beat * max_burst
        tc = self.tc_total or qw + data
        return max(self.p1, self.p3, self.p5, self.p6, self.r1, self.r3, self.r5, qw, data, tc)

    def counter_range(self, max_outstanding: int) -> int:
        return self.max_budget or self.worst_case(max_outstanding)

    def check_fits(self, max_outstanding: int) -> None:
        if self.max_budget and self.worst_case(max_outstanding) > self.max_budget:
            raise BudgetOverflow(
                f"worst-case budget {self.worst_case(max_outstanding)} exceeds "
                f"counter range of {self.max_budget} cycles"
            )


@dataclass(frozen=True)
class BudgetAssignment:
    """Budgets handed to one transaction at issue.

    ``phases`` is indexed by phase position (P1..P6 or R1..R5) and is only
    populated for the Full-Counter variant.
    """

    total: int
    phases: Optional[tuple[int, ...]] = None
    queue_wait: int = 0
    data_transfer: int = 0

    def for_phase(self, phase: Phase) -> int:
        order = list(type(phase))
        return self.phases[order.index(phase)]


def compute_budget(
    desc: TxnDescriptor, occupancy: int, cfg: BudgetConfig, variant: Variant
) -> BudgetAssignment:
    if desc.burst_len < 1:
        raise ValueError("burst_len must be >= 1")
    queue_wait = cfg.queue_wait_base + cfg.queue_wait_per_outstanding * occupancy
    data = cfg.unit_budget_per_beat * desc.burst_len
    qw_budget = max(1, queue_wait)
    if variant is Variant.TINY:
        total = cfg.tc_total or max(1, queue_wait + data)
        budgets: tuple[int, ...] = (total,)
        out = BudgetAssignment(total=total, queue_wait=queue_wait, data_transfer=data)
    else:
        if desc.dir is Direction.WRITE:
            budgets = (cfg.p1, qw_budget, cfg.p3, data, cfg.p5, cfg.p6)
        else:
            budgets = (cfg.r1, qw_budget, cfg.r3, data, cfg.r5)
        out = BudgetAssignment(
            total=sum(budgets), phases=budgets, queue_wait=queue_wait, data_transfer=data
        )
    if cfg.max_budget and max(budgets) > cfg.max_budget:
        raise BudgetOverflow(f"budget {max(budgets)} exceeds counter range {cfg.max_budget}")
    return out


def counter_bits(max_budget: int, prescaler: int) -> int:
    """Counter width needed to count ``max_budget`` cycles in prescaler ticks."""
    if max_budget < 1 or prescaler < 1:
        raise ValueError("max_budget and prescaler must be >= 1")
    ticks = -(-max_budget // prescaler)
    return math.ceil(math.log2(ticks + 1))


# Counters -------------------------------------------------------------------


class PhaseCounterBank:
    """One prescaled timeout counter per LD slot."""

    def __init__(self, size: int, prescaler_step: int = 1):
        if prescaler_step not in PRESCALER_STEPS:
            raise ValueError(f"prescaler step must be one of {PRESCALER_STEPS}")
        self.size = size
        self.prescaler_step = prescaler_step
        self.prescale_phase = 0
        self.ticks = [0] * size
        self.limit = [0] * size
        self.late = [False] * size
        self.sticky = [False] * size
        self.expired = [False] * size
        self.start_cycle = [0] * size
        self.budget = [0] * size
        self.active: set[int] = set()

    def start(self, slot: int, cycle: int, budget: int) -> None:
        p = self.prescaler_step
        limit = -(-budget // p)
        self.ticks[slot] = 0
        self.limit[slot] = limit
        # phase began too far into the current interval for `limit` ticks to cover `budget`
        self.late[slot] = (cycle % p) > limit * p - budget
        self.sticky[slot] = False
        self.expired[slot] = False
        self.start_cycle[slot] = cycle
        self.budget[slot] = budget
        self.active.add(slot)

    def stop(self, slot: int) -> None:
        self.active.discard(slot)
        self.sticky[slot] = False
        self.expired[slot] = False

    def clear(self) -> None:
        for slot in list(self.active):
            self.stop(slot)

    def tick(self, cycle: int) -> None:
        """Per-cycle prescaler step; counters move only when the divider wraps."""
        self.prescale_phase = cycle % self.prescaler_step
        if self.prescale_phase != 0:
            return
        for slot in self.active:
            if self.expired[slot]:
                continue
            if self.sticky[slot]:
                self.expired[slot] = True
                continue
            t = self.ticks[slot] + 1
            self.ticks[slot] = t
            if t >= self.limit[slot]:
                if self.late[slot]:
                    self.sticky[slot] = True
                else:
                    self.expired[slot] = True

    def expired_slots(self) -> list[int]:
        return sorted(s for s in self.active if self.expired[s])

    def elapsed(self, slot: int, cycle: int) -> int:
        return cycle - self.start_cycle[slot]


# Verdicts -------------------------------------------------------------------


class ViolationKind(enum.Enum):
    B_ID_MISMATCH = "BIdMismatch"
    ORPHAN_W = "OrphanW"
    OUT_OF_ORDER_COMPLETE = "OutOfOrderComplete"
    ORPHAN_B = "OrphanB"
    ORPHAN_R = "OrphanR"
    R_ID_UNKNOWN = "RIdUnknown"


@dataclass(frozen=True)
class Verdict:
    kind: str  # "timeout" | "violation"
    cycle: int
    slot: Optional[int] = None
    phase: Optional[Phase] = None
    violation: Optional[ViolationKind] = None
    dir: Optional[Direction] = None

    @property
    def label(self) -> str:
        if self.kind == "timeout":
            return self.phase.short if self.phase is not None else "TXN"
        return self.violation.value

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "kind": self.kind,
            "slot": self.slot,
            "what": self.label,
            "dir": self.dir.value if self.dir else None,
        }


def timeout(cycle, slot, phase, dir) -> Verdict:
    return Verdict("timeout", cycle, slot=slot, phase=phase, dir=dir)


def violation(cycle, kind, slot=None, dir=None) -> Verdict:
    return Verdict("violation", cycle, slot=slot, violation=kind, dir=dir)


# Guards ---------------------------------------------------------------------

PhaseHook = Callable[[int, Phase, int, int], None]
DoneHook = Callable[[int, int], None]


class _Guard:
    dir: Direction

    def __init__(
        self,
        ott: OutstandingTable,
        bank: PhaseCounterBank,
        remapper: RemapTable,
        variant: Variant,
        on_phase: Optional[PhaseHook] = None,
        on_done: Optional[DoneHook] = None,
    ):
        self.ott = ott
        self.bank = bank
        self.remapper = remapper
        self.variant = variant
        self.on_phase = on_phase
        self.on_done = on_done
        self.phase_entry = [0] * ott.max_outstanding
        self.pending: Optional[int] = None  # admitted, address handshake outstanding

    def arm(self, slot: int, cycle: int) -> None:
        """Start monitoring a freshly enqueued transaction at its issue cycle."""
        e = self.ott.ld[slot]
        self.phase_entry[slot] = cycle
        if self.variant is Variant.FULL:
            e.budget = e.budgets.phases[0]
        else:
            e.budget = e.budgets.total
        self.bank.start(slot, cycle, e.budget)
        self.pending = slot

    def advance(self, slot: int, state: TxnState, cycle: int) -> None:
        e = self.ott.ld[slot]
        old = phase_of(e.dir, e.state)
        if self.on_phase is not None and old is not None:
            self.on_phase(slot, old, self.phase_entry[slot], cycle)
        e.state = state
        self.phase_entry[slot] = cycle
        if state is TxnState.DONE:
            self.bank.stop(slot)
            if self.on_done is not None:
                self.on_done(slot, cycle)
            return
        if self.variant is Variant.FULL:
            new = phase_of(e.dir, state)
            e.budget = e.budgets.for_phase(new)
            self.bank.start(slot, cycle, e.budget)

    def _address_fired(self, cycle: int) -> None:
        slot = self.pending
        if slot is None:
            log.warning("cycle %d: %s address handshake for an untracked request",
                        cycle, self.dir.value)
            return
        self.pending = None
        self.advance(slot, TxnState.WAIT_FIRST_DATA, cycle)


class WriteGuard(_Guard):
    dir = Direction.WRITE

    def open_burst_beats(self, sample: CycleSample) -> Optional[int]:
        """Beats already moved by the write burst the next W beat belongs to."""
        front = self.ott.ei_front(Direction.WRITE)
        if front is None:
            return None
        e = self.ott.ld[front]
        accepted = e.state is not TxnState.WAIT_ADDR_READY or (
            front == self.pending and sample.aw.valid and sample.aw.ready
        )
        return e.beats_done if accepted else None

    def step(self, events: set[BeatEvent], sample: CycleSample, orphan_w: bool = False) -> list[Verdict]:
        cycle = sample.cycle
        ott = self.ott
        out: list[Verdict] = []

        if BeatEvent.AW_FIRE in events:
            self._address_fired(cycle)

        if orphan_w:
            out.append(violation(cycle, ViolationKind.ORPHAN_W, dir=Direction.WRITE))
        elif sample.w.valid:
            front = ott.ei_front(Direction.WRITE)
            if front is not None and ott.ld[front].state is not TxnState.WAIT_ADDR_READY:
                e = ott.ld[front]
                if e.state is TxnState.WAIT_FIRST_DATA:
                    self.advance(front, TxnState.WAIT_DATA_READY, cycle)
                if BeatEvent.W_FIRE in events:
                    if e.state is TxnState.WAIT_DATA_READY:
                        self.advance(front, TxnState.BURST, cycle)
                    e.beats_done += 1
                    if BeatEvent.W_LAST in events:
                        self.advance(front, TxnState.WAIT_RESP, cycle)
                        ott.pop_ei(Direction.WRITE, front)

        if sample.b.valid:
            mapped = self.remapper.lookup(sample.b.id)
            head = ott.head_of(mapped, Direction.WRITE) if mapped is not None else None
            if head is None:
                kind = (ViolationKind.B_ID_MISMATCH if self._awaiting_response()
                        else ViolationKind.ORPHAN_B)
                out.append(violation(cycle, kind, dir=Direction.WRITE))
            else:
                e = ott.ld[head]
                if e.state is TxnState.WAIT_RESP:
                    self.advance(head, TxnState.WAIT_RESP_READY, cycle)
                if e.state is TxnState.WAIT_RESP_READY:
                    if BeatEvent.B_FIRE in events:
                        self.advance(head, TxnState.DONE, cycle)
                        ott.complete(head)
                else:
                    out.append(violation(cycle, ViolationKind.B_ID_MISMATCH, head, Direction.WRITE))
        return out

    def _awaiting_response(self) -> bool:
        return any(
            e.in_use and e.dir is Direction.WRITE
            and e.state in (TxnState.WAIT_RESP, TxnState.WAIT_RESP_READY)
            for e in self.ott.ld
        )


class ReadGuard(_Guard):
    dir = Direction.READ

    def head_for(self, raw_id: int) -> Optional[int]:
        mapped = self.remapper.lookup(raw_id)
        return None if mapped is None else self.ott.head_of(mapped, Direction.READ)

    def open_burst_beats(self, sample: CycleSample) -> Optional[int]:
        if not sample.r.valid:
            return None
        head = self.head_for(sample.r.id)
        if head is None:
            return None
        e = self.ott.ld[head]
        return None if e.state is TxnState.WAIT_ADDR_READY else e.beats_done

    def step(self, events: set[BeatEvent], sample: CycleSample) -> list[Verdict]:
        cycle = sample.cycle
        out: list[Verdict] = []
        if BeatEvent.AR_FIRE in events:
            self._address_fired(cycle)
        if not sample.r.valid:
            return out

        head = self.head_for(sample.r.id)
        if head is None:
            out.append(violation(cycle, ViolationKind.R_ID_UNKNOWN, dir=Direction.READ))
            return out
        e = self.ott.ld[head]
        if e.state is TxnState.WAIT_ADDR_READY:
            out.append(violation(cycle, ViolationKind.ORPHAN_R, head, Direction.READ))
            return out
        fired = BeatEvent.R_FIRE in events
        if e.state is TxnState.WAIT_FIRST_DATA:
            self.advance(head, TxnState.WAIT_DATA_READY, cycle)
        if fired:
            if e.state is TxnState.WAIT_DATA_READY:
                self.advance(head, TxnState.BURST, cycle)
            e.beats_done += 1
        if sample.r.last and e.state is TxnState.BURST:
            self.advance(head, TxnState.WAIT_RESP_READY, cycle)
        if fired and sample.r.last and e.state is TxnState.WAIT_RESP_READY:
            self.advance(head, TxnState.DONE, cycle)
            self.ott.complete(head)
        return out
