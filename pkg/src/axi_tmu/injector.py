"""
Deterministic fault injection.

A ``FaultSpec`` names a fault kind, the ordinal of the transaction it hits,
and when it arms. The ``Injector`` is consulted by the manager and
subordinate models whenever they are about to drive a signal for a given
transaction; it answers whether that signal should be withheld or corrupted.

The trigger cycle of a fault is the first cycle on which the injector
actually changed what a model would otherwise have driven.

Campaign file format, one fault per line::

    kind,target_txn,trigger,seed

``trigger`` is ``start``, ``beat:N``, ``cycle:N`` or ``random``; a negative
``target_txn`` picks a matching transaction with ``seed``.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .axi_model import Direction


class FaultKind(enum.Enum):
    AW_READY_WITHHELD = "AwReadyWithheld"
    W_VALID_WITHHELD = "WValidWithheld"
    W_READY_WITHHELD = "WReadyWithheld"
    MID_BURST_STALL = "MidBurstStall"
    B_VALID_WITHHELD = "BValidWithheld"
    B_HANDSHAKE_OR_ID_ERROR = "BHandshakeOrIdError"
    AR_READY_WITHHELD = "ArReadyWithheld"
    R_VALID_WITHHELD = "RValidWithheld"
    R_ID_ERROR = "RIdError"

    @property
    def dir(self) -> Direction:
        return Direction.READ if self in READ_KINDS else Direction.WRITE

    @property
    def per_beat(self) -> bool:
        return self in _BEAT_KINDS


WRITE_KINDS = (
    FaultKind.AW_READY_WITHHELD,
    FaultKind.W_VALID_WITHHELD,
    FaultKind.W_READY_WITHHELD,
    FaultKind.MID_BURST_STALL,
    FaultKind.B_VALID_WITHHELD,
    FaultKind.B_HANDSHAKE_OR_ID_ERROR,
)
READ_KINDS = (FaultKind.AR_READY_WITHHELD, FaultKind.R_VALID_WITHHELD, FaultKind.R_ID_ERROR)
_BEAT_KINDS = {
    FaultKind.W_VALID_WITHHELD,
    FaultKind.W_READY_WITHHELD,
    FaultKind.MID_BURST_STALL,
    FaultKind.R_VALID_WITHHELD,
    FaultKind.R_ID_ERROR,
}


class TargetNotReached(Exception):
    """The run ended before a fault's trigger condition occurred."""


@dataclass(frozen=True)
class Trigger:
    kind: str = "start"  # start | beat | cycle | random
    value: int = 0

    @classmethod
    def parse(cls, text: str) -> "Trigger":
        t = text.strip().lower()
        if t in ("start", "atphasestart", ""):
            return cls("start")
        if t == "random":
            return cls("random")
        name, _, num = t.partition(":")
        if name in ("beat", "atbeat", "cycle", "atcycle") and num:
            return cls("beat" if "beat" in name else "cycle", int(num))
        raise ValueError(f"bad trigger {text!r}")

    def __str__(self) -> str:
        return self.kind if self.kind in ("start", "random") else f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    target_txn: int
    trigger: Trigger = Trigger()
    seed: int = 0

    @classmethod
    def parse(cls, line: str) -> "FaultSpec":
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (2, 3, 4):
            raise ValueError(f"fault line needs kind,target_txn[,trigger[,seed]]: {line!r}")
        kind = _parse_kind(parts[0])
        trig = Trigger.parse(parts[2]) if len(parts) > 2 else Trigger()
        seed = int(parts[3]) if len(parts) > 3 else 0
        return cls(kind, int(parts[1]), trig, seed)

    def to_line(self) -> str:
        return f"{self.kind.value},{self.target_txn},{self.trigger},{self.seed}"


def _parse_kind(text: str) -> FaultKind:
    t = text.strip().lower()
    for k in FaultKind:
        if k.value.lower() == t or k.name.lower() == t:
            return k
    raise ValueError(f"unknown fault kind {text!r}")


def parse_campaign(text: str) -> list[FaultSpec]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(FaultSpec.parse(line))
    return out


def resolve(spec: FaultSpec, plans: Sequence) -> FaultSpec:
    """Pin random targets/triggers using the fault's own seed."""
    rng = random.Random(spec.seed)
    target = spec.target_txn
    if target < 0:
        matching = [p.ordinal for p in plans if p.dir is spec.kind.dir]
        if not matching:
            return spec
        target = rng.choice(matching)
    trig = spec.trigger
    if trig.kind == "random":
        if spec.kind.per_beat and 0 <= target < len(plans):
            trig = Trigger("beat", rng.randrange(plans[target].burst_len))
        else:
            trig = Trigger("start")
    return replace(spec, target_txn=target, trigger=trig)


def random_campaign(plans: Sequence, seed: int, n_faults: int = 1,
                    kinds: Sequence[FaultKind] = tuple(FaultKind)) -> list[FaultSpec]:
    """Seeded random faults, each on a distinct transaction of a matching direction."""
    rng = random.Random(seed)
    out: list[FaultSpec] = []
    used: set[int] = set()
    for _ in range(n_faults):
        choices = [k for k in kinds if any(p.dir is k.dir and p.ordinal not in used for p in plans)]
        if not choices:
            break
        kind = rng.choice(choices)
        target = rng.choice([p.ordinal for p in plans if p.dir is kind.dir and p.ordinal not in used])
        used.add(target)
        trig = Trigger("start")
        if kind.per_beat and plans[target].burst_len > 1 and rng.random() < 0.5:
            trig = Trigger("beat", rng.randrange(plans[target].burst_len))
        out.append(FaultSpec(kind, target, trig, rng.randrange(1 << 16)))
    return out


class Injector:
    def __init__(self, faults: Sequence[FaultSpec], plans: Sequence = (), corrupt_id: int = 0):
        self.faults = [resolve(f, plans) for f in faults]
        self.burst_of = {p.ordinal: p.burst_len for p in plans}
        self.corrupt_id = corrupt_id
        self.now = 0
        self.triggered: list[Optional[int]] = [None] * len(self.faults)
        self.cancelled = [False] * len(self.faults)
        self._by_target: dict[tuple[int, FaultKind], int] = {}
        for i, f in enumerate(self.faults):
            self._by_target.setdefault((f.target_txn, f.kind), i)

    def _first_beat(self, f: FaultSpec) -> int:
        if f.trigger.kind == "beat":
            return f.trigger.value
        if f.kind is FaultKind.MID_BURST_STALL and f.trigger.kind == "start":
            return self.burst_of.get(f.target_txn, 2) // 2
        return 0

    def _fires(self, tag: Optional[int], kind: FaultKind, beat: int = 0) -> bool:
        if tag is None:
            return False
        i = self._by_target.get((tag, kind))
        if i is None or self.cancelled[i]:
            return False
        f = self.faults[i]
        if f.trigger.kind == "cycle":
            if self.now < f.trigger.value:
                return False
        elif kind.per_beat and beat < self._first_beat(f):
            return False
        if self.triggered[i] is None:
            self.triggered[i] = self.now
        return True

    # Hooks; each is asked only when the model is about to drive the signal.

    def aw_ready_blocked(self, tag) -> bool:
        return self._fires(tag, FaultKind.AW_READY_WITHHELD)

    def ar_ready_blocked(self, tag) -> bool:
        return self._fires(tag, FaultKind.AR_READY_WITHHELD)

    def w_valid_blocked(self, tag, beat: int) -> bool:
        return self._fires(tag, FaultKind.W_VALID_WITHHELD, beat)

    def w_ready_blocked(self, tag, beat: int) -> bool:
        return (self._fires(tag, FaultKind.W_READY_WITHHELD, beat)
                or self._fires(tag, FaultKind.MID_BURST_STALL, beat))

    def b_valid_blocked(self, tag) -> bool:
        return self._fires(tag, FaultKind.B_VALID_WITHHELD)

    def b_id(self, tag, raw_id: int) -> int:
        return self.corrupt_id if self._fires(tag, FaultKind.B_HANDSHAKE_OR_ID_ERROR) else raw_id

    def r_valid_blocked(self, tag, beat: int) -> bool:
        return self._fires(tag, FaultKind.R_VALID_WITHHELD, beat)

    def r_id(self, tag, beat: int, raw_id: int) -> int:
        return self.corrupt_id if self._fires(tag, FaultKind.R_ID_ERROR, beat) else raw_id

    def cancel_target(self, tag: int) -> None:
        """The target was aborted; its fault can no longer act."""
        for i, f in enumerate(self.faults):
            if f.target_txn == tag:
                self.cancelled[i] = True

    def unreached(self) -> list[int]:
        return [i for i, t in enumerate(self.triggered) if t is None]
