"""
AXI4 signal- and transaction-level data model.

One ``CycleSample`` holds the five channels' valid/ready handshake signals
for a single clock cycle. Everything else in the package consumes or
produces these samples.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, TextIO

MAX_BURST_LEN = 256


class ChannelId(enum.Enum):
    AW = "aw"
    W = "w"
    B = "b"
    AR = "ar"
    R = "r"


class RespCode(enum.Enum):
    OKAY = "OKAY"
    SLVERR = "SLVERR"


class Direction(enum.Enum):
    WRITE = "write"
    READ = "read"


class BeatEvent(enum.Enum):
    AW_FIRE = "AwFire"
    W_FIRE = "WFire"
    W_FIRST = "WFirst"
    W_LAST = "WLast"
    B_FIRE = "BFire"
    AR_FIRE = "ArFire"
    R_FIRE = "RFire"
    R_FIRST = "RFirst"
    R_LAST = "RLast"


class OrphanW(Exception):
    """A W beat fired with no accepted write burst to attach it to.

    ``events`` carries the cycle's remaining (non-W) events so callers can
    report the violation and still process the other channels.
    """

    def __init__(self, message: str, events: Optional[set] = None):
        super().__init__(message)
        self.events = events if events is not None else set()


@dataclass(frozen=True)
class TxnId:
    raw: int
    mapped: Optional[int] = None


@dataclass(slots=True)
class AddrChannel:
    valid: bool = False
    ready: bool = False
    id: int = 0
    addr: int = 0
    burst_len: int = 0


@dataclass(slots=True)
class WChannel:
    valid: bool = False
    ready: bool = False
    last: bool = False


@dataclass(slots=True)
class BChannel:
    valid: bool = False
    ready: bool = False
    id: int = 0
    resp: RespCode = RespCode.OKAY


@dataclass(slots=True)
class RChannel:
    valid: bool = False
    ready: bool = False
    id: int = 0
    last: bool = False
    resp: RespCode = RespCode.OKAY


@dataclass(slots=True)
class CycleSample:
    cycle: int
    aw: AddrChannel = field(default_factory=AddrChannel)
    w: WChannel = field(default_factory=WChannel)
    b: BChannel = field(default_factory=BChannel)
    ar: AddrChannel = field(default_factory=AddrChannel)
    r: RChannel = field(default_factory=RChannel)

    def validate(self) -> None:
        for ch in (self.aw, self.ar):
            if ch.valid and not 1 <= ch.burst_len <= MAX_BURST_LEN:
                raise ValueError(
                    f"cycle {self.cycle}: burst_len {ch.burst_len} outside [1, {MAX_BURST_LEN}]"
                )


@dataclass(frozen=True)
class TxnDescriptor:
    dir: Direction
    id: TxnId
    addr: int
    burst_len: int
    issue_cycle: int

    def __post_init__(self):
        if self.burst_len < 1:
            raise ValueError("burst_len must be >= 1")


def handshake_fired(valid: bool, ready: bool) -> bool:
    return bool(valid and ready)


def classify_beat(
    s: CycleSample,
    w_open_beats: Optional[int] = None,
    r_open_beats: Optional[int] = None,
) -> set[BeatEvent]:
    """Return the handshake events of one cycle.

    ``w_open_beats`` is the number of beats already transferred by the oldest
    accepted write burst, or None when no write burst is open. ``r_open_beats``
    plays the same role for the read burst addressed by ``r.id``.
    """
    events: set[BeatEvent] = set()
    orphan = False
    if s.aw.valid and s.aw.ready:
        events.add(BeatEvent.AW_FIRE)
    if s.w.valid and s.w.ready and w_open_beats is None:
        orphan = True
    elif s.w.valid and s.w.ready:
        events.add(BeatEvent.W_FIRE)
        if w_open_beats == 0:
            events.add(BeatEvent.W_FIRST)
        if s.w.last:
            events.add(BeatEvent.W_LAST)
    if s.b.valid and s.b.ready:
        events.add(BeatEvent.B_FIRE)
    if s.ar.valid and s.ar.ready:
        events.add(BeatEvent.AR_FIRE)
    if s.r.valid and s.r.ready:
        events.add(BeatEvent.R_FIRE)
        if r_open_beats == 0:
            events.add(BeatEvent.R_FIRST)
        if s.r.last:
            events.add(BeatEvent.R_LAST)
    if orphan:
        raise OrphanW(f"cycle {s.cycle}: W beat with no open write burst", events)
    return events


# Trace CSV ------------------------------------------------------------------

TRACE_COLUMNS = (
    "cycle",
    "aw_valid", "aw_ready", "aw_id", "aw_addr", "aw_len",
    "w_valid", "w_ready", "w_last",
    "b_valid", "b_ready", "b_id", "b_resp",
    "ar_valid", "ar_ready", "ar_id", "ar_addr", "ar_len",
    "r_valid", "r_ready", "r_id", "r_last", "r_resp",
)


def sample_to_row(s: CycleSample) -> list:
    aw, w, b, ar, r = s.aw, s.w, s.b, s.ar, s.r
    return [
        s.cycle,
        int(aw.valid), int(aw.ready),
        aw.id if aw.valid else 0, aw.addr if aw.valid else 0, aw.burst_len if aw.valid else 0,
        int(w.valid), int(w.ready), int(w.last and w.valid),
        int(b.valid), int(b.ready), b.id if b.valid else 0, b.resp.value if b.valid else 0,
        int(ar.valid), int(ar.ready),
        ar.id if ar.valid else 0, ar.addr if ar.valid else 0, ar.burst_len if ar.valid else 0,
        int(r.valid), int(r.ready), r.id if r.valid else 0,
        int(r.last and r.valid), r.resp.value if r.valid else 0,
    ]


def _resp(text: str) -> RespCode:
    return RespCode.SLVERR if text.strip() == "SLVERR" else RespCode.OKAY


def row_to_sample(row: dict) -> CycleSample:
    g = lambda k: int(row[k])  # noqa: E731
    return CycleSample(
        cycle=g("cycle"),
        aw=AddrChannel(bool(g("aw_valid")), bool(g("aw_ready")), g("aw_id"), g("aw_addr"), g("aw_len")),
        w=WChannel(bool(g("w_valid")), bool(g("w_ready")), bool(g("w_last"))),
        b=BChannel(bool(g("b_valid")), bool(g("b_ready")), g("b_id"), _resp(row["b_resp"])),
        ar=AddrChannel(bool(g("ar_valid")), bool(g("ar_ready")), g("ar_id"), g("ar_addr"), g("ar_len")),
        r=RChannel(bool(g("r_valid")), bool(g("r_ready")), g("r_id"), bool(g("r_last")), _resp(row["r_resp"])),
    )


def write_trace(samples: Iterable[CycleSample], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for s in samples:
        writer.writerow(sample_to_row(s))


def trace_to_text(samples: Iterable[CycleSample]) -> str:
    buf = io.StringIO()
    write_trace(samples, buf)
    return buf.getvalue()


def read_trace(fh: TextIO) -> Iterator[CycleSample]:
    reader = csv.DictReader(fh, skipinitialspace=True)
    if reader.fieldnames is None:
        return
    missing = [c for c in TRACE_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"trace is missing columns: {', '.join(missing)}")
    for row in reader:
        yield row_to_sample(row)
