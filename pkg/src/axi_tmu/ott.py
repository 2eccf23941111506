"""
Outstanding Transaction Table.

Three linked subtables held in flat arrays:

* HT: per (direction, mapped ID) head/tail pointers into LD,
* LD: one entry per in-flight transaction, chained through ``next``,
* EI: issue-order queues of LD slots, one for writes and one for reads.

Free LD slots sit on a min-heap so allocation is deterministic (lowest
index first).
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass
from typing import Any, Optional

from .axi_model import Direction, TxnDescriptor
from .id_remapper import RemapTable, Stall

NULL = None


class TxnState(enum.Enum):
    WAIT_ADDR_READY = "WaitAddrReady"
    WAIT_FIRST_DATA = "WaitFirstData"
    WAIT_DATA_READY = "WaitDataReady"
    BURST = "Burst"
    WAIT_RESP = "WaitResp"
    WAIT_RESP_READY = "WaitRespReady"
    DONE = "Done"
    ABORTED = "Aborted"

    @property
    def terminal(self) -> bool:
        return self in (TxnState.DONE, TxnState.ABORTED)


class OutOfOrderComplete(Exception):
    """A transaction completed ahead of an older one with the same ID."""


@dataclass(slots=True)
class HtEntry:
    head: Optional[int] = NULL
    tail: Optional[int] = NULL


@dataclass(slots=True)
class LdEntry:
    tid: int = 0
    raw_id: int = 0
    dir: Direction = Direction.WRITE
    addr: int = 0
    state: TxnState = TxnState.DONE
    budget: int = 0
    budgets: Any = None
    elapsed: int = 0
    timeout_flag: bool = False
    next: Optional[int] = NULL
    burst_len: int = 0
    issue_cycle: int = 0
    beats_done: int = 0
    serial: int = -1
    in_use: bool = False


class OutstandingTable:
    def __init__(
        self,
        max_uniq_ids: int,
        txn_per_uniq_id: int,
        max_outstanding: Optional[int] = None,
        remapper: Optional[RemapTable] = None,
    ):
        cap = max_uniq_ids * txn_per_uniq_id
        if max_outstanding is None:
            max_outstanding = cap
        if not 1 <= max_outstanding <= cap:
            raise ValueError(
                f"max_outstanding {max_outstanding} must lie in [1, {cap}] "
                f"(MaxUniqIDs x TxnPerUniqID)"
            )
        self.max_uniq_ids = max_uniq_ids
        self.txn_per_uniq_id = txn_per_uniq_id
        self.max_outstanding = max_outstanding
        self.remapper = remapper
        self.ht = {
            Direction.WRITE: [HtEntry() for _ in range(max_uniq_ids)],
            Direction.READ: [HtEntry() for _ in range(max_uniq_ids)],
        }
        self.ld = [LdEntry() for _ in range(max_outstanding)]
        self.ei = {Direction.WRITE: deque(), Direction.READ: deque()}
        self.free_list = list(range(max_outstanding))
        heapq.heapify(self.free_list)
        self.occupancy = 0
        self._per_id = [0] * max_uniq_ids
        self._serial = 0
        self.enqueued = 0
        self.completed = 0
        self.aborted = 0

    # -- queries -----------------------------------------------------------

    def head_of(self, tid: int, dir: Direction = Direction.WRITE) -> Optional[int]:
        return self.ht[dir][tid].head

    def ei_front(self, dir: Direction) -> Optional[int]:
        q = self.ei[dir]
        return q[0] if q else NULL

    def chain(self, tid: int, dir: Direction) -> list[int]:
        out = []
        slot = self.ht[dir][tid].head
        while slot is not NULL:
            out.append(slot)
            slot = self.ld[slot].next
        return out

    def count_for(self, tid: int) -> int:
        return self._per_id[tid]

    def in_use_slots(self) -> list[int]:
        return [i for i, e in enumerate(self.ld) if e.in_use]

    def can_enqueue(self, tid: int) -> bool:
        return self._per_id[tid] < self.txn_per_uniq_id and bool(self.free_list)

    # -- mutation ----------------------------------------------------------

    def enqueue(self, desc: TxnDescriptor, budget: Any = None) -> int:
        tid = desc.id.mapped
        if tid is None:
            raise ValueError("descriptor ID must be remapped before enqueue")
        if self._per_id[tid] >= self.txn_per_uniq_id:
            raise Stall(f"ID slot {tid} holds {self.txn_per_uniq_id} transactions")
        if not self.free_list:
            raise Stall("outstanding transaction table full")
        slot = heapq.heappop(self.free_list)
        e = self.ld[slot]
        e.tid = tid
        e.raw_id = desc.id.raw
        e.dir = desc.dir
        e.addr = desc.addr
        e.state = TxnState.WAIT_ADDR_READY
        e.budgets = budget
        e.budget = 0
        e.elapsed = 0
        e.timeout_flag = False
        e.next = NULL
        e.burst_len = desc.burst_len
        e.issue_cycle = desc.issue_cycle
        e.beats_done = 0
        e.serial = self._serial
        e.in_use = True
        self._serial += 1

        ht = self.ht[desc.dir][tid]
        if ht.tail is NULL:
            ht.head = ht.tail = slot
        else:
            self.ld[ht.tail].next = slot
            ht.tail = slot
        self.ei[desc.dir].append(slot)
        self._per_id[tid] += 1
        self.occupancy += 1
        self.enqueued += 1
        return slot

    def pop_ei(self, dir: Direction, slot: int) -> None:
        """Drop ``slot`` from the issue-order queue (write data finished, or read done)."""
        q = self.ei[dir]
        if q and q[0] == slot:
            q.popleft()
        else:
            q.remove(slot)

    def complete(self, slot: int) -> None:
        e = self.ld[slot]
        if not e.in_use:
            raise OutOfOrderComplete(f"slot {slot} is not in use")
        ht = self.ht[e.dir][e.tid]
        if ht.head != slot:
            raise OutOfOrderComplete(
                f"slot {slot} is not the head of ID {e.tid} ({e.dir.value}); head is {ht.head}"
            )
        if not e.state.terminal:
            raise ValueError(f"slot {slot} completed in non-terminal state {e.state.value}")
        ht.head = e.next
        if ht.head is NULL:
            ht.tail = NULL
        if slot in self.ei[e.dir]:
            self.pop_ei(e.dir, slot)
        self._free(slot)
        self.completed += 1

    def abort_all(self) -> list[int]:
        aborted = []
        for slot, e in enumerate(self.ld):
            if not e.in_use:
                continue
            if not e.state.terminal:
                e.state = TxnState.ABORTED
            aborted.append(slot)
            self._free(slot)
        for table in self.ht.values():
            for h in table:
                h.head = h.tail = NULL
        for q in self.ei.values():
            q.clear()
        self.aborted += len(aborted)
        return aborted

    def _free(self, slot: int) -> None:
        e = self.ld[slot]
        e.in_use = False
        e.next = NULL
        self._per_id[e.tid] -= 1
        self.occupancy -= 1
        heapq.heappush(self.free_list, slot)
        if self.remapper is not None:
            self.remapper.release(e.tid)

    # -- debug -------------------------------------------------------------

    def check_structure(self) -> None:
        """Walk every chain and the free list; raise AssertionError on any inconsistency."""
        seen: dict[int, str] = {}
        for dir, table in self.ht.items():
            for tid, h in enumerate(table):
                assert (h.head is NULL) == (h.tail is NULL), f"HT {dir.value}/{tid} half-empty"
                slot, last = h.head, NULL
                steps = 0
                while slot is not NULL:
                    assert slot not in seen, f"slot {slot} linked twice"
                    assert self.ld[slot].in_use and self.ld[slot].tid == tid
                    seen[slot] = "chain"
                    last, slot = slot, self.ld[slot].next
                    steps += 1
                    assert steps <= self.max_outstanding, "cycle in chain"
                assert last == h.tail, f"HT {dir.value}/{tid} tail mismatch"
        for slot in self.free_list:
            assert slot not in seen, f"slot {slot} both free and linked"
            assert not self.ld[slot].in_use
            seen[slot] = "free"
        assert len(seen) == self.max_outstanding, "orphan LD slot"
        assert self.occupancy + len(self.free_list) == self.max_outstanding
        assert self.enqueued - self.completed - self.aborted == self.occupancy

    def dump(self) -> list[str]:
        lines = []
        for slot, e in enumerate(self.ld):
            if e.in_use:
                nxt = "" if e.next is NULL else str(e.next)
                lines.append(
                    f"{slot},{e.state.value},{e.tid},{e.addr:#x},{e.elapsed},"
                    f"{e.budget},{int(e.timeout_flag)},{nxt}"
                )
            else:
                lines.append(f"{slot},Free,,,,,,")
        return lines
