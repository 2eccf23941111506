"""Compaction of wide manager-side transaction IDs into a dense slot space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class Stall(Exception):
    """No resource is free; the request channel must be back-pressured."""


class UnderflowRelease(RuntimeError):
    """A slot was released more often than it was mapped (simulator bug)."""


@dataclass(slots=True)
class RemapEntry:
    raw_id: int = 0
    active_count: int = 0


class RemapTable:
    """Maps raw IDs onto ``max_uniq_ids`` slots, lowest free slot first.

    A raw ID keeps its slot for as long as any of its transactions is in
    flight. When every slot is held by another raw ID, ``map`` raises
    ``Stall``.
    """

    def __init__(self, max_uniq_ids: int):
        if max_uniq_ids < 1:
            raise ValueError("max_uniq_ids must be >= 1")
        self.max_uniq_ids = max_uniq_ids
        self.entries = [RemapEntry() for _ in range(max_uniq_ids)]
        self._by_raw: dict[int, int] = {}

    def lookup(self, raw_id: int) -> Optional[int]:
        return self._by_raw.get(raw_id)

    def can_map(self, raw_id: int) -> bool:
        return raw_id in self._by_raw or len(self._by_raw) < self.max_uniq_ids

    def map(self, raw_id: int) -> int:
        slot = self._by_raw.get(raw_id)
        if slot is None:
            for i, e in enumerate(self.entries):
                if e.active_count == 0:
                    slot = i
                    break
            else:
                raise Stall(f"all {self.max_uniq_ids} ID slots busy")
            self.entries[slot].raw_id = raw_id
            self._by_raw[raw_id] = slot
        self.entries[slot].active_count += 1
        return slot

    def release(self, mapped_id: int) -> None:
        e = self.entries[mapped_id]
        if e.active_count == 0:
            raise UnderflowRelease(f"release of inactive ID slot {mapped_id}")
        e.active_count -= 1
        if e.active_count == 0:
            del self._by_raw[e.raw_id]

    def active(self) -> dict[int, int]:
        """Active raw IDs and their slots."""
        return dict(self._by_raw)

    def is_empty(self) -> bool:
        return not self._by_raw

    def reset(self) -> None:
        for e in self.entries:
            e.active_count = 0
        self._by_raw.clear()
