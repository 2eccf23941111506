"""Reference models used as test oracles."""

import math
import random
from collections import deque

import pytest

from axi_tmu.axi_model import Direction, TxnDescriptor, TxnId
from axi_tmu.id_remapper import Stall
from axi_tmu.ott import OutOfOrderComplete, OutstandingTable, TxnState


def desc(tid, dir=Direction.WRITE, raw=None, cycle=0, burst=4):
    return TxnDescriptor(dir, TxnId(tid if raw is None else raw, tid), 0x1000 * tid, burst, cycle)


def finish(ott, slot):
    ott.ld[slot].state = TxnState.DONE
    ott.complete(slot)


def prescaled_detect(start, budget, p):
    """First prescaler tick at or after start + budget."""
    return math.ceil((start + budget) / p) * p


def counter_width(budget, p):
    ticks = -(-budget // p)
    n = 0
    while (1 << n) - 1 < ticks:
        n += 1
    return n


class RefTable:
    def __init__(self, n_ids, per_id, total):
        self.q = {(d, i): deque() for d in Direction for i in range(n_ids)}
        self.per_id, self.total = per_id, total
        self.serial = 0

    @property
    def occupancy(self):
        return sum(len(q) for q in self.q.values())

    def enqueue(self, dir, tid):
        if sum(len(self.q[(d, tid)]) for d in Direction) >= self.per_id:
            return "stall"
        if self.occupancy >= self.total:
            return "stall"
        self.q[(dir, tid)].append(self.serial)
        self.serial += 1
        return "ok"

    def heads(self):
        return {k: list(v) for k, v in self.q.items()}


def observe(ott):
    out = {}
    for d in Direction:
        for tid in range(len(ott.ht[d])):
            out[(d, tid)] = [ott.ld[s].serial for s in ott.chain(tid, d)]
    return out


def run_oracle_sequence(rng: random.Random, n_ops: int = 60) -> None:
    n_ids = rng.randint(1, 4)
    per_id = rng.randint(1, 4)
    total = rng.randint(1, min(8, n_ids * per_id))
    ott = OutstandingTable(n_ids, per_id, total)
    ref = RefTable(n_ids, per_id, total)
    for _ in range(n_ops):
        op = rng.random()
        if op < 0.55:
            d, tid = rng.choice(list(Direction)), rng.randrange(n_ids)
            want = ref.enqueue(d, tid)
            try:
                ott.enqueue(desc(tid, d))
                got = "ok"
            except Stall:
                got = "stall"
            assert got == want
        elif op < 0.95:
            live = [k for k, q in ref.q.items() if q]
            if not live:
                continue
            d, tid = rng.choice(live)
            chain = ott.chain(tid, d)
            if len(chain) > 1 and rng.random() < 0.3:
                ott.ld[chain[1]].state = TxnState.DONE
                with pytest.raises(OutOfOrderComplete):
                    ott.complete(chain[1])
                ott.ld[chain[1]].state = TxnState.BURST
            finish(ott, chain[0])
            ref.q[(d, tid)].popleft()
        else:
            ott.abort_all()
            for q in ref.q.values():
                q.clear()
        assert ott.occupancy == ref.occupancy
        assert observe(ott) == ref.heads()
        ott.check_structure()
