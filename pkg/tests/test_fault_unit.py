"""Recovery state machine and the reset unit."""

import pytest

from axi_tmu.axi_model import Direction, RespCode, TxnDescriptor, TxnId
from axi_tmu.fault_unit import FaultUnit, IsolationState, ResetUnit
from axi_tmu.guard import Verdict
from axi_tmu.ott import OutstandingTable

from conftest import sample


def unit(latency=3, n=2):
    ott = OutstandingTable(2, 2)
    for i in range(n):
        ott.enqueue(TxnDescriptor(Direction.WRITE, TxnId(40 + i, i), 0, 1, 0))
    return FaultUnit(ott, latency), ott


def test_reset_unit_latency():
    r = ResetUnit(5)
    assert r.request(10) == 15
    assert not r.poll(14) and r.poll(15) and not r.poll(16)
    with pytest.raises(ValueError):
        ResetUnit(0)


def test_on_verdict_aborts_and_queues_slverr():
    fu, ott = unit()
    out = fu.on_verdict([Verdict("timeout", 7, slot=0)], 7)
    assert out.irq and out.reset_req and out.sever_request_path
    assert [(r.id, r.resp) for r in out.synthetic_responses] == [(40, RespCode.SLVERR), (41, RespCode.SLVERR)]
    assert ott.occupancy == 0 and fu.state is IsolationState.ISOLATED
    assert fu.events[0]["action"] == "isolate" and fu.events[0]["aborted"] == 2


def test_second_verdict_while_isolated_is_ignored():
    fu, _ = unit()
    fu.on_verdict([Verdict("timeout", 7, slot=0)], 7)
    assert fu.on_verdict([Verdict("timeout", 8, slot=1)], 8).synthetic_responses == []
    assert fu.isolations == 1


def test_irq_can_be_masked():
    fu, _ = unit()
    fu.irq_enable = False
    assert not fu.on_verdict([Verdict("timeout", 1, slot=0)], 1).irq
    assert fu.irq_pulses == 0


def test_reset_done_outside_resetting_is_ignored():
    fu, _ = unit()
    fu.on_reset_done(0)
    assert fu.state is IsolationState.MONITORING


def test_resume_waits_for_responses():
    fu, _ = unit(latency=1)
    fu.on_verdict([Verdict("timeout", 0, slot=0)], 0)
    fu.step(sample(1))  # responses not accepted yet, reset done at 1
    assert fu.state is IsolationState.RESETTING and fu.reset_done
    fu.step(sample(2, b=(1, 1, 40, RespCode.SLVERR)))
    assert fu.state is IsolationState.RESETTING
    fu.step(sample(3, b=(1, 1, 41, RespCode.SLVERR)))
    assert fu.state is IsolationState.RESUMING
    fu.step(sample(4))
    assert fu.state is IsolationState.MONITORING and fu.last_resume_cycle == 4
