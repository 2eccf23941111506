"""Fault specs, campaign files and injector hooks."""

import pytest

from axi_tmu.axi_model import Direction
from axi_tmu.harness import TrafficSpec, generate_traffic
from axi_tmu.injector import (
    FaultKind,
    FaultSpec,
    Injector,
    Trigger,
    parse_campaign,
    random_campaign,
    resolve,
)


@pytest.fixture
def plans():
    return generate_traffic(TrafficSpec(n_txns=12, burst_min=1, burst_max=8), seed=3)[0]


def test_parse_round_trip():
    for line in ["MidBurstStall,0,beat:125,7", "AwReadyWithheld,3,start,0", "RIdError,1,cycle:40,2"]:
        assert FaultSpec.parse(line).to_line() == line


def test_parse_defaults_and_errors():
    f = FaultSpec.parse("bvalidwithheld, 2")
    assert f.kind is FaultKind.B_VALID_WITHHELD and f.trigger == Trigger("start") and f.seed == 0
    with pytest.raises(ValueError):
        FaultSpec.parse("Nope,1")
    with pytest.raises(ValueError):
        Trigger.parse("beat")


def test_campaign_file():
    text = "# campaign\nAwReadyWithheld,0,start,1\n\nRValidWithheld,2,beat:1,3  # c\n"
    specs = parse_campaign(text)
    assert [s.kind for s in specs] == [FaultKind.AW_READY_WITHHELD, FaultKind.R_VALID_WITHHELD]


def test_fault_kind_directions():
    assert FaultKind.R_ID_ERROR.dir is Direction.READ
    assert FaultKind.MID_BURST_STALL.dir is Direction.WRITE and FaultKind.MID_BURST_STALL.per_beat


def test_resolve_random_target_is_seeded(plans):
    spec = FaultSpec(FaultKind.R_VALID_WITHHELD, -1, Trigger("random"), seed=11)
    a, b = resolve(spec, plans), resolve(spec, plans)
    assert a == b and a.target_txn >= 0
    assert plans[a.target_txn].dir is Direction.READ
    assert a.trigger.kind == "beat" and a.trigger.value < plans[a.target_txn].burst_len


def test_random_campaign_deterministic(plans):
    assert random_campaign(plans, 5, 3) == random_campaign(plans, 5, 3)
    targets = [f.target_txn for f in random_campaign(plans, 5, 3)]
    assert len(set(targets)) == 3


def test_hook_only_fires_for_target_and_records_trigger():
    inj = Injector([FaultSpec(FaultKind.AW_READY_WITHHELD, 2)])
    inj.now = 4
    assert not inj.aw_ready_blocked(1)
    assert inj.triggered == [None]
    inj.now = 6
    assert inj.aw_ready_blocked(2)
    inj.now = 9
    assert inj.aw_ready_blocked(2)
    assert inj.triggered == [6]


def test_beat_trigger():
    inj = Injector([FaultSpec(FaultKind.W_READY_WITHHELD, 0, Trigger("beat", 3))])
    assert not inj.w_ready_blocked(0, 2)
    assert inj.w_ready_blocked(0, 3)


def test_mid_burst_default_is_half_way():
    class P:
        ordinal, dir, burst_len = 0, Direction.WRITE, 10
    inj = Injector([FaultSpec(FaultKind.MID_BURST_STALL, 0)], [P()])
    assert not inj.w_ready_blocked(0, 4)
    assert inj.w_ready_blocked(0, 5)


def test_cycle_trigger():
    inj = Injector([FaultSpec(FaultKind.B_VALID_WITHHELD, 0, Trigger("cycle", 10))])
    inj.now = 9
    assert not inj.b_valid_blocked(0)
    inj.now = 10
    assert inj.b_valid_blocked(0)


def test_id_corruption_and_cancel():
    inj = Injector([FaultSpec(FaultKind.B_HANDSHAKE_OR_ID_ERROR, 1)], corrupt_id=77)
    assert inj.b_id(0, 5) == 5
    assert inj.b_id(1, 5) == 77
    inj.cancel_target(1)
    assert inj.b_id(1, 5) == 5


def test_unreached():
    inj = Injector([FaultSpec(FaultKind.AR_READY_WITHHELD, 0)])
    assert inj.unreached() == [0]
