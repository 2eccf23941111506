"""End-to-end runs of the manager/TMU/subordinate loop."""

import copy
import io

import pytest

from axi_tmu.axi_model import read_trace, trace_to_text
from axi_tmu.guard import Variant
from axi_tmu.harness import (
    ConfigRejected,
    SimConfig,
    config_from_text,
    config_to_text,
    configure_point,
    generate_traffic,
    lint,
    preset,
    run,
    sweep,
)
from axi_tmu.injector import FaultKind, FaultSpec, Trigger, random_campaign


def small(seed=0, variant=Variant.FULL, n=12):
    cfg = preset("default")
    cfg.seed, cfg.variant = seed, variant
    cfg.traffic.n_txns = n
    cfg.traffic.burst_max = 8
    return cfg


# ==============================================================================
# Configuration
# ==============================================================================

def test_validate_rejects():
    for mutate in (
        lambda c: setattr(c, "max_uniq_ids", 65),
        lambda c: setattr(c, "prescaler_step", 3),
        lambda c: setattr(c, "max_outstanding", 17),
        lambda c: setattr(c.traffic, "burst_max", 257),
        lambda c: setattr(c.budgets, "max_budget", 10),
        lambda c: setattr(c, "faults", [FaultSpec(FaultKind.AW_READY_WITHHELD, 99)]),
    ):
        cfg = SimConfig()
        mutate(cfg)
        with pytest.raises(ConfigRejected):
            cfg.validate()


def test_kv_round_trip():
    cfg = preset("ethernet250")
    cfg.faults = [FaultSpec.parse("MidBurstStall,0,beat:125,0"), FaultSpec.parse("BValidWithheld,0,start,1")]
    back = config_from_text(config_to_text(cfg))
    assert back == cfg and back.digest() == cfg.digest()


def test_capacity_key_sets_per_id_depth():
    cfg = config_from_text("capacity=32\nmax_uniq_ids=4\n")
    cfg = config_from_text("capacity=32\n", cfg)
    assert cfg.max_outstanding == 32 and cfg.txn_per_uniq_id == 8


def test_unknown_key_rejected():
    with pytest.raises(ConfigRejected):
        config_from_text("bogus=1\n")


def test_traffic_is_seeded():
    a = generate_traffic(SimConfig().traffic, 4)
    assert a == generate_traffic(SimConfig().traffic, 4)
    assert a != generate_traffic(SimConfig().traffic, 5)


# ==============================================================================
# Runs
# ==============================================================================

@pytest.mark.parametrize("variant", list(Variant))
def test_clean_run_completes_everything(variant):
    cfg = small(1, variant, n=32)
    res = run(cfg)
    assert res.valid and res.verdicts == [] and res.events == []
    assert list(res.outcomes.values()) == ["Done"] * 32
    assert res.report.n_done == 32
    assert res.report.data_beats == sum(p.burst_len for p in generate_traffic(cfg.traffic, 1)[0])


def test_run_unpacks_to_trace_events_report():
    trace, events, report = run(small())
    assert trace[0].cycle == 0 and events == [] and report.n_txns == 12


def test_run_is_deterministic():
    cfg = small(3)
    cfg.faults = [FaultSpec(FaultKind.R_VALID_WITHHELD, -1, Trigger("random"), 4)]
    a, b = run(cfg), run(copy.deepcopy(cfg))
    assert trace_to_text(a.trace) == trace_to_text(b.trace)
    assert a.events == b.events and a.report.to_json() == b.report.to_json()


@pytest.mark.parametrize("kind", list(FaultKind))
def test_each_fault_kind_isolates_once(kind):
    cfg = small(2)
    plans = generate_traffic(cfg.traffic, cfg.seed)[0]
    target = next(p.ordinal for p in plans if p.dir is kind.dir)
    cfg.faults = [FaultSpec(kind, target)]
    res = run(cfg)
    isolations = [e for e in res.events if e["action"] == "isolate"]
    assert len(isolations) == 1
    det = res.report.detection_latencies[0]
    assert det["detected"] and det["detect_cycle"] >= det["trigger_cycle"]
    assert res.outcomes[target] == "Aborted"
    assert "NonTermination" not in [e["kind"] for e in res.events]


def test_unreachable_target_marks_run_invalid():
    cfg = small(2)
    plans = generate_traffic(cfg.traffic, cfg.seed)[0]
    write = next(p.ordinal for p in plans if p.dir.value == "write")
    cfg.faults = [FaultSpec(FaultKind.AR_READY_WITHHELD, write)]
    res = run(cfg)
    assert not res.valid
    assert res.report.detection_latencies[0]["reason"] == "TargetNotReached"


def test_non_termination_is_reported():
    cfg = small(2)
    cfg.enable = False
    plans = generate_traffic(cfg.traffic, cfg.seed)[0]
    write = next(p.ordinal for p in plans if p.dir.value == "write")
    cfg.faults = [FaultSpec(FaultKind.AW_READY_WITHHELD, write)]
    cfg.max_cycles = 300
    res = run(cfg)
    assert res.events[0]["kind"] == "NonTermination"
    assert res.report.detection_latencies[0]["reason"] == "Undetected"


def test_lint_replays_live_verdicts():
    cfg = small(5)
    plans = generate_traffic(cfg.traffic, cfg.seed)[0]
    cfg.faults = random_campaign(plans, 5, 1)
    res = run(cfg)
    replay = lint(read_trace(io.StringIO(trace_to_text(res.trace))), cfg)
    assert replay == res.verdicts and replay


def test_lint_clean_trace_is_silent():
    res = run(small(6))
    assert lint(res.trace, small(6)) == []


def test_w_beats_during_isolation_are_dropped():
    cfg = small(7)
    plans = generate_traffic(cfg.traffic, cfg.seed)[0]
    target = next(p.ordinal for p in plans if p.dir.value == "write" and p.burst_len > 3)
    cfg.faults = [FaultSpec(FaultKind.W_READY_WITHHELD, target, Trigger("beat", 1))]
    res = run(cfg)
    assert res.report.n_detected == 1 and res.valid


# ==============================================================================
# Sweeps
# ==============================================================================

def test_empty_grid_is_single_base_run():
    out = sweep(small(), {})
    assert len(out) == 1 and out[0].params == {} and out[0].report.n_done == 12


def test_capacity_and_variant_grid():
    out = sweep(small(), {"capacity": [16, 32], "variant": ["tc", "fc"]})
    assert [(r.params["capacity"], r.params["variant"]) for r in out] == [
        (16, "tc"), (16, "fc"), (32, "tc"), (32, "fc")]
    assert all(r.error is None for r in out)


def test_parallel_matches_sequential():
    base = small(8)
    base.faults = [FaultSpec(FaultKind.B_VALID_WITHHELD, -1, Trigger("start"), 1)]
    axes = {"prescaler_step": [1, 8, 64], "variant": ["fc", "tc"]}
    seq = sweep(base, axes)
    par = sweep(base, axes, parallel=True, workers=2)
    assert [r.report.to_dict() for r in seq] == [r.report.to_dict() for r in par]


def test_sweep_collects_errors():
    out = sweep(small(), {"capacity": [0]})
    assert out[0].report is None and "ConfigRejected" in out[0].error


def test_bad_axis():
    with pytest.raises(ConfigRejected):
        sweep(small(), {"seed": [1]})


def test_detection_latency_non_decreasing_in_prescaler():
    base = preset("ethernet250")
    base.faults = [FaultSpec.parse("MidBurstStall,0,beat:125,0")]
    out = sweep(base, {"prescaler_step": [1, 2, 4, 8, 16, 32, 64, 128]})
    lat = [r.report.detection_latencies[0]["latency_from_issue"] for r in out]
    assert lat == sorted(lat)
    assert lat[0] == 253


def test_fault_position_axis():
    base = preset("ethernet250")
    base.faults = [FaultSpec.parse("MidBurstStall,0,start,0")]
    cfg = configure_point(base, {"fault_position": "beat:249"})
    assert cfg.faults[0].trigger == Trigger("beat", 249)
