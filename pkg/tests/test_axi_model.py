"""Bus types, beat classification and the trace CSV format."""

import io

import pytest
from hypothesis import given, strategies as st

from axi_tmu.axi_model import (
    TRACE_COLUMNS,
    AddrChannel,
    BChannel,
    BeatEvent,
    CycleSample,
    Direction,
    OrphanW,
    RChannel,
    RespCode,
    TxnDescriptor,
    TxnId,
    WChannel,
    classify_beat,
    handshake_fired,
    read_trace,
    trace_to_text,
    write_trace,
)


# ==============================================================================
# Handshakes and beat classification
# ==============================================================================

@pytest.mark.parametrize("valid,ready,fired", [(0, 0, False), (1, 0, False), (0, 1, False), (1, 1, True)])
def test_handshake_truth_table(valid, ready, fired):
    assert handshake_fired(bool(valid), bool(ready)) is fired


def test_aw_fire_only():
    s = CycleSample(5, aw=AddrChannel(True, True, 3, 0x100, 4))
    assert classify_beat(s) == {BeatEvent.AW_FIRE}


def test_valid_without_ready_is_not_an_event():
    s = CycleSample(0, aw=AddrChannel(True, False, 3, 0, 1), w=WChannel(True, False, True))
    assert classify_beat(s, w_open_beats=0) == set()


def test_single_beat_write_is_first_and_last():
    s = CycleSample(0, w=WChannel(True, True, True))
    assert classify_beat(s, w_open_beats=0) == {BeatEvent.W_FIRE, BeatEvent.W_FIRST, BeatEvent.W_LAST}


def test_middle_beat_is_plain_fire():
    s = CycleSample(0, w=WChannel(True, True, False))
    assert classify_beat(s, w_open_beats=3) == {BeatEvent.W_FIRE}


def test_w_beat_without_open_burst_raises_with_other_events():
    s = CycleSample(9, w=WChannel(True, True, False), b=BChannel(True, True, 1))
    with pytest.raises(OrphanW) as info:
        classify_beat(s, w_open_beats=None)
    assert info.value.events == {BeatEvent.B_FIRE}


def test_read_beats():
    s = CycleSample(0, r=RChannel(True, True, 2, True))
    assert classify_beat(s, r_open_beats=0) == {BeatEvent.R_FIRE, BeatEvent.R_FIRST, BeatEvent.R_LAST}
    assert classify_beat(s, r_open_beats=4) == {BeatEvent.R_FIRE, BeatEvent.R_LAST}


def test_descriptor_rejects_empty_burst():
    with pytest.raises(ValueError):
        TxnDescriptor(Direction.WRITE, TxnId(1, 0), 0, 0, 0)


def test_sample_validate_burst_range():
    CycleSample(0, aw=AddrChannel(True, False, 0, 0, 256)).validate()
    with pytest.raises(ValueError):
        CycleSample(0, aw=AddrChannel(True, False, 0, 0, 257)).validate()


# ==============================================================================
# Trace CSV
# ==============================================================================

def test_trace_header_columns():
    text = trace_to_text([])
    assert text.splitlines()[0].split(",") == list(TRACE_COLUMNS)


def test_trace_rejects_missing_column():
    with pytest.raises(ValueError):
        list(read_trace(io.StringIO("cycle,aw_valid\n0,1\n")))


bools = st.booleans()
ids = st.integers(0, 2**16)


@st.composite
def samples(draw, cycle):
    aw_v, ar_v, w_v, b_v, r_v = (draw(bools) for _ in range(5))
    return CycleSample(
        cycle,
        aw=AddrChannel(aw_v, draw(bools), draw(ids) if aw_v else 0,
                       draw(st.integers(0, 2**32)) if aw_v else 0,
                       draw(st.integers(1, 256)) if aw_v else 0),
        w=WChannel(w_v, draw(bools), w_v and draw(bools)),
        b=BChannel(b_v, draw(bools), draw(ids) if b_v else 0,
                   draw(st.sampled_from(RespCode)) if b_v else RespCode.OKAY),
        ar=AddrChannel(ar_v, draw(bools), draw(ids) if ar_v else 0,
                       draw(st.integers(0, 2**32)) if ar_v else 0,
                       draw(st.integers(1, 256)) if ar_v else 0),
        r=RChannel(r_v, draw(bools), draw(ids) if r_v else 0, r_v and draw(bools),
                   draw(st.sampled_from(RespCode)) if r_v else RespCode.OKAY),
    )


@given(st.lists(st.integers(0, 0), max_size=6).flatmap(
    lambda xs: st.tuples(*[samples(i) for i in range(len(xs))])))
def test_trace_round_trip(trace):
    text = trace_to_text(trace)
    back = list(read_trace(io.StringIO(text)))
    assert back == list(trace)
    buf = io.StringIO()
    write_trace(back, buf)
    assert buf.getvalue() == text
