import pytest

from axi_tmu.axi_model import AddrChannel, BChannel, CycleSample, RChannel, RespCode, WChannel
from axi_tmu.config import RegisterFile
from axi_tmu.guard import BudgetConfig, Variant
from axi_tmu.monitor import Tmu


def sample(cycle, aw=None, w=None, b=None, ar=None, r=None):
    """Build a CycleSample from short tuples: aw/ar=(valid, ready, id, len),
    w=(valid, ready, last), b=(valid, ready, id[, resp]), r=(valid, ready, id, last[, resp])."""
    s = CycleSample(cycle)
    if aw:
        s.aw = AddrChannel(bool(aw[0]), bool(aw[1]), aw[2], 0x1000, aw[3])
    if ar:
        s.ar = AddrChannel(bool(ar[0]), bool(ar[1]), ar[2], 0x2000, ar[3])
    if w:
        s.w = WChannel(bool(w[0]), bool(w[1]), bool(w[2]))
    if b:
        s.b = BChannel(bool(b[0]), bool(b[1]), b[2], b[3] if len(b) > 3 else RespCode.OKAY)
    if r:
        s.r = RChannel(bool(r[0]), bool(r[1]), r[2], bool(r[3]), r[4] if len(r) > 4 else RespCode.OKAY)
    return s


def make_tmu(variant=Variant.FULL, prescaler=1, ids=4, per_id=4, capacity=None, reset_latency=16, **budgets):
    regs = RegisterFile(variant=variant, budgets=BudgetConfig(**budgets), prescaler_step=prescaler)
    tmu = Tmu(regs, ids, per_id, capacity, reset_latency)
    tmu.debug = True
    return tmu


@pytest.fixture
def fc_tmu():
    return make_tmu(Variant.FULL, p1=4, p3=4, p5=4, p6=4, r1=4, r3=4, r5=4, queue_wait_base=8)


@pytest.fixture
def tc_tmu():
    return make_tmu(Variant.TINY, queue_wait_base=8)
