import pytest
from hypothesis import given, settings, strategies as st

from rdmasim import ccontrol


def test_registry_contents():
    assert set(ccontrol.SCHEMES) == {"none", "aimd", "dcqcn", "timely"}
    with pytest.raises(ValueError):
        ccontrol.make("vegas", bdp_cap=10)


def test_rate_stubs_are_stubs():
    for scheme in ("dcqcn", "timely"):
        with pytest.raises(NotImplementedError):
            ccontrol.make(scheme, bdp_cap=10)


def test_none_always_allows():
    cc = ccontrol.make("none", bdp_cap=4)
    assert cc.allow_send(10**6)


class TestAimd:
    def test_additive_increase_one_per_window(self):
        cc = ccontrol.AimdWindow(bdp_cap=100, start_cwnd=10)
        for _ in range(10):
            cc.on_ack(1)
        assert cc.cwnd == 11.0

    def test_halving_floors_at_one(self):
        cc = ccontrol.AimdWindow(bdp_cap=100, start_cwnd=3)
        cc.on_loss()
        assert cc.cwnd == 1.5
        cc.on_loss()
        cc.on_loss()
        assert cc.cwnd == 1.0

    def test_gate_respects_min_of_cwnd_and_cap(self):
        cc = ccontrol.AimdWindow(bdp_cap=8, start_cwnd=100)
        assert cc.allow_send(7)
        assert not cc.allow_send(8)
        cc.cwnd = 2.0
        assert cc.allow_send(1)
        assert not cc.allow_send(2)

    def test_starts_at_cap_by_default(self):
        cc = ccontrol.AimdWindow(bdp_cap=42)
        assert cc.cwnd == 42.0

    def test_slow_start_doubles_until_loss(self):
        cc = ccontrol.AimdWindow(bdp_cap=64, slow_start=True)
        assert cc.cwnd == 1.0
        cc.on_ack(1)
        assert cc.cwnd == 2.0
        cc.on_ack(2)
        assert cc.cwnd == 4.0
        cc.on_loss()
        assert cc.cwnd == 2.0
        cc.on_ack(1)
        assert cc.cwnd == 2.0  # additive credit only, below one full window

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(["ack", "loss"]), max_size=200))
    def test_window_stays_in_bounds(self, events):
        cc = ccontrol.AimdWindow(bdp_cap=32)
        for ev in events:
            if ev == "ack":
                cc.on_ack(1)
            else:
                cc.on_loss()
            assert cc.cwnd >= 1.0
            assert cc.window() <= 32
