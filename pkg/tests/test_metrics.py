import math

import pytest
from hypothesis import given, settings, strategies as st

from rdmasim.metrics import (
    FlowRecord,
    Summary,
    aggregate,
    ideal_fct_ns,
    nearest_rank,
    packet_count,
    ratio_table,
    read_summary_csv,
    ser_ns,
    write_flow_csv,
    write_summary_csv,
)


def pipeline_oracle(size, hops, bw, prop, mtu):
    """Literal store-and-forward replay: each packet waits for the link,
    serializes, then propagates.  Independent of the closed form."""
    n = (size + mtu - 1) // mtu
    sizes = [mtu] * (n - 1) + [size - (n - 1) * mtu]
    arrivals = [0] * n
    for _ in range(hops):
        departures = []
        for i, s in enumerate(sizes):
            start = arrivals[i] if not departures else max(arrivals[i], departures[-1])
            departures.append(start + ser_ns(s, bw))
        arrivals = [d + prop for d in departures]
    return arrivals[-1]


class TestIdealFct:
    def test_hand_computed_single_packet(self):
        # 1 KB over one 40 Gbps link with 2 us propagation.
        assert ser_ns(1024, 40 * 10**9) == 205
        assert ideal_fct_ns(1024, 1, 40 * 10**9, 2000, 1024) == 2205

    def test_hand_computed_pipeline(self):
        # 2560 B = 1024 + 1024 + 512 over two hops at 40 Gbps, 1 us each.
        # Head store-and-forwards (2 x 205), middle packet pipelines once,
        # tail serializes at 103, plus both propagation legs.
        assert ideal_fct_ns(2560, 2, 40 * 10**9, 1000, 1024) == 2718

    @pytest.mark.parametrize("size", [1, 32, 1023, 1024, 1025, 5000, 131_072, 999_999])
    @pytest.mark.parametrize("hops", [1, 2, 4, 6])
    def test_matches_pipeline_oracle(self, size, hops):
        for bw in (10 * 10**9, 40 * 10**9, 100 * 10**9):
            for mtu in (1024, 4096):
                assert ideal_fct_ns(size, hops, bw, 2000, mtu) == \
                    pipeline_oracle(size, hops, bw, 2000, mtu)

    @settings(max_examples=200, deadline=None)
    @given(size=st.integers(min_value=1, max_value=3_000_000),
           hops=st.integers(min_value=1, max_value=6),
           prop=st.integers(min_value=100, max_value=10_000))
    def test_matches_pipeline_oracle_random(self, size, hops, prop):
        assert ideal_fct_ns(size, hops, 40 * 10**9, prop, 1024) == \
            pipeline_oracle(size, hops, 40 * 10**9, prop, 1024)

    def test_rejects_degenerate_input(self):
        with pytest.raises(ValueError):
            ideal_fct_ns(0, 1, 10**9, 100, 1024)
        with pytest.raises(ValueError):
            ideal_fct_ns(100, 0, 10**9, 100, 1024)


def test_packet_count():
    assert packet_count(1, 1024) == 1
    assert packet_count(1024, 1024) == 1
    assert packet_count(1025, 1024) == 2


class TestNearestRank:
    def test_textbook_values(self):
        assert nearest_rank(list(range(1, 101)), 99) == 99
        assert nearest_rank(list(range(1, 1001)), 99) == 990
        assert nearest_rank([1, 2, 3, 4], 50) == 2
        assert nearest_rank([7], 99.9) == 7
        assert nearest_rank([1, 2], 100) == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            nearest_rank([], 50)


def make_record(i, size=1024, fct=2205, ideal=2205, group=None):
    return FlowRecord(flow_id=i, src=0, dst=1, size_bytes=size, kind="write",
                      group=group, start_ns=1000, completion_ns=1000 + fct,
                      hops=2, packets=packet_count(size, 1024),
                      retransmissions=0, ideal_ns=ideal)


class TestAggregate:
    def test_empty_marker(self):
        s = aggregate([], mtu=1024)
        assert s.n_flows == 0
        assert s.avg_slowdown is None and s.p99_fct_ns is None
        assert ratio_table(s, s) == {"avg_slowdown": None, "avg_fct_ns": None,
                                     "p99_fct_ns": None}

    def test_basic_stats(self):
        recs = [make_record(i, fct=2205 * (i + 1)) for i in range(4)]
        s = aggregate(recs, mtu=1024)
        assert s.n_flows == 4
        assert s.avg_slowdown == pytest.approx(2.5)
        assert s.avg_fct_ns == pytest.approx(2205 * 2.5)
        assert s.p99_fct_ns == 2205 * 4
        assert s.single_packet_tail[99.0] == 2205 * 4

    def test_single_packet_tail_filters_by_size(self):
        recs = [make_record(0, size=1024, fct=10), make_record(1, size=2048, fct=99)]
        s = aggregate(recs, mtu=1024)
        assert s.single_packet_tail[99.9] == 10

    def test_incomplete_flows_excluded(self):
        rec = make_record(0)
        rec.completion_ns = None
        s = aggregate([rec, make_record(1)], mtu=1024)
        assert s.n_flows == 1

    def test_group_completion_time(self):
        recs = [make_record(i, fct=1000 * (i + 1), group=7) for i in range(3)]
        s = aggregate(recs, mtu=1024)
        assert s.rct_ns == {7: 3000}

    def test_ratio_table(self):
        a = aggregate([make_record(0, fct=4410)], mtu=1024)
        b = aggregate([make_record(0, fct=2205)], mtu=1024)
        assert ratio_table(a, b)["avg_fct_ns"] == pytest.approx(2.0)
        assert ratio_table(a, b)["avg_slowdown"] == pytest.approx(2.0)


class TestCsv:
    def test_flow_csv_roundtrip_and_determinism(self, tmp_path):
        recs = [make_record(i, fct=2205 + i) for i in range(5)]
        recs[2].completion_ns = None
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_flow_csv(p1, recs)
        write_flow_csv(p2, recs)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().strip().splitlines()
        assert lines[0].startswith("flow_id,src,dst,size_bytes")
        assert len(lines) == 6
        assert "undefined" in lines[3]

    def test_summary_csv_roundtrip(self, tmp_path):
        s = aggregate([make_record(i, fct=2205 * (i + 1), group=1)
                       for i in range(3)],
                      mtu=1024, counters={"drops": 0, "pauses": 12})
        path = tmp_path / "summary.csv"
        write_summary_csv(path, s)
        back = read_summary_csv(path)
        assert back["flows"] == 3
        assert back["avg_slowdown"] == pytest.approx(2.0)
        assert back["pauses"] == 12
        assert back["rct_group1_ns"] == s.rct_ns[1]
