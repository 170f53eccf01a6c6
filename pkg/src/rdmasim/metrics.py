"""Flow records, completion-time math, aggregation, and CSV output.

The slowdown baseline is the flow's completion time on an idle network
at line rate: the first packet store-and-forwards across every hop,
and the remaining packets pipeline behind it on the final link.  All
times are integer nanoseconds rounded up per serialization, matching
the simulator's own arithmetic, so a simulated flow can never beat its
ideal and slowdown is always at least one.

CSV schemas (stable, consumed by external tooling):

flows.csv      flow_id,src,dst,size_bytes,kind,group,start_ns,
               completion_ns,fct_ns,ideal_fct_ns,slowdown,path_hops,
               packets,retransmissions
summary.csv    metric,value   (long format, one row per scalar)
tail.csv       percentile,fct_ns   (single-packet flow tail)
ratio.csv      metric,numerator,denominator,ratio
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


def ser_ns(size_bytes: int, bandwidth_bps: int) -> int:
    return (size_bytes * 8_000_000_000 + bandwidth_bps - 1) // bandwidth_bps


def packet_count(size_bytes: int, mtu: int) -> int:
    return (size_bytes + mtu - 1) // mtu


def ideal_fct_ns(size_bytes: int, hops: int, bandwidth_bps: int,
                 prop_ns: int, mtu: int) -> int:
    """Completion time of size_bytes over hops store-and-forward links
    of equal rate, empty network, no protocol overhead.

    One full-size packet serializes per hop for the pipeline head; the
    tail packet serializes once per hop too but all intermediate
    packets only add serialization on a single link.
    """
    if size_bytes <= 0:
        raise ValueError("flow size must be positive")
    if hops < 1:
        raise ValueError("need at least one hop")
    n = packet_count(size_bytes, mtu)
    full = ser_ns(mtu, bandwidth_bps)
    last = ser_ns(size_bytes - (n - 1) * mtu, bandwidth_bps)
    if n == 1:
        return hops * (prop_ns + last)
    return hops * prop_ns + (hops + n - 2) * full + last


@dataclass
class FlowRecord:
    """Everything measured about one finished (or abandoned) flow."""

    flow_id: int
    src: int
    dst: int
    size_bytes: int
    kind: str
    group: int | str | None
    start_ns: int
    completion_ns: int | None
    hops: int
    packets: int
    retransmissions: int
    ideal_ns: int

    @property
    def fct_ns(self) -> int | None:
        if self.completion_ns is None:
            return None
        return self.completion_ns - self.start_ns

    @property
    def slowdown(self) -> float | None:
        fct = self.fct_ns
        if fct is None:
            return None
        return fct / self.ideal_ns


def nearest_rank(sorted_values, pct: float):
    """Nearest-rank percentile on an ascending list."""
    if not sorted_values:
        raise ValueError("empty sample")
    rank = math.ceil(pct / 100.0 * len(sorted_values))
    return sorted_values[max(0, rank - 1)]


TAIL_PERCENTILES = (90.0, 95.0, 99.0, 99.5, 99.9)


@dataclass
class Summary:
    n_flows: int
    avg_slowdown: float | None = None
    avg_fct_ns: float | None = None
    p99_fct_ns: int | None = None
    single_packet_tail: dict | None = None  # percentile -> fct_ns
    rct_ns: dict | None = None              # group -> completion of last flow
    counters: dict | None = None

    def metric(self, name: str):
        if name in ("avg_slowdown", "avg_fct_ns", "p99_fct_ns"):
            return getattr(self, name)
        raise KeyError(name)


COMPARED_METRICS = ("avg_slowdown", "avg_fct_ns", "p99_fct_ns")


def aggregate(records, mtu: int, counters=None,
              tail_percentiles=TAIL_PERCENTILES) -> Summary:
    """Collapse completed-flow records into a Summary.

    An empty record set yields the explicit empty marker (n_flows 0,
    every metric None) rather than raising, so sweeps with a filtered
    slice stay representable.
    """
    done = [r for r in records if r.completion_ns is not None]
    if not done:
        return Summary(n_flows=0, counters=dict(counters or {}))
    fcts = sorted(r.fct_ns for r in done)
    slowdowns = [r.fct_ns / r.ideal_ns for r in done]
    single = sorted(r.fct_ns for r in done if r.size_bytes <= mtu)
    tail = None
    if single:
        tail = {p: nearest_rank(single, p) for p in tail_percentiles}
    groups: dict = {}
    for r in done:
        if r.group is None:
            continue
        cur = groups.get(r.group)
        if cur is None:
            groups[r.group] = [r.start_ns, r.completion_ns]
        else:
            if r.start_ns < cur[0]:
                cur[0] = r.start_ns
            if r.completion_ns > cur[1]:
                cur[1] = r.completion_ns
    rct = {g: c - s for g, (s, c) in groups.items()} or None
    return Summary(
        n_flows=len(done),
        avg_slowdown=sum(slowdowns) / len(slowdowns),
        avg_fct_ns=sum(fcts) / len(fcts),
        p99_fct_ns=nearest_rank(fcts, 99.0),
        single_packet_tail=tail,
        rct_ns=rct,
        counters=dict(counters or {}),
    )


def ratio_table(numerator: Summary, denominator: Summary) -> dict:
    """Per-metric ratios; None where either side is undefined."""
    out = {}
    for name in COMPARED_METRICS:
        a = numerator.metric(name)
        b = denominator.metric(name)
        out[name] = None if a is None or b is None or b == 0 else a / b
    return out


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_flow_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flow_id", "src", "dst", "size_bytes", "kind", "group",
                    "start_ns", "completion_ns", "fct_ns", "ideal_fct_ns",
                    "slowdown", "path_hops", "packets", "retransmissions"])
        for r in records:
            w.writerow([
                r.flow_id, r.src, r.dst, r.size_bytes, r.kind,
                "" if r.group is None else r.group,
                r.start_ns, _fmt(r.completion_ns), _fmt(r.fct_ns),
                r.ideal_ns, _fmt(r.slowdown), r.hops, r.packets,
                r.retransmissions,
            ])


def summary_rows(summary: Summary):
    rows = [("flows", summary.n_flows)]
    for name in COMPARED_METRICS:
        rows.append((name, summary.metric(name)))
    if summary.single_packet_tail:
        for p in sorted(summary.single_packet_tail):
            rows.append((f"single_packet_p{_fmt(p)}_fct_ns",
                         summary.single_packet_tail[p]))
    if summary.rct_ns:
        for g in sorted(summary.rct_ns):
            rows.append((f"rct_group{g}_ns", summary.rct_ns[g]))
    for key in sorted(summary.counters or {}):
        rows.append((key, summary.counters[key]))
    return rows


def write_summary_csv(path, summary: Summary) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for name, value in summary_rows(summary):
            w.writerow([name, _fmt(value)])


def read_summary_csv(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            raw = row["value"]
            if raw == "undefined":
                out[row["metric"]] = None
            else:
                out[row["metric"]] = float(raw) if "." in raw or "e" in raw else int(raw)
    return out


def write_ratio_csv(path, label_a, label_b, summary_a, summary_b) -> None:
    ratios = ratio_table(summary_a, summary_b)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", label_a, label_b, "ratio"])
        for name in COMPARED_METRICS:
            w.writerow([name, _fmt(summary_a.metric(name)),
                        _fmt(summary_b.metric(name)), _fmt(ratios[name])])


def write_tail_csv(path, summary: Summary) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["percentile", "fct_ns"])
        for p in sorted(summary.single_packet_tail or {}):
            w.writerow([_fmt(p), summary.single_packet_tail[p]])
