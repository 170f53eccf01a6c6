"""Traffic generation: flow size distributions, Poisson arrivals, incast.

The default size mix is heavy-tailed: half of all flows fit in one
packet (32 bytes to 1 KB), a sliver of large transfers (200 KB to
3 MB) carries most of the bytes, and the middle band fills the
remainder.  Each band samples log-uniformly inside its range.  Flow
arrivals are open-loop Poisson per host, scaled so the offered load
hits a target fraction of edge-link capacity, with destinations chosen
uniformly among the other hosts.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .simcore import stream

OP_KINDS = ("write", "send", "read")


@dataclass(frozen=True)
class SizeBand:
    mass: float           # probability of this band
    lo: int               # bytes, inclusive
    hi: int               # bytes, inclusive
    law: str = "log_uniform"

    def sample(self, u: float) -> int:
        if self.lo == self.hi:
            return self.lo
        if self.law == "uniform":
            x = self.lo + u * (self.hi - self.lo)
        elif self.law == "log_uniform":
            x = math.exp(math.log(self.lo) + u * (math.log(self.hi) - math.log(self.lo)))
        else:
            raise ValueError(f"unknown law {self.law!r}")
        return min(self.hi, max(self.lo, round(x)))

    def cdf(self, x: float) -> float:
        """Within-band CDF of the continuous law, clamped to [0, 1]."""
        if x < self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        if self.lo == self.hi:
            return 1.0
        if self.law == "uniform":
            return (x - self.lo) / (self.hi - self.lo)
        return (math.log(x) - math.log(self.lo)) / (math.log(self.hi) - math.log(self.lo))

    def mean(self) -> float:
        if self.lo == self.hi:
            return float(self.lo)
        if self.law == "uniform":
            return (self.lo + self.hi) / 2.0
        return (self.hi - self.lo) / (math.log(self.hi) - math.log(self.lo))


class SizeDistribution:
    """Mixture of byte-size bands; masses must sum to one and ranges
    must not overlap (touching endpoints are fine)."""

    def __init__(self, bands):
        bands = sorted(bands, key=lambda b: b.lo)
        if not bands:
            raise ValueError("need at least one band")
        total = sum(b.mass for b in bands)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"band masses sum to {total}, not 1")
        for b in bands:
            if b.lo < 1 or b.hi < b.lo:
                raise ValueError(f"bad band range [{b.lo}, {b.hi}]")
            if b.mass < 0:
                raise ValueError("negative band mass")
        for a, b in zip(bands, bands[1:]):
            if b.lo < a.hi:
                raise ValueError(f"bands [{a.lo},{a.hi}] and [{b.lo},{b.hi}] overlap")
        self.bands = tuple(bands)
        self._cum = []
        acc = 0.0
        for b in bands:
            acc += b.mass
            self._cum.append(acc)

    def sample(self, rng) -> int:
        u = rng.random()
        for b, edge in zip(self.bands, self._cum):
            if u <= edge or b is self.bands[-1]:
                lo_edge = edge - b.mass
                inner = (u - lo_edge) / b.mass if b.mass else rng.random()
                return b.sample(min(1.0, max(0.0, inner)))
        raise AssertionError("unreachable")

    def cdf(self, x: float) -> float:
        acc = 0.0
        for b in self.bands:
            acc += b.mass * b.cdf(x)
        return acc

    def mean(self) -> float:
        return sum(b.mass * b.mean() for b in self.bands)

    def describe(self):
        return [(b.mass, b.lo, b.hi, b.law) for b in self.bands]


def heavy_tailed_default() -> SizeDistribution:
    return SizeDistribution([
        SizeBand(0.50, 32, 1024),
        SizeBand(0.35, 1024, 200_000),
        SizeBand(0.15, 200_000, 3_000_000),
    ])


def uniform_large() -> SizeDistribution:
    """All-large alternative mix for stress comparisons."""
    return SizeDistribution([SizeBand(1.0, 500_000, 5_000_000, law="uniform")])


DISTRIBUTIONS = {
    "heavy_tailed": heavy_tailed_default,
    "uniform_large": uniform_large,
}


@dataclass
class FlowSpec:
    flow_id: int
    src: int
    dst: int
    size_bytes: int
    start_ns: int
    kind: str = "write"
    group: int | None = None  # coordinated-burst group, None for background


def generate_flows(dist: SizeDistribution, load: float, n_hosts: int,
                   bandwidth_bps: int, seed: int, count: int,
                   kind_mix=None, start_ns: int = 0) -> list[FlowSpec]:
    """Open-loop Poisson traffic from every host at the target load.

    load is the fraction of each host's edge-link capacity offered on
    average.  Every host draws from its own named stream, so the trace
    for host i is invariant to the other hosts' draws.
    """
    if not 0.0 < load < 1.5:
        raise ValueError(f"implausible load {load}")
    if n_hosts < 2:
        raise ValueError("need at least two hosts")
    mean_bits = dist.mean() * 8.0
    rate_per_ns = load * bandwidth_bps / mean_bits / 1e9  # flows per ns per host
    rngs = [stream(seed, f"workload/{h}") for h in range(n_hosts)]
    heap = []
    for h, rng in enumerate(rngs):
        t = start_ns + rng.expovariate(rate_per_ns)
        heapq.heappush(heap, (t, h))
    flows = []
    while len(flows) < count:
        t, h = heapq.heappop(heap)
        rng = rngs[h]
        dst = rng.randrange(n_hosts - 1)
        if dst >= h:
            dst += 1
        size = dist.sample(rng)
        kind = _pick_kind(rng, kind_mix)
        flows.append(FlowSpec(len(flows), h, dst, size, round(t), kind))
        heapq.heappush(heap, (t + rng.expovariate(rate_per_ns), h))
    return flows


def _pick_kind(rng, kind_mix) -> str:
    if not kind_mix:
        return "write"
    u = rng.random()
    acc = 0.0
    for kind, frac in kind_mix:
        acc += frac
        if u <= acc:
            return kind
    return kind_mix[-1][0]


def generate_incast(n_hosts: int, fan_in: int, total_bytes: int, seed: int,
                    dst: int | None = None, start_ns: int = 0,
                    group: int = 0, first_flow_id: int = 0) -> list[FlowSpec]:
    """One coordinated burst: fan_in senders each push an equal shard of
    total_bytes to a single destination at the same instant."""
    if fan_in >= n_hosts:
        raise ValueError("fan_in must leave room for the destination")
    rng = stream(seed, f"incast/{group}")
    if dst is None:
        dst = rng.randrange(n_hosts)
    senders = [h for h in range(n_hosts) if h != dst]
    rng.shuffle(senders)
    senders = senders[:fan_in]
    shard, extra = divmod(total_bytes, fan_in)
    flows = []
    for i, src in enumerate(senders):
        size = shard + (1 if i < extra else 0)
        flows.append(FlowSpec(first_flow_id + i, src, dst, size, start_ns,
                              "write", group=group))
    return flows
