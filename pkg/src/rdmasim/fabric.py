"""Network fabric: topology graphs, ECMP routing, and switch state.

The structural half of the simulator.  A graph describes nodes and
equal-cost next-hops; a Fabric instantiates directed links and
input-buffered switches over it.  Switches are input-queued with
virtual output queues (one per input port at each output, served
round-robin) so head-of-line blocking across outputs does not occur
inside a switch.  Each input port tracks its buffer occupancy and,
when priority flow control is enabled, pauses its upstream link at a
threshold that leaves headroom for the data already on the wire, and
resumes it on drain.

Dynamics (event scheduling, serialization, propagation) live in the
runner; everything here is synchronous state manipulation, which keeps
it testable in isolation.
"""

from __future__ import annotations

from collections import deque

from .simcore import stable_choice_index


class NetGraph:
    """Topology skeleton: adjacency plus precomputed equal-cost next hops."""

    def __init__(self, label, n_hosts, n_switches, next_hops, diameter_hops,
                 arity=None):
        self.label = label
        self.n_hosts = n_hosts
        self.n_switches = n_switches
        self.next_hops = next_hops  # (node, dst_host) -> tuple of next nodes
        self.diameter_hops = diameter_hops  # links on the longest host pair path
        self.arity = arity

    @property
    def n_nodes(self):
        return self.n_hosts + self.n_switches

    def route(self, seed: int, flow_id: int, src: int, dst: int) -> list[int]:
        """Node path src..dst; multi-choice hops hash (seed, flow, node)."""
        if src == dst:
            raise ValueError("src and dst must differ")
        path = [src]
        node = src
        while node != dst:
            choices = self.next_hops[(node, dst)]
            if len(choices) == 1:
                node = choices[0]
            else:
                node = choices[stable_choice_index(
                    seed, f"{flow_id}:{node}", len(choices))]
            path.append(node)
        return path


def build_fat_tree(arity: int) -> NetGraph:
    """Three-tier fat tree: arity pods, arity**3/4 hosts, 5*arity**2/4 switches.

    Hosts 0..H-1 come first in the id space, then edge, aggregation,
    and core switches.  Every host pair is at most six links apart.
    """
    k = arity
    if k < 2 or k % 2:
        raise ValueError("arity must be even and at least 2")
    half = k // 2
    n_hosts = k * k * k // 4
    hosts_per_pod = k * k // 4
    edge0 = n_hosts
    agg0 = edge0 + k * half
    core0 = agg0 + k * half
    n_switches = k * half * 2 + half * half

    def edge_id(pod, e):
        return edge0 + pod * half + e

    def agg_id(pod, a):
        return agg0 + pod * half + a

    def host_edge(h):
        pod = h // hosts_per_pod
        return pod, edge_id(pod, (h % hosts_per_pod) // half)

    next_hops: dict = {}
    aggs_of_pod = [tuple(agg_id(p, a) for a in range(half)) for p in range(k)]
    cores_of_agg = [tuple(core0 + a * half + c for c in range(half))
                    for a in range(half)]

    for d in range(n_hosts):
        d_pod, d_edge = host_edge(d)
        for s in range(n_hosts):
            if s == d:
                continue
            next_hops[(s, d)] = (host_edge(s)[1],)
        for pod in range(k):
            for e in range(half):
                eid = edge_id(pod, e)
                if eid == d_edge:
                    next_hops[(eid, d)] = (d,)
                else:
                    next_hops[(eid, d)] = aggs_of_pod[pod]
            for a in range(half):
                aid = agg_id(pod, a)
                if pod == d_pod:
                    next_hops[(aid, d)] = (d_edge,)
                else:
                    next_hops[(aid, d)] = cores_of_agg[a]
        for a in range(half):
            for cid in cores_of_agg[a]:
                next_hops[(cid, d)] = (agg_id(d_pod, a),)

    return NetGraph(f"fat_tree_k{k}", n_hosts, n_switches, next_hops,
                    diameter_hops=6, arity=k)


def build_line(n_switches: int) -> NetGraph:
    """Two hosts joined by a chain of switches; the only path is the line."""
    if n_switches < 1:
        raise ValueError("need at least one switch")
    next_hops = {}
    sw = [2 + i for i in range(n_switches)]
    chain = [0] + sw + [1]
    for i, node in enumerate(chain[:-1]):
        next_hops[(node, 1)] = (chain[i + 1],)
    for i, node in enumerate(chain[1:], start=1):
        next_hops[(node, 0)] = (chain[i - 1],)
    return NetGraph(f"line_{n_switches}", 2, n_switches, next_hops,
                    diameter_hops=n_switches + 1)


def adjacency(graph: NetGraph) -> set:
    """Directed edge set implied by the next-hop table."""
    edges = set()
    for (node, _dst), choices in graph.next_hops.items():
        for nxt in choices:
            edges.add((node, nxt))
            edges.add((nxt, node))
    return edges


def bdp_bytes(bandwidth_bps: int, prop_ns: int, hops: int) -> int:
    """Bandwidth-delay product for a round trip over hops store-and-forward
    propagation legs (transmission delays excluded)."""
    return bandwidth_bps * 2 * hops * prop_ns // 8_000_000_000


class Link:
    """Directed link.  current holds the packet being serialized; paused
    is the flow-control state imposed by the downstream input port."""

    __slots__ = ("u", "v", "bw_bps", "prop_ns", "paused", "current",
                 "source", "in_port", "in_index", "voqs", "backlog", "pauses")

    def __init__(self, u, v, bw_bps, prop_ns):
        self.u = u
        self.v = v
        self.bw_bps = bw_bps
        self.prop_ns = prop_ns
        self.paused = False
        self.current = None
        self.source = None   # feeder: HostEgress or SwitchOutput
        self.in_port = None  # SwitchPort at v, None when v is a host
        self.in_index = -1   # in_port.index, denormalized for the hot path
        self.voqs = None     # source.queues when the feeder is a switch
        self.backlog = -1    # queued count for switch feeders, -1 = untracked
        self.pauses = 0

    def ser_ns(self, size_bytes: int) -> int:
        return (size_bytes * 8_000_000_000 + self.bw_bps - 1) // self.bw_bps

    def __repr__(self):
        return f"Link({self.u}->{self.v})"


class SwitchPort:
    """Input port: one upstream link, one buffer, a pause latch."""

    __slots__ = ("index", "upstream_link", "occupancy", "buffer_bytes",
                 "xoff_at", "xon_at", "xoff_sent", "drops")

    def __init__(self, index, upstream_link, buffer_bytes, xoff_at, xon_at):
        self.index = index
        self.upstream_link = upstream_link
        self.occupancy = 0
        self.buffer_bytes = buffer_bytes
        self.xoff_at = xoff_at  # None disables flow control
        self.xon_at = xon_at
        self.xoff_sent = False
        self.drops = 0

    def admit(self, size: int) -> bool:
        if self.occupancy + size > self.buffer_bytes:
            self.drops += 1
            return False
        self.occupancy += size
        return True

    DROPPED, ACCEPTED, ACCEPTED_PAUSE = 0, 1, 2

    def ingest(self, pkt, size: int, queue) -> int:
        """Admit, enqueue, and evaluate the pause threshold in one step.
        Returns DROPPED, ACCEPTED, or ACCEPTED_PAUSE."""
        occ = self.occupancy + size
        if occ > self.buffer_bytes:
            self.drops += 1
            return 0
        self.occupancy = occ
        queue.append((pkt, size))
        if self.xoff_at is not None and not self.xoff_sent and occ >= self.xoff_at:
            self.xoff_sent = True
            return 2
        return 1

    def pause_needed(self) -> bool:
        if self.xoff_at is not None and not self.xoff_sent \
                and self.occupancy >= self.xoff_at:
            self.xoff_sent = True
            return True
        return False

    def release(self, size: int) -> bool:
        """Account a departure; True when the upstream link may resume."""
        self.occupancy -= size
        if self.xoff_sent and self.occupancy <= self.xon_at:
            self.xoff_sent = False
            return True
        return False


class SwitchOutput:
    """Round-robin scheduler over per-input virtual output queues."""

    __slots__ = ("link", "ports", "queues", "rr")

    def __init__(self, link, ports):
        self.link = link
        self.ports = ports
        self.queues = [deque() for _ in ports]
        self.rr = 0

    def next_packet(self):
        """Pop from the next non-empty VOQ; returns (pkt, size, xon_link)
        with xon_link set when the dequeue un-pauses an upstream link.
        The departure accounting is inlined: this runs once per packet
        per switch hop."""
        queues = self.queues
        n = len(queues)
        j = self.rr
        for _ in range(n):
            q = queues[j]
            if q:
                pkt, size = q.popleft()
                self.link.backlog -= 1
                port = self.ports[j]
                j += 1
                self.rr = 0 if j == n else j
                occ = port.occupancy - size
                port.occupancy = occ
                if port.xoff_sent and occ <= port.xon_at:
                    port.xoff_sent = False
                    return pkt, size, port.upstream_link
                return pkt, size, None
            j += 1
            if j == n:
                j = 0
        return None

    def backlog(self) -> int:
        return sum(len(q) for q in self.queues)


class Switch:
    __slots__ = ("node", "ports", "outputs")

    def __init__(self, node):
        self.node = node
        self.ports = []
        self.outputs = []


class Fabric:
    """Runtime link and switch objects over a NetGraph."""

    def __init__(self, graph: NetGraph, bandwidth_bps: int, prop_ns: int,
                 buffer_bytes: int, pfc_enabled: bool,
                 xoff_bytes=None, xon_bytes=None):
        self.graph = graph
        self.pfc_enabled = pfc_enabled
        self.links: dict = {}
        self.switches: dict = {}
        for (u, v) in sorted(adjacency(graph)):
            self.links[(u, v)] = Link(u, v, bandwidth_bps, prop_ns)
        for node in range(graph.n_hosts, graph.n_nodes):
            sw = Switch(node)
            in_links = sorted((l for l in self.links.values() if l.v == node),
                              key=lambda l: l.u)
            for idx, link in enumerate(in_links):
                port = SwitchPort(idx, link, buffer_bytes,
                                  xoff_bytes if pfc_enabled else None,
                                  xon_bytes if pfc_enabled else None)
                link.in_port = port
                link.in_index = idx
                sw.ports.append(port)
            for link in sorted((l for l in self.links.values() if l.u == node),
                               key=lambda l: l.v):
                out = SwitchOutput(link, sw.ports)
                link.source = out
                link.voqs = out.queues
                link.backlog = 0
                sw.outputs.append(out)
            self.switches[node] = sw

    def link(self, u, v) -> Link:
        return self.links[(u, v)]

    def links_on(self, node_path) -> tuple:
        return tuple(self.links[(node_path[i], node_path[i + 1])]
                     for i in range(len(node_path) - 1))

    def total_drops(self) -> int:
        return sum(p.drops for sw in self.switches.values() for p in sw.ports)

    def total_pauses(self) -> int:
        return sum(l.pauses for l in self.links.values())
