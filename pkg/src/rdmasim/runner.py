"""End-to-end simulation runs: hosts, per-flow queue pairs, timers.

Each flow is carried by its own queue pair.  Host egress serves a
control queue (acknowledgments) ahead of data, then round-robins the
active queue pairs, one packet per free transmit slot.  Packets
store-and-forward across the fabric: a link serializes one packet at a
time, propagation is a fixed delay, and switch input buffers either
drop on overflow or pause their upstream link at the flow-control
threshold.  Acknowledgments travel the reverse path through the same
fabric and consume buffer space like any other packet.

Timers are lazy: restarting one only records the new deadline, and a
stale expiry event re-schedules itself instead of retransmitting, so a
busy flow costs one timer event per timeout period rather than one per
acknowledgment.
"""

from __future__ import annotations

import gc
from collections import deque
from dataclasses import dataclass
from heapq import heappush

from .ccontrol import AimdWindow
from .config import Resolved, RunConfig
from .fabric import Fabric
from .metrics import FlowRecord, ideal_fct_ns, packet_count
from .simcore import Engine, SimError
from .transport_gbn import GbnReceiver, GbnSender
from .transport_irn import IrnReceiver, IrnSender, TimeoutAction
from .workload import generate_flows, generate_incast

# Extra request-header bytes per data packet when header modelling is on.
HEADER_BYTES = {"write": 16, "send": 6, "read": 0}


class _Pkt:
    """One packet instance in the fabric.  ack is None for data; last is
    the path length, cached so the per-hop handler avoids a len() call."""

    __slots__ = ("flow", "psn", "size", "hop", "last", "ack")

    def __init__(self, flow, psn, size, hop, last, ack):
        self.flow = flow
        self.psn = psn
        self.size = size
        self.hop = hop
        self.last = last
        self.ack = ack


class _Flow:
    __slots__ = ("spec", "path", "rpath", "n_pkts", "pkt_size", "last_size",
                 "sender", "receiver", "cc", "gbn", "active",
                 "completion_ns", "retx", "pkts_sent", "drops",
                 "timer_deadline", "timer_scheduled",
                 "fetch_ready_ns", "fetch_kick_pending")

    def __init__(self, spec, path, rpath, n_pkts, pkt_size, last_size,
                 sender, receiver, cc, gbn):
        self.spec = spec
        self.path = path
        self.rpath = rpath
        self.n_pkts = n_pkts
        self.pkt_size = pkt_size
        self.last_size = last_size
        self.sender = sender
        self.receiver = receiver
        self.cc = cc
        self.gbn = gbn
        self.active = False
        self.completion_ns = None
        self.retx = 0
        self.pkts_sent = 0
        self.drops = 0
        self.timer_deadline = None
        self.timer_scheduled = None
        self.fetch_ready_ns = 0
        self.fetch_kick_pending = False


class _HostEgress:
    """Feeder for a host's uplink: control first, then QP round-robin."""

    __slots__ = ("emit", "ctrl", "qps")

    def __init__(self, run):
        self.emit = run._emit
        self.ctrl = deque()
        self.qps = deque()

    def next_packet(self):
        ctrl = self.ctrl
        if ctrl:
            pkt = ctrl.popleft()
            return pkt, pkt.size, None
        qps = self.qps
        emit = self.emit
        for _ in range(len(qps)):
            fl = qps[0]
            pkt = emit(fl)
            if pkt is None:
                qps.popleft()
                fl.active = False
            else:
                qps.rotate(-1)
                return pkt, pkt.size, None
        return None


class _Host:
    __slots__ = ("node", "uplink", "egress")

    def __init__(self, node, uplink, egress):
        self.node = node
        self.uplink = uplink
        self.egress = egress


@dataclass
class RunResult:
    records: list
    counters: dict
    sim_ns: int
    incomplete: int
    manifest: dict


def build_flow_specs(rv: Resolved) -> list:
    w = rv.cfg.workload
    if w.kind == "poisson":
        return generate_flows(rv.size_dist, w.load, rv.graph.n_hosts,
                              rv.bandwidth_bps, rv.cfg.seed, w.flow_count)
    # Coordinated bursts, spaced so each one drains before the next.
    if w.incast_total_bytes < w.incast_fan_in:
        raise SimError("incast total smaller than fan-in")
    spacing = (w.incast_total_bytes * 8_000_000_000 // rv.bandwidth_bps) * 2 \
        + int(w.incast_gap_us * 1000)
    specs = []
    for rep in range(w.incast_repeats):
        specs.extend(generate_incast(
            rv.graph.n_hosts, w.incast_fan_in, w.incast_total_bytes,
            rv.cfg.seed, start_ns=rep * spacing, group=rep,
            first_flow_id=len(specs)))
    return specs


class Run:
    def __init__(self, rv: Resolved, specs=None):
        self.rv = rv
        self.eng = Engine()
        self.fab = Fabric(rv.graph, rv.bandwidth_bps, rv.prop_ns,
                          rv.buffer_bytes, rv.cfg.topology.pfc,
                          rv.xoff_bytes, rv.xon_bytes)
        self.timeouts = rv.timeouts_enabled
        self.fetch_delay = rv.retx_fetch_delay_ns
        self.ack_bytes = rv.cfg.transport.ack_bytes
        self.mtu = rv.mtu
        self.specs = build_flow_specs(rv) if specs is None else specs
        self.hosts = []
        graph = rv.graph
        for h in range(graph.n_hosts):
            other = (h + 1) % graph.n_hosts
            tor = graph.next_hops[(h, other)][0]
            uplink = self.fab.link(h, tor)
            egress = _HostEgress(self)
            uplink.source = egress
            self.hosts.append(_Host(h, uplink, egress))
        self.flows = [self._make_flow(spec) for spec in self.specs]
        self.completed = 0
        self.retx_count = 0
        self.timeout_count = 0
        self.data_sent = 0
        self.acks_sent = 0
        self.drops_data = 0
        self.drops_ctrl = 0
        self.pause_count = 0
        # Hot-path plumbing: serialization times memoized per size (every
        # link runs at one rate), callbacks bound once instead of per event.
        self._ser_cache: dict = {}
        self._ser_done_cb = self._ser_done
        self._arrive_cb = self._arrive

    def _make_flow(self, spec):
        rv = self.rv
        nodes = rv.graph.route(rv.cfg.seed, spec.flow_id, spec.src, spec.dst)
        path = self.fab.links_on(nodes)
        rpath = self.fab.links_on(nodes[::-1])
        n_pkts = packet_count(spec.size_bytes, rv.mtu)
        extra = HEADER_BYTES[spec.kind] if rv.cfg.transport.extra_headers else 0
        last_payload = spec.size_bytes - (n_pkts - 1) * rv.mtu
        cap = rv.bdp_cap_packets if rv.bdp_fc else n_pkts
        gbn = rv.cfg.transport.kind == "gbn"
        if gbn:
            sender = GbnSender(bdp_cap=cap if rv.bdp_fc else 0,
                               rto_high_ns=rv.rto_high_ns)
            receiver = GbnReceiver()
        else:
            sender = IrnSender(bdp_cap=cap, rto_low_ns=rv.rto_low_ns,
                               rto_high_ns=rv.rto_high_ns,
                               n_small=rv.cfg.transport.n_small)
            receiver = IrnReceiver(capacity=cap, planes=0)
        cc = None
        if rv.cfg.cc.scheme == "aimd":
            cc = AimdWindow(bdp_cap=cap, slow_start=rv.cfg.cc.slow_start)
        elif rv.cfg.cc.scheme != "none":
            raise SimError(f"cc scheme {rv.cfg.cc.scheme!r} has no implementation")
        return _Flow(spec, path, rpath, n_pkts, rv.mtu + extra,
                     last_payload + extra, sender, receiver, cc, gbn)

    # -- egress ---------------------------------------------------------

    def _emit(self, fl):
        """One transmit slot offered to a queue pair; returns a packet
        or None when the pair has nothing eligible."""
        st = fl.sender
        in_flight = (st.next_psn - st.snd_una) & 0xFFFFFF
        if fl.gbn:
            avail = st.highest_sent < fl.n_pkts
        else:
            avail = st.next_psn < fl.n_pkts
        if avail and fl.cc is not None and not fl.cc.allow_send(in_flight):
            avail = False
        if fl.fetch_ready_ns and not fl.gbn:
            now = self.eng.now
            allow_retx = now >= fl.fetch_ready_ns
            got = st.tx_free(avail, allow_retx=allow_retx)
            if got is None:
                if not allow_retx and st.in_recovery and not fl.fetch_kick_pending:
                    fl.fetch_kick_pending = True
                    self.eng.schedule(fl.fetch_ready_ns, self._fetch_kick, fl)
                return None
            if got[1]:
                fl.fetch_ready_ns = now + self.fetch_delay
        else:
            got = st.tx_free(avail)
            if got is None:
                return None
        psn, is_retx = got
        if is_retx:
            fl.retx += 1
            self.retx_count += 1
        fl.pkts_sent += 1
        self.data_sent += 1
        if self.timeouts and fl.timer_deadline is None:
            self._set_timer(fl, st.rto_high_ns if fl.gbn else st.arm_rto())
        size = fl.last_size if psn == fl.n_pkts - 1 else fl.pkt_size
        return _Pkt(fl, psn, size, 0, len(fl.path), None)

    def _fetch_kick(self, fl):
        fl.fetch_kick_pending = False
        self._activate(fl)

    def _activate(self, fl):
        if not fl.active:
            fl.active = True
            host = self.hosts[fl.spec.src]
            host.egress.qps.append(fl)
            self._kick(host.uplink)

    def _flow_start(self, fl):
        self._activate(fl)

    # -- fabric dynamics -------------------------------------------------

    def _kick(self, link):
        if link.current is not None or link.paused or link.backlog == 0:
            return
        got = link.source.next_packet()
        if got is None:
            return
        pkt, size, xon = got
        link.current = pkt
        cache = self._ser_cache
        ser = cache.get(size)
        if ser is None:
            ser = link.ser_ns(size)
            cache[size] = ser
        eng = self.eng
        heappush(eng.heap, (eng.now + ser, eng.tick(), self._ser_done_cb, link))
        if xon is not None:
            xon.paused = False
            self._kick(xon)

    def _ser_done(self, link):
        pkt = link.current
        link.current = None
        eng = self.eng
        heappush(eng.heap, (eng.now + link.prop_ns, eng.tick(),
                            self._arrive_cb, pkt))
        self._kick(link)

    def _arrive(self, pkt):
        # Per-hop admission is inlined (SwitchPort.ingest unrolled): this
        # runs once per packet per hop and dominates the profile.
        fl = pkt.flow
        ack = pkt.ack
        h = pkt.hop + 1
        if h == pkt.last:
            if ack is None:
                self._on_data(fl, pkt)
            else:
                self._on_ack(fl, ack)
            return
        path = fl.path if ack is None else fl.rpath
        link = path[h - 1]
        pkt.hop = h
        nxt = path[h]
        port = link.in_port
        size = pkt.size
        occ = port.occupancy + size
        if occ > port.buffer_bytes:
            port.drops += 1
            if ack is None:
                self.drops_data += 1
                fl.drops += 1
            else:
                self.drops_ctrl += 1
            return
        port.occupancy = occ
        nxt.voqs[link.in_index].append((pkt, size))
        nxt.backlog += 1
        if port.xoff_at is not None and not port.xoff_sent and occ >= port.xoff_at:
            port.xoff_sent = True
            link.paused = True
            link.pauses += 1
            self.pause_count += 1
        if nxt.current is None and not nxt.paused:
            self._kick(nxt)

    # -- endpoints --------------------------------------------------------

    def _on_data(self, fl, pkt):
        if fl.gbn:
            ack = fl.receiver.receive_data(pkt.psn)
            if fl.completion_ns is None and fl.receiver.delivered == fl.n_pkts:
                self._complete(fl)
            if ack is None:
                return
        else:
            ack, _ = fl.receiver.receive_data(pkt.psn)
            if fl.completion_ns is None and fl.receiver.expected_psn == fl.n_pkts:
                self._complete(fl)
        self.acks_sent += 1
        host = self.hosts[fl.spec.dst]
        host.egress.ctrl.append(
            _Pkt(fl, -1, self.ack_bytes, 0, len(fl.rpath), ack))
        self._kick(host.uplink)

    def _on_ack(self, fl, ack):
        st = fl.sender
        out = st.receive_ack(ack)
        if out.stale:
            return
        sender_done = st.snd_una == fl.n_pkts
        if out.acked and fl.cc is not None:
            fl.cc.on_ack(out.acked)
        if out.entered_recovery:
            if fl.cc is not None:
                fl.cc.on_loss()
            if self.fetch_delay and not fl.gbn:
                fl.fetch_ready_ns = self.eng.now + self.fetch_delay
        if self.timeouts:
            if sender_done:
                fl.timer_deadline = None
            elif out.acked or out.entered_recovery:
                self._set_timer(fl, st.rto_high_ns if fl.gbn else st.arm_rto())
        if not sender_done and (out.acked or out.entered_recovery
                                or out.exited_recovery):
            self._activate(fl)

    def _complete(self, fl):
        fl.completion_ns = self.eng.now
        self.completed += 1
        if self.completed == len(self.flows) and self.rv.stop_ns is None:
            self.eng.stop()

    # -- timers -----------------------------------------------------------

    def _set_timer(self, fl, rto):
        self._set_timer_abs(fl, self.eng.now + rto)

    def _set_timer_abs(self, fl, deadline):
        fl.timer_deadline = deadline
        ts = fl.timer_scheduled
        if ts is None or ts > deadline:
            self.eng.schedule(deadline, self._timer_fire, fl)
            fl.timer_scheduled = deadline

    def _timer_fire(self, fl):
        fl.timer_scheduled = None
        deadline = fl.timer_deadline
        if deadline is None:
            return
        now = self.eng.now
        if deadline > now:
            self.eng.schedule(deadline, self._timer_fire, fl)
            fl.timer_scheduled = deadline
            return
        st = fl.sender
        if fl.gbn:
            if st.timeout_fired():
                self.timeout_count += 1
                if fl.cc is not None:
                    fl.cc.on_loss()
                self._set_timer(fl, st.rto_high_ns)
                self._activate(fl)
            else:
                fl.timer_deadline = None
            return
        was_recovering = st.in_recovery
        action = st.timeout_fired()
        if action is TimeoutAction.DISARM:
            fl.timer_deadline = None
        elif action is TimeoutAction.EXTEND_TO_HIGH:
            self._set_timer_abs(fl, deadline + st.rto_high_ns - st.rto_low_ns)
        else:
            self.timeout_count += 1
            if not was_recovering and fl.cc is not None:
                fl.cc.on_loss()
            if self.fetch_delay:
                fl.fetch_ready_ns = now + self.fetch_delay
            self._set_timer(fl, st.arm_rto())
            self._activate(fl)

    # -- lifecycle ----------------------------------------------------------

    def execute(self) -> RunResult:
        for fl in self.flows:
            self.eng.schedule(fl.spec.start_ns, self._flow_start, fl)
        # The event loop allocates heavily but never builds cycles; leaving
        # the cycle collector on costs noticeable time on long runs.
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            self.eng.run(until=self.rv.stop_ns)
        finally:
            if was_enabled:
                gc.enable()
        incomplete = len(self.flows) - self.completed
        if incomplete and self.rv.stop_ns is None:
            stuck = [fl.spec.flow_id for fl in self.flows
                     if fl.completion_ns is None][:5]
            raise SimError(
                f"run stalled with {incomplete} unfinished flows "
                f"(first ids {stuck}); transport or fabric liveness bug")
        rv = self.rv
        records = []
        for fl in self.flows:
            s = fl.spec
            records.append(FlowRecord(
                flow_id=s.flow_id, src=s.src, dst=s.dst,
                size_bytes=s.size_bytes, kind=s.kind, group=s.group,
                start_ns=s.start_ns, completion_ns=fl.completion_ns,
                hops=len(fl.path), packets=fl.pkts_sent,
                retransmissions=fl.retx,
                ideal_ns=ideal_fct_ns(s.size_bytes, len(fl.path),
                                      rv.bandwidth_bps, rv.prop_ns, rv.mtu)))
        counters = {
            "drops": self.drops_data + self.drops_ctrl,
            "drops_data": self.drops_data,
            "drops_ctrl": self.drops_ctrl,
            "pauses": self.pause_count,
            "retransmissions": self.retx_count,
            "timeouts": self.timeout_count,
            "data_packets": self.data_sent,
            "acks": self.acks_sent,
            "incomplete": incomplete,
        }
        return RunResult(records=records, counters=counters,
                         sim_ns=self.eng.now, incomplete=incomplete,
                         manifest=rv.manifest())


def run_config(cfg: RunConfig) -> RunResult:
    """Resolve and execute one configuration."""
    return Run(Resolved(cfg)).execute()
