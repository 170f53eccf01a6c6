"""RDMA operation semantics over the transport core.

This layer turns posted work requests into self-describing packets and
shows that out-of-order arrival is compatible with RDMA completion
rules.  Every write packet carries its absolute destination address,
every send packet carries the sequence number of the receive queue
element it consumes plus a byte offset, so the responder can place
payload bytes the moment they arrive.  Completion bookkeeping stays
in-order: arrivals are tracked in a two-plane window bitmap whose
flag planes mark, per packet, whether delivery bumps the message
counter and whether it expires a receive element.  Both effects fire
only when the window head slides past the packet, so a completion is
never visible while an earlier hole remains.

Read and atomic requests cannot execute early; they park in a bounded
request buffer and run when the head reaches them.  The requester
tracks read responses in a separate sequence space and answers each
response packet with its own (n)ack, mirroring the data-path ack
discipline.  Receiver-not-ready and similar error nacks fall back to a
full rewind at the requester; an out-of-order packet that would have
drawn an error nack is silently discarded instead.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .bitmap import PSN_BITS, seq_diff
from .transport_irn import EXPIRE_PLANE, MSN_PLANE, Ack, IrnReceiver


class VerbsError(Exception):
    pass


class Op(enum.Enum):
    WRITE = "write"
    WRITE_IMM = "write_imm"
    SEND = "send"
    SEND_INV = "send_inv"
    READ = "read"
    ATOMIC = "atomic"


# Operations whose packets consume a receive queue element.
CONSUMES_RECV = {Op.SEND, Op.SEND_INV, Op.WRITE_IMM}
# Operations parked at the responder until all earlier packets arrive.
READ_LIKE = {Op.READ, Op.ATOMIC}

ATOMIC_BYTES = 8


@dataclass
class RequestWqe:
    kind: Op
    length: int
    index: int                   # posting order on the send queue
    raddr: int | None = None     # responder address (write/read/atomic)
    laddr: int | None = None     # requester address for response payloads
    imm: int | None = None
    operand: int = 0             # atomic add amount
    fence: bool = False
    recv_wqe_sn: int | None = None
    read_wqe_sn: int | None = None
    state: str = "posted"        # posted | in-progress | expired


@dataclass
class ReceiveWqe:
    addr: int
    length: int
    sn: int | None = None        # allotted lazily when fed from a shared queue
    state: str = "posted"


@dataclass
class Cqe:
    op: Op
    wqe_index: int               # request index or receive sn
    length: int
    imm: int | None = None
    premature: bool = False


class ReqPacket:
    """One request packet.  Writes carry their target address, sends
    carry the receive element sequence number and byte offset, so no
    packet depends on an earlier one for placement."""

    __slots__ = ("psn", "op", "msg", "idx", "last", "payload", "raddr",
                 "recv_sn", "offset", "read_sn", "length", "imm", "operand")

    def __init__(self, psn, op, msg, idx, last, payload=b"", raddr=None,
                 recv_sn=None, offset=0, read_sn=None, length=0, imm=None,
                 operand=0):
        self.psn = psn
        self.op = op
        self.msg = msg
        self.idx = idx
        self.last = last
        self.payload = payload
        self.raddr = raddr
        self.recv_sn = recv_sn
        self.offset = offset
        self.read_sn = read_sn
        self.length = length
        self.imm = imm
        self.operand = operand


class RespPacket:
    """One read/atomic response packet, numbered in its own space."""

    __slots__ = ("rpsn", "msg", "idx", "last", "payload")

    def __init__(self, rpsn, msg, idx, last, payload):
        self.rpsn = rpsn
        self.msg = msg
        self.idx = idx
        self.last = last
        self.payload = payload


def packets_in(length: int, mtu: int) -> int:
    return max(1, -(-length // mtu))


def apply_fence_rules(wqes: list, overlap_fence: bool = False) -> list:
    """Annotate a posted request queue with fence flags.

    A send-with-invalidate must never run ahead of earlier writes to
    the region it kills, so it is always fenced.  With overlap_fence,
    a write aimed at bytes still in flight from an earlier write or
    atomic is fenced too; by default that hazard is left to the
    application, which matches how shipping hardware treats it.
    """
    for i, w in enumerate(wqes):
        if w.kind is Op.SEND_INV:
            w.fence = True
        elif overlap_fence and w.kind is Op.WRITE and w.raddr is not None:
            lo, hi = w.raddr, w.raddr + w.length
            for prior in wqes[:i]:
                if prior.state == "expired" or prior.raddr is None:
                    continue
                if prior.kind is Op.WRITE or prior.kind is Op.ATOMIC:
                    plen = ATOMIC_BYTES if prior.kind is Op.ATOMIC else prior.length
                    if prior.raddr < hi and lo < prior.raddr + plen:
                        w.fence = True
                        break
    return wqes


class Requester:
    """Send-queue side of a queue pair.

    Posted requests are packetized in order onto a single request
    sequence space.  Emission stalls at a fenced request until all
    earlier requests have completed, and at a read or atomic when the
    responder-side request buffer would overflow.  Completions release
    strictly in posting order: plain writes and sends complete when the
    responder's message counter covers them, reads and atomics when
    every response byte has been placed.
    """

    def __init__(self, mtu: int, memory_bytes: int = 0,
                 read_buffer_depth: int = 16, overlap_fence: bool = False,
                 window: int = 1 << 16):
        self.mtu = mtu
        self.memory = bytearray(memory_bytes)
        self.read_buffer_depth = read_buffer_depth
        self.overlap_fence = overlap_fence
        self.wqes: list[RequestWqe] = []
        self.completions: list[Cqe] = []
        self.sent_log: list[ReqPacket] = []    # by psn, for rewinds
        self.next_psn = 0                      # next new packet to build
        self.cursor = 0                        # next psn to hand out
        self.snd_una = 0
        self.msn_seen = 0
        self.retransmissions = 0
        self._next_recv_sn = 0
        self._next_read_sn = 0
        self._next_msg = 0
        self._build_queue: deque[RequestWqe] = deque()
        self._release_idx = 0
        self._reads_outstanding = 0
        # Response tracking in its own sequence space; flag plane 0
        # marks the final packet of each response.
        self.resp_recv = IrnReceiver(capacity=window, planes=1)
        self._resp_map: dict[int, tuple[RequestWqe, int]] = {}
        self._resp_placed: dict[int, int] = {}
        self._next_rpsn = 0

    # -- posting ---------------------------------------------------------

    def post(self, kind: Op, length: int = 0, raddr=None, laddr=None,
             imm=None, operand: int = 0, fence: bool = False) -> RequestWqe:
        if kind is Op.ATOMIC and length != ATOMIC_BYTES:
            raise VerbsError("atomic operations are single 8-byte packets")
        w = RequestWqe(kind, length, index=len(self.wqes), raddr=raddr,
                       laddr=laddr, imm=imm, operand=operand, fence=fence)
        if kind in CONSUMES_RECV:
            w.recv_wqe_sn = self._next_recv_sn
            self._next_recv_sn += 1
        if kind in READ_LIKE:
            w.read_wqe_sn = self._next_read_sn
            self._next_read_sn += 1
            for i in range(packets_in(length, self.mtu)):
                self._resp_map[self._next_rpsn] = (w, i * self.mtu)
                self._next_rpsn += 1
        self.wqes.append(w)
        apply_fence_rules(self.wqes, self.overlap_fence)
        self._build_queue.append(w)
        return w

    def _packetize(self, w: RequestWqe) -> list[ReqPacket]:
        # A read or atomic request is one packet whatever its response
        # length; only the response side is segmented.
        n = 1 if w.kind in READ_LIKE else packets_in(w.length, self.mtu)
        msg = self._next_msg
        self._next_msg += 1
        pkts = []
        for i in range(n):
            last = i == n - 1
            chunk = min(self.mtu, w.length - i * self.mtu)
            pkt = ReqPacket(self.next_psn, w.kind, msg, i, last,
                            payload=self._payload(w, i, chunk),
                            length=w.length, imm=w.imm if last else None,
                            operand=w.operand)
            if w.kind is Op.WRITE or w.kind is Op.WRITE_IMM:
                pkt.raddr = w.raddr + i * self.mtu
                if w.kind is Op.WRITE_IMM and last:
                    pkt.recv_sn = w.recv_wqe_sn
            elif w.kind in CONSUMES_RECV:
                pkt.recv_sn = w.recv_wqe_sn
                pkt.offset = i * self.mtu
            elif w.kind in READ_LIKE:
                pkt.raddr = w.raddr
                pkt.read_sn = w.read_wqe_sn
            self.next_psn += 1
            pkts.append(pkt)
        return pkts

    def _payload(self, w: RequestWqe, idx: int, chunk: int) -> bytes:
        if w.kind in READ_LIKE:
            return b""
        if w.laddr is None:
            return bytes(chunk)
        base = w.laddr + idx * self.mtu
        return bytes(self.memory[base:base + chunk])

    # -- emission --------------------------------------------------------

    def poll(self) -> list[ReqPacket]:
        """All packets clear to transmit right now, in order."""
        out = []
        while True:
            if self.cursor < len(self.sent_log):
                pkt = self.sent_log[self.cursor]
                self.cursor += 1
                out.append(pkt)
                continue
            if not self._build_queue:
                break
            w = self._build_queue[0]
            if w.fence and self._release_idx < w.index:
                break
            if w.kind in READ_LIKE:
                if self._reads_outstanding >= self.read_buffer_depth:
                    break
                self._reads_outstanding += 1
            self._build_queue.popleft()
            w.state = "in-progress"
            self.sent_log.extend(self._packetize(w))
        return out

    def on_error_nack(self, cumulative: int) -> None:
        """Receiver-not-ready and friends: rewind and resend everything
        from the cumulative point, go-back-n style."""
        if cumulative >= len(self.sent_log):
            return
        self.snd_una = max(self.snd_una, cumulative)
        outstanding = len(self.sent_log) - cumulative
        if self.cursor > cumulative:
            self.retransmissions += outstanding - (len(self.sent_log)
                                                   - self.cursor)
            self.cursor = cumulative

    # -- acks and responses ------------------------------------------------

    def on_ack(self, ack: Ack) -> None:
        if ack.msn > self.msn_seen:
            self.msn_seen = ack.msn
        self.snd_una = max(self.snd_una, ack.cumulative)
        self._release()

    def on_response(self, pkt: RespPacket) -> Ack:
        """Track one read/atomic response packet and return the read
        (n)ack to send back."""
        bm = self.resp_recv.bitmap
        fresh = bm.contains(pkt.rpsn) and not bm.is_marked(pkt.rpsn)
        if fresh:
            w, off = self._resp_map[pkt.rpsn]
            if w.laddr is not None:
                base = w.laddr + off
                self.memory[base:base + len(pkt.payload)] = pkt.payload
            self._resp_placed[w.index] = self._resp_placed.get(w.index, 0) + 1
        ack, _ = self.resp_recv.receive_data(pkt.rpsn,
                                             (1,) if pkt.last else (0,))
        if fresh:
            self._release()
        return ack

    def _response_done(self, w: RequestWqe) -> bool:
        return self._resp_placed.get(w.index, 0) == packets_in(w.length,
                                                               self.mtu)

    def _release(self) -> None:
        while self._release_idx < len(self.wqes):
            w = self.wqes[self._release_idx]
            if w.state == "posted":
                break
            if w.kind in READ_LIKE:
                if not self._response_done(w):
                    break
                self._reads_outstanding -= 1
            elif self.msn_seen <= w.index:
                break
            w.state = "expired"
            self.completions.append(Cqe(w.kind, w.index, w.length, w.imm))
            self._release_idx += 1


class Responder:
    """Receive side of a queue pair with out-of-order placement.

    Payload goes to memory the moment a fresh packet arrives; message
    completion, receive-element expiry, and read execution all wait for
    the in-order point.  A completion for a message whose last packet
    arrived early is created immediately but held back (premature) and
    released only when the window head passes it.
    """

    RNR = "rnr"
    DROP = "drop"

    def __init__(self, mtu: int, memory_bytes: int, window: int = 1 << 16,
                 srq: bool = False, read_buffer_depth: int = 16):
        self.mtu = mtu
        self.memory = bytearray(memory_bytes)
        self.srq_mode = srq
        self.read_buffer_depth = read_buffer_depth
        self.recv = IrnReceiver(capacity=window, planes=2)
        self.srq: deque[ReceiveWqe] = deque()
        self.allotted: dict[int, ReceiveWqe] = {}
        self.next_alloc_sn = 0
        self.completions: list[Cqe] = []
        self.responses: list[RespPacket] = []
        self._premature: dict[int, tuple[Cqe, int]] = {}
        self._released: list[tuple[int, Op]] = []   # (message, op) in order
        self._next_release_sn = 0
        self._parked: dict[int, ReqPacket] = {}
        self._next_rpsn = 0
        self._messages_seen: dict[int, ReqPacket] = {}
        self._executed_atomics: list[int] = []   # request psns, in order
        self.rnr_nacks = 0
        self.silent_drops = 0

    @property
    def msn(self) -> int:
        return self.recv.msn

    def post_recv(self, addr: int, length: int) -> ReceiveWqe:
        w = ReceiveWqe(addr, length)
        if self.srq_mode:
            self.srq.append(w)
        else:
            w.sn = self.next_alloc_sn
            self.next_alloc_sn += 1
            self.allotted[w.sn] = w
        return w

    # -- allotment ---------------------------------------------------------

    def _can_allot(self, sn: int) -> bool:
        if sn < self.next_alloc_sn:
            return sn in self.allotted or sn < self._next_release_sn
        if not self.srq_mode:
            return False
        return len(self.srq) >= sn - self.next_alloc_sn + 1

    def _allot(self, sn: int) -> ReceiveWqe:
        """Feed queue elements up to sn from the shared queue, numbering
        them in dequeue order."""
        while self.next_alloc_sn <= sn:
            w = self.srq.popleft()
            w.sn = self.next_alloc_sn
            self.allotted[w.sn] = w
            self.next_alloc_sn += 1
        return self.allotted[sn]

    # -- request path -------------------------------------------------------

    def on_request(self, pkt: ReqPacket):
        """Process one arriving request packet.  Returns the ack or nack
        to send, (Responder.RNR, psn) for a receiver-not-ready error, or
        Responder.DROP when the packet must vanish without a reply."""
        bm = self.recv.bitmap
        psn = pkt.psn
        if not bm.contains(psn):
            if seq_diff(bm.head_seq, psn) <= bm.capacity:
                return Ack(False, bm.head_seq, msn=self.recv.msn)
            raise VerbsError(f"psn {psn} outside receive window")
        fresh = not bm.is_marked(psn)
        in_order = psn == bm.head_seq
        flags = (0, 0)
        if fresh:
            outcome = self._admit(pkt, in_order)
            if outcome is not None:
                return outcome
            # Message-counter bump on every message-final packet (read
            # and atomic requests are single packets, so always final);
            # receive-element expiry only where one is consumed.
            flags = (1 if pkt.last else 0,
                     1 if pkt.last and pkt.op in CONSUMES_RECV else 0)
        old_head = bm.head_seq
        ack, counts = self.recv.receive_data(psn, flags)
        if counts[MSN_PLANE] or counts[EXPIRE_PLANE]:
            self._on_advance(old_head, counts)
        return ack

    def _admit(self, pkt: ReqPacket, in_order: bool):
        """Placement and per-packet bookkeeping for a fresh packet.
        Returns None when accepted, or an early verdict."""
        op = pkt.op
        if op is Op.WRITE or op is Op.WRITE_IMM:
            if pkt.payload:
                self.memory[pkt.raddr:pkt.raddr + len(pkt.payload)] = pkt.payload
            if op is Op.WRITE_IMM and pkt.last:
                if not self._can_allot(pkt.recv_sn):
                    return self._reject(in_order)
                self._premature[pkt.recv_sn] = (
                    Cqe(op, pkt.recv_sn, pkt.length, pkt.imm,
                        premature=not in_order),
                    pkt.msg)
        elif op in CONSUMES_RECV:
            if not self._can_allot(pkt.recv_sn):
                return self._reject(in_order)
            w = self._allot(pkt.recv_sn)
            if pkt.offset + len(pkt.payload) > w.length:
                raise VerbsError("send overruns its receive buffer")
            base = w.addr + pkt.offset
            self.memory[base:base + len(pkt.payload)] = pkt.payload
            if pkt.last:
                self._premature[pkt.recv_sn] = (
                    Cqe(op, pkt.recv_sn, pkt.length, pkt.imm,
                        premature=not in_order),
                    pkt.msg)
        elif op in READ_LIKE:
            if len(self._parked) >= self.read_buffer_depth:
                raise VerbsError("read request buffer overflow")
            self._parked[pkt.psn] = pkt
        if pkt.last:
            self._messages_seen[pkt.msg] = pkt
        return None

    def _reject(self, in_order: bool):
        if in_order:
            self.rnr_nacks += 1
            return (self.RNR, self.recv.bitmap.head_seq)
        self.silent_drops += 1
        return self.DROP

    def _on_advance(self, old_head: int, counts) -> None:
        new_head = self.recv.bitmap.head_seq
        for _ in range(counts[EXPIRE_PLANE]):
            sn = self._next_release_sn
            self._next_release_sn += 1
            cqe, msg = self._premature.pop(sn)
            wqe = self._allot(sn)
            wqe.state = "expired"
            self.completions.append(cqe)
            self._released.append((msg, cqe.op))
        span = seq_diff(new_head, old_head)
        if self._parked:
            for psn in sorted(self._parked):
                if seq_diff(psn, old_head) < span:
                    self._execute(self._parked.pop(psn))

    def _execute(self, pkt: ReqPacket) -> None:
        if pkt.op is Op.ATOMIC:
            val = int.from_bytes(self.memory[pkt.raddr:pkt.raddr + 8], "little")
            new = (val + pkt.operand) % (1 << 64)
            self.memory[pkt.raddr:pkt.raddr + 8] = new.to_bytes(8, "little")
            self._executed_atomics.append(pkt.psn)
            self._respond(pkt, val.to_bytes(8, "little"))
        else:
            data = bytes(self.memory[pkt.raddr:pkt.raddr + pkt.length])
            self._respond(pkt, data)

    def _respond(self, pkt: ReqPacket, data: bytes) -> None:
        n = packets_in(len(data), self.mtu)
        for i in range(n):
            chunk = data[i * self.mtu:(i + 1) * self.mtu]
            self.responses.append(RespPacket(self._next_rpsn, pkt.msg, i,
                                             i == n - 1, chunk))
            self._next_rpsn += 1

    # -- write visibility ----------------------------------------------------

    def write_visible(self, msg: int) -> bool:
        """Whether an application may rely on the bytes of write message
        msg.  True only after an event that itself waited for every
        earlier packet: the message's own immediate-completion, a later
        send's completion, or a later atomic's execution."""
        pkt = self._messages_seen.get(msg)
        if pkt is None or pkt.op not in (Op.WRITE, Op.WRITE_IMM):
            return False
        for rel_msg, op in self._released:
            if op is Op.WRITE_IMM and rel_msg == msg:
                return True
            if op in (Op.SEND, Op.SEND_INV) and rel_msg > msg:
                return True
        return any(a > pkt.psn for a in self._executed_atomics)


def state_overhead_report(bitmap_width: int) -> dict:
    """Additional NIC state this design needs, in the units hardware
    people care about.  Transport logic adds two 24-bit sequence markers
    and four flag bits per direction; the responder also carries a read
    timeout timer and an in-progress read tracker.  Bitmaps: the
    two-plane receive map, the response map, and one selective-ack map
    per direction."""
    if bitmap_width <= 0:
        raise VerbsError("bitmap width must be positive")
    transport_bits = 2 * PSN_BITS + 4
    read_bits = 56
    return {
        "requester_transport_bits": transport_bits,
        "responder_transport_bits": transport_bits,
        "read_tracking_bits": read_bits,
        "per_qp_bits": 2 * transport_bits + read_bits,
        "bitmap_count": 5,
        "bitmap_bits": 5 * bitmap_width,
        "per_wqe_bytes": 3,
        "shared_bytes": 10,
    }
