"""Selective-retransmission transport with bounded in-flight window.

Sans-IO state machines for one direction of a reliable message stream.
The sender admits new packets only while the in-flight count stays
under a cap sized to the network's bandwidth-delay product, tracks
selective acknowledgments in a bitmap, and recovers holes below the
highest selectively-acked sequence.  The receiver accepts packets
anywhere inside its window, delivers in order, and answers every data
packet with a cumulative ACK or, for an out-of-order arrival, a NACK
naming the arrival it did absorb.

Two timeout modes back up the NACK path: a short timer when few
packets are in flight (their loss can strand the sender with nobody
left to trigger a NACK) and a long timer otherwise, so bursts of ACKs
arriving just after a short timer would have fired do not cause
spurious recovery.
"""

from __future__ import annotations

from enum import Enum

from .bitmap import SeqBitmap, WindowViolation, seq_add, seq_diff, seq_gt

# Receiver flag planes.
MSN_PLANE = 0
EXPIRE_PLANE = 1

DEFAULT_RTO_LOW_NS = 100_000
DEFAULT_N_SMALL = 3


class Ack:
    """Acknowledgment carried back to the sender.

    cumulative is the receiver's next expected sequence.  A NACK also
    carries the out-of-order sequence it selectively acknowledges.
    msn mirrors the receiver's delivered-message counter for
    completion-queue bookkeeping at the sender.
    """

    __slots__ = ("is_nack", "cumulative", "sacked", "msn")

    def __init__(self, is_nack: bool, cumulative: int, sacked: int = -1, msn: int = 0):
        self.is_nack = is_nack
        self.cumulative = cumulative
        self.sacked = sacked
        self.msn = msn

    @property
    def kind(self) -> str:
        return "NACK" if self.is_nack else "ACK"

    def __repr__(self):
        if self.is_nack:
            return f"NACK(cum={self.cumulative}, sacked={self.sacked})"
        return f"ACK(cum={self.cumulative})"


class AckOutcome:
    __slots__ = ("acked", "entered_recovery", "exited_recovery", "stale")

    def __init__(self, acked, entered, exited, stale):
        self.acked = acked
        self.entered_recovery = entered
        self.exited_recovery = exited
        self.stale = stale


class TimeoutAction(Enum):
    DISARM = "disarm"
    EXTEND_TO_HIGH = "extend_to_high"
    ENTER_RECOVERY = "enter_recovery"


class IrnSender:
    """Sender half: window admission, SACK tracking, loss recovery."""

    __slots__ = (
        "next_psn", "snd_una", "bdp_cap", "sack",
        "in_recovery", "retransmit_seq", "recovery_seq", "force_cum_retx",
        "timeout_low_mode", "rto_low_ns", "rto_high_ns", "n_small",
        "retransmissions",
    )

    def __init__(self, bdp_cap: int, first_psn: int = 0,
                 rto_low_ns: int = DEFAULT_RTO_LOW_NS,
                 rto_high_ns: int = 320_000,
                 n_small: int = DEFAULT_N_SMALL):
        if bdp_cap < 1:
            raise ValueError("bdp_cap must be at least 1")
        self.next_psn = first_psn
        self.snd_una = first_psn
        self.bdp_cap = bdp_cap
        self.sack = SeqBitmap(bdp_cap, head_seq=first_psn)
        self.in_recovery = False
        self.retransmit_seq = first_psn
        self.recovery_seq = first_psn
        self.force_cum_retx = False
        self.timeout_low_mode = True
        self.rto_low_ns = rto_low_ns
        self.rto_high_ns = rto_high_ns
        self.n_small = n_small
        self.retransmissions = 0

    def in_flight(self) -> int:
        return seq_diff(self.next_psn, self.snd_una)

    def _check_window(self):
        if seq_diff(self.next_psn, self.snd_una) > self.bdp_cap:
            raise WindowViolation(
                f"in-flight {self.in_flight()} exceeds cap {self.bdp_cap}")

    def tx_free(self, data_available: bool, allow_retx: bool = True):
        """Pick the next packet for a free transmit slot.

        Returns (psn, is_retransmission) or None when nothing is
        eligible.  In recovery, holes below the highest selectively
        acked sequence go first (the first one is always the cumulative
        ack itself); new data still flows once the known holes are
        exhausted, window permitting.  Recovery entered by a timeout
        has no selective acks to scan against, so the cumulative packet
        itself is marked lost and resent once.  allow_retx lets the
        caller hold retransmissions back while a lost payload is still
        being fetched from host memory.
        """
        if self.in_recovery and allow_retx:
            if self.force_cum_retx:
                self.force_cum_retx = False
                self.retransmit_seq = seq_add(self.snd_una, 1)
                self.retransmissions += 1
                return self.snd_una, True
            start = seq_diff(self.retransmit_seq, self.snd_una)
            idx = self.sack.first_unset_index(start)
            if idx < self.sack.highest_set_index():
                psn = seq_add(self.snd_una, idx)
                self.retransmit_seq = seq_add(psn, 1)
                self.retransmissions += 1
                return psn, True
        if data_available and seq_diff(self.next_psn, self.snd_una) < self.bdp_cap:
            psn = self.next_psn
            self.next_psn = seq_add(psn, 1)
            self._check_window()
            return psn, False
        return None

    def receive_ack(self, ack: Ack) -> AckOutcome:
        cum = ack.cumulative
        if cum != self.snd_una and not seq_gt(cum, self.snd_una):
            # Stale: cumulative below what we already know is delivered.
            return AckOutcome(0, False, False, True)
        if seq_gt(cum, self.next_psn):
            raise WindowViolation(f"ack {cum} beyond next_psn {self.next_psn}")
        acked = seq_diff(cum, self.snd_una)
        exited = False
        if acked:
            self.snd_una = cum
            self.sack.slide_to(cum)
            self.force_cum_retx = False
            if self.in_recovery:
                if seq_gt(cum, self.recovery_seq):
                    self.in_recovery = False
                    exited = True
                elif seq_gt(cum, self.retransmit_seq):
                    self.retransmit_seq = cum
        entered = False
        if ack.is_nack:
            if self.sack.contains(ack.sacked) and seq_gt(ack.sacked, self.snd_una):
                self.sack.mark(ack.sacked)
            if not self.in_recovery:
                self.in_recovery = True
                entered = True
                self.retransmit_seq = self.snd_una
                self.recovery_seq = seq_add(self.next_psn, -1)
        self._check_window()
        return AckOutcome(acked, entered, exited, False)

    def arm_rto(self) -> int:
        """Choose the timeout for (re)arming; records the mode chosen."""
        self.timeout_low_mode = self.in_flight() <= self.n_small
        return self.rto_low_ns if self.timeout_low_mode else self.rto_high_ns

    def timeout_fired(self) -> TimeoutAction:
        """Handle an expired timer.

        A short-mode timer that finds many packets in flight was armed
        before the window grew; it extends instead of retransmitting.
        Otherwise the timeout opens (or restarts) recovery from the
        cumulative ack.
        """
        if self.in_flight() == 0:
            return TimeoutAction.DISARM
        if self.timeout_low_mode and self.in_flight() > self.n_small:
            self.timeout_low_mode = False
            return TimeoutAction.EXTEND_TO_HIGH
        self.in_recovery = True
        self.retransmit_seq = self.snd_una
        self.recovery_seq = seq_add(self.next_psn, -1)
        self.force_cum_retx = True
        return TimeoutAction.ENTER_RECOVERY

    def done(self, total_packets: int, first_psn: int = 0) -> bool:
        return self.snd_una == seq_add(first_psn, total_packets)


class IrnReceiver:
    """Receiver half: windowed arrival tracking and in-order delivery.

    Flag planes ride along with each arrival so the verbs layer can
    count, per advance, how many delivered packets complete a message
    (plane 0) and how many expire a receive work-queue element
    (plane 1).
    """

    __slots__ = ("bitmap", "msn", "delivered")

    def __init__(self, capacity: int, first_psn: int = 0, planes: int = 2):
        self.bitmap = SeqBitmap(capacity, head_seq=first_psn, planes=planes)
        self.msn = 0
        self.delivered = 0

    @property
    def expected_psn(self) -> int:
        return self.bitmap.head_seq

    def receive_data(self, psn: int, flags: tuple = ()) -> tuple[Ack, tuple[int, ...]]:
        """Absorb one data packet; returns the ack to send and the
        per-plane counts of flags consumed by any in-order delivery."""
        bm = self.bitmap
        zero = (0,) * len(bm.planes)
        if not bm.contains(psn):
            if seq_diff(bm.head_seq, psn) <= bm.capacity:
                # Duplicate of an already-delivered packet.
                return Ack(False, bm.head_seq, msn=self.msn), zero
            raise WindowViolation(
                f"psn {psn} outside window at {bm.head_seq}")
        if psn == bm.head_seq:
            bm.mark(psn, flags)
            consumed, counts = bm.advance()
            self.delivered += consumed
            if counts:
                self.msn += counts[MSN_PLANE]
            return Ack(False, bm.head_seq, msn=self.msn), counts
        if not bm.mark(psn, flags):
            # Out-of-order duplicate: plain ack, no fresh information.
            return Ack(False, bm.head_seq, msn=self.msn), zero
        return Ack(True, bm.head_seq, sacked=psn, msn=self.msn), zero
