"""Go-back-N transport: the classic lossy-NIC baseline.

The receiver accepts only the exact next sequence, discards everything
else, and names the gap in a NACK; the sender rewinds its transmit
pointer to the cumulative ack and resends the whole tail.  One NACK is
sent per gap episode (further out-of-order arrivals stay silent until
the gap closes) so a long burst past a single loss does not trigger a
rewind storm.  A fixed long timeout backs up lost NACKs; on networks
that pause instead of dropping, timeouts are left disarmed.
"""

from __future__ import annotations

from .bitmap import WindowViolation, seq_add, seq_diff, seq_gt
from .transport_irn import Ack, AckOutcome


class GbnSender:
    """Cumulative-ack sender with rewind-on-loss."""

    __slots__ = ("next_psn", "snd_una", "bdp_cap", "retransmissions",
                 "highest_sent", "rto_high_ns")

    def __init__(self, first_psn: int = 0, bdp_cap: int = 0,
                 rto_high_ns: int = 320_000):
        # bdp_cap of 0 means no window cap (the classic behaviour).
        self.next_psn = first_psn
        self.snd_una = first_psn
        self.highest_sent = first_psn
        self.bdp_cap = bdp_cap
        self.rto_high_ns = rto_high_ns
        self.retransmissions = 0

    def in_flight(self) -> int:
        return seq_diff(self.next_psn, self.snd_una)

    def tx_free(self, data_available: bool):
        """Next packet for a free slot: (psn, is_retransmission) or None.

        data_available means the message has bytes at or beyond
        highest_sent; after a rewind the stretch up to highest_sent is
        a retransmission regardless.
        """
        rewound = seq_gt(self.highest_sent, self.next_psn)
        if not (data_available or rewound):
            return None
        if self.bdp_cap and seq_diff(self.next_psn, self.snd_una) >= self.bdp_cap:
            return None
        psn = self.next_psn
        self.next_psn = seq_add(psn, 1)
        if rewound:
            self.retransmissions += 1
            return psn, True
        self.highest_sent = self.next_psn
        return psn, False

    def rewind(self) -> bool:
        """Go back to the cumulative ack.  False when already there."""
        if self.next_psn == self.snd_una:
            return False
        self.next_psn = self.snd_una
        return True

    def receive_ack(self, ack: Ack) -> AckOutcome:
        cum = ack.cumulative
        if cum != self.snd_una and not seq_gt(cum, self.snd_una):
            return AckOutcome(0, False, False, True)
        if seq_gt(cum, self.highest_sent):
            raise WindowViolation(f"ack {cum} beyond highest sent {self.highest_sent}")
        acked = seq_diff(cum, self.snd_una)
        if acked:
            self.snd_una = cum
            if seq_gt(self.snd_una, self.next_psn):
                # The ack covers part of a rewound tail already re-sent.
                self.next_psn = self.snd_una
        entered = False
        if ack.is_nack:
            entered = self.rewind()
        return AckOutcome(acked, entered, False, False)

    def timeout_fired(self) -> bool:
        """Rewind everything in flight; returns True when armed work remains."""
        if self.in_flight() == 0:
            return False
        self.rewind()
        return True


class GbnReceiver:
    """Accepts in-order only; NACKs once per gap episode."""

    __slots__ = ("expected_psn", "nak_pending", "delivered")

    def __init__(self, first_psn: int = 0):
        self.expected_psn = first_psn
        self.nak_pending = False
        self.delivered = 0

    def receive_data(self, psn: int):
        """Returns the ack to send, or None when staying silent."""
        if psn == self.expected_psn:
            self.expected_psn = seq_add(psn, 1)
            self.delivered += 1
            self.nak_pending = False
            return Ack(False, self.expected_psn)
        if seq_gt(self.expected_psn, psn):
            # Duplicate of delivered data: refresh the sender.
            return Ack(False, self.expected_psn)
        if self.nak_pending:
            return None
        self.nak_pending = True
        return Ack(True, self.expected_psn, sacked=psn)
