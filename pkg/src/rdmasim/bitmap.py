"""Ring-buffer bitmaps over a 24-bit packet sequence space.

One structure backs both ends of the transport: the receiver tracks
out-of-order arrivals in it (with extra flag planes for delivery
bookkeeping) and the sender tracks selectively-acknowledged packets.
All sequence arithmetic wraps modulo 2**24; window membership is the
forward distance from the bitmap head.
"""

from __future__ import annotations

PSN_BITS = 24
PSN_SPACE = 1 << PSN_BITS
PSN_MASK = PSN_SPACE - 1
_SERIAL_HALF = PSN_SPACE >> 1


def seq_add(seq: int, n: int) -> int:
    return (seq + n) & PSN_MASK


def seq_diff(a: int, b: int) -> int:
    """Forward distance from b to a, in [0, 2**24)."""
    return (a - b) & PSN_MASK


def seq_gt(a: int, b: int) -> bool:
    """Serial comparison: a is ahead of b by less than half the space."""
    return a != b and ((a - b) & PSN_MASK) < _SERIAL_HALF


def seq_ge(a: int, b: int) -> bool:
    return a == b or seq_gt(a, b)


class WindowViolation(Exception):
    """Sequence outside [head, head + capacity): a protocol bug upstream."""


class SeqBitmap:
    """Bit-per-sequence ring buffer with optional per-index flag planes.

    Bit i of ``bits`` tracks sequence ``head_seq + i``.  The head only
    moves forward: ``advance`` slides it to the first hole, ``slide_to``
    releases an explicit prefix (the sender side does this when the
    cumulative acknowledgment moves).  Both are plain right shifts, and
    the first-hole scan is a find-first-zero, so every operation is one
    or two big-int primitives.
    """

    __slots__ = ("head_seq", "capacity", "bits", "planes")

    def __init__(self, capacity: int, head_seq: int = 0, planes: int = 0):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        # Word-align so chunked hardware-style scans stay uniform.
        self.capacity = (capacity + 63) // 64 * 64
        self.head_seq = head_seq & PSN_MASK
        self.bits = 0
        self.planes = [0] * planes

    def _index(self, seq: int) -> int:
        idx = (seq - self.head_seq) & PSN_MASK
        if idx >= self.capacity:
            raise WindowViolation(
                f"seq {seq} outside window [{self.head_seq}, +{self.capacity})")
        return idx

    def contains(self, seq: int) -> bool:
        return (seq - self.head_seq) & PSN_MASK < self.capacity

    def is_marked(self, seq: int) -> bool:
        return (self.bits >> self._index(seq)) & 1 == 1

    def mark(self, seq: int, flags: tuple = ()) -> bool:
        """Set the bit for seq.  Returns False when it was already set."""
        idx = self._index(seq)
        bit = 1 << idx
        fresh = not (self.bits & bit)
        self.bits |= bit
        for p, flag in enumerate(flags):
            if flag:
                self.planes[p] |= bit
        return fresh

    def first_unset_index(self, start: int = 0) -> int:
        """Index of the first clear bit at or above start; capacity if none."""
        shifted = self.bits >> start
        low_zero = (~shifted & (shifted + 1)).bit_length() - 1
        return min(start + low_zero, self.capacity)

    def first_unset(self) -> int:
        return seq_add(self.head_seq, self.first_unset_index())

    def highest_set_index(self) -> int:
        """Index of the highest set bit, -1 when empty."""
        return self.bits.bit_length() - 1

    def popcount(self) -> int:
        return self.bits.bit_count()

    def advance(self) -> tuple[int, tuple[int, ...]]:
        """Slide the head to the first hole.

        Returns the number of consumed (set) bits and, per flag plane,
        how many of the consumed bits carried that flag.
        """
        n = self.first_unset_index(0)
        if n == 0:
            return 0, (0,) * len(self.planes)
        mask = (1 << n) - 1
        counts = tuple((p & mask).bit_count() for p in self.planes)
        self.bits >>= n
        for i in range(len(self.planes)):
            self.planes[i] >>= n
        self.head_seq = seq_add(self.head_seq, n)
        return n, counts

    def slide_to(self, seq: int) -> int:
        """Move the head forward to seq, discarding bits below it.

        Used by the sender when a cumulative acknowledgment releases a
        prefix regardless of which of those bits were selectively set.
        Returns the number of positions released.
        """
        n = (seq - self.head_seq) & PSN_MASK
        if n == 0:
            return 0
        if n > self.capacity:
            raise WindowViolation(
                f"slide_to {seq} skips past window [{self.head_seq}, +{self.capacity})")
        self.bits >>= n
        for i in range(len(self.planes)):
            self.planes[i] >>= n
        self.head_seq = seq & PSN_MASK
        return n
