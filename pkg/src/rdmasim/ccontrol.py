"""Congestion control plug-ins for the sender side.

The transports run without congestion control by default (flows start
at line rate and only the in-flight cap throttles them).  An optional
AIMD window can sit on top: it gates admission of new packets, grows
one packet per window of acknowledgments, and halves once per loss
episode.  Rate-based schemes register here as named stubs so configs
can reference them, but they are interfaces only.
"""

from __future__ import annotations


class CongestionControl:
    """Admission gate consulted before each new (non-retransmit) packet."""

    def allow_send(self, in_flight: int) -> bool:
        raise NotImplementedError

    def on_ack(self, newly_acked: int) -> None:
        pass

    def on_loss(self) -> None:
        pass

    def window(self) -> float:
        raise NotImplementedError


class NoCc(CongestionControl):
    """No additional gating: the bandwidth-delay cap is the only limit."""

    def __init__(self, bdp_cap: int = 0, **_params):
        self.bdp_cap = bdp_cap

    def allow_send(self, in_flight: int) -> bool:
        return True

    def window(self) -> float:
        return float("inf")


class AimdWindow(CongestionControl):
    """Additive-increase, multiplicative-decrease window in packets.

    Increase credits accumulate per acknowledged packet and convert to
    one extra window slot per full window, the classic +1 per RTT.  A
    loss episode halves the window once, floored at one packet.  The
    effective limit never exceeds the bandwidth-delay cap.
    """

    def __init__(self, bdp_cap: int, start_cwnd: float | None = None,
                 slow_start: bool = False, **_params):
        if bdp_cap < 1:
            raise ValueError("bdp_cap must be at least 1")
        self.bdp_cap = bdp_cap
        self.slow_start = slow_start
        if start_cwnd is None:
            start_cwnd = 1.0 if slow_start else float(bdp_cap)
        self.cwnd = float(start_cwnd)
        self._credit = 0.0
        self._in_slow_start = slow_start

    def allow_send(self, in_flight: int) -> bool:
        return in_flight < min(self.cwnd, self.bdp_cap)

    def on_ack(self, newly_acked: int) -> None:
        if self._in_slow_start:
            self.cwnd = min(self.cwnd + newly_acked, float(self.bdp_cap))
            return
        self._credit += newly_acked
        while self._credit >= self.cwnd:
            self._credit -= self.cwnd
            self.cwnd += 1.0

    def on_loss(self) -> None:
        self._in_slow_start = False
        self.cwnd = max(1.0, self.cwnd / 2.0)
        self._credit = 0.0

    def window(self) -> float:
        return min(self.cwnd, self.bdp_cap)


class _RateStub(CongestionControl):
    scheme = "stub"

    def __init__(self, *_args, **_kwargs):
        raise NotImplementedError(
            f"{self.scheme} is an interface stub; only its registry entry exists")


class DcqcnStub(_RateStub):
    scheme = "dcqcn"


class TimelyStub(_RateStub):
    scheme = "timely"


SCHEMES = {
    "none": NoCc,
    "aimd": AimdWindow,
    "dcqcn": DcqcnStub,
    "timely": TimelyStub,
}


def make(scheme: str, bdp_cap: int, **params) -> CongestionControl:
    try:
        cls = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown congestion control scheme {scheme!r}; "
                         f"known: {sorted(SCHEMES)}") from None
    return cls(bdp_cap=bdp_cap, **params)
