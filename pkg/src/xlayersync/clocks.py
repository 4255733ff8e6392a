"""Quartz-driven application-layer clocks and cross-layer skew correction.

A node's application clock counts oscillator cycles. Its oscillator runs at
``f_nominal * (1 - s)``; negative skew means a fast oscillator, the same
convention the physical-layer estimate uses, so a PHY estimate can be
applied to the application clock directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import ImplausibleSkewError, InvalidArgumentError, SingularFitError
from .skew_estimation import SkewEstimate, ls_fit

SKEW_LIMIT = 0.1
# guards floor() against products like 99874.99999999999
_COUNT_EPS = 1e-9


@dataclass(frozen=True)
class OscillatorModel:
    f_nominal: float
    s: float = 0.0

    def __post_init__(self) -> None:
        if not self.f_nominal > 0:
            raise InvalidArgumentError("f_nominal must be positive")
        if not abs(self.s) < SKEW_LIMIT:
            raise InvalidArgumentError(f"|s| must be below {SKEW_LIMIT}, got {self.s}")

    @property
    def frequency(self) -> float:
        return self.f_nominal * (1.0 - self.s)


@dataclass(frozen=True)
class AppClock:
    osc: OscillatorModel
    cycles_per_count: int = 1
    count: int = 0
    rate_correction: float = 1.0
    phase_offset: float = 0.0  # seconds added to the corrected reading

    def __post_init__(self) -> None:
        if self.cycles_per_count < 1:
            raise InvalidArgumentError("cycles_per_count must be >= 1")
        if not self.rate_correction > 0:
            raise InvalidArgumentError("rate_correction must be positive")
        if self.count < 0:
            raise InvalidArgumentError("count must be non-negative")

    @property
    def count_rate(self) -> float:
        """Nominal counts per second."""
        return self.osc.f_nominal / self.cycles_per_count

    @property
    def quantum(self) -> float:
        """Duration of one count at the nominal rate, seconds."""
        return 1.0 / self.count_rate

    def raw_time(self, t: float) -> float:
        """Uncorrected oscillator time at true time ``t`` (clock started at t=0)."""
        return t * (1.0 - self.osc.s)

    def read(self, t: float) -> float:
        """Corrected clock reading in seconds at true time ``t``."""
        return self.phase_offset + self.raw_time(t) * self.rate_correction

    def count_at(self, t: float) -> int:
        return _floor_count(self.read(t) * self.count_rate)

    def time_of_count(self, n: int) -> float:
        """True time at which the clock reaches count ``n``."""
        return (n / self.count_rate - self.phase_offset) / ((1.0 - self.osc.s) * self.rate_correction)


@dataclass(frozen=True)
class TimestampMsg:
    sender_count: int
    sender_id: int
    send_time_true: float  # simulation ground truth

    def __post_init__(self) -> None:
        if self.sender_count < 0:
            raise InvalidArgumentError("sender_count must be non-negative")


def _floor_count(x: float) -> int:
    return math.floor(x + _COUNT_EPS)


def run_app_clock(clock: AppClock, duration: float) -> int:
    """Count reached after ``duration`` seconds of free running."""
    if not duration > 0:
        raise InvalidArgumentError("duration must be positive")
    f = clock.osc.frequency
    return _floor_count(duration * f * clock.rate_correction / clock.cycles_per_count)


def app_skew_from_counts(c_tx: int, c_rx: int) -> float:
    """Skew of the receiver from two counts taken over the same interval.

    ``(c_tx - 1) / (c_rx - 1) - 1``: negative when the receiver counted more.
    """
    if c_rx <= 1:
        raise InvalidArgumentError(f"receiver count must exceed 1, got {c_rx}")
    if c_tx < 2:
        raise InvalidArgumentError(f"transmitter count must be >= 2, got {c_tx}")
    return (c_tx - 1) / (c_rx - 1) - 1.0


def ls_skew_from_timestamps(pairs: Sequence[tuple[float, float]]) -> SkewEstimate:
    """Least-squares skew of the local clock from ``(local_count, remote_count)`` pairs.

    Fits local against remote; the local clock advances ``1 - s`` counts per
    remote count, so ``s = 1 - slope``.
    """
    if len(pairs) < 2:
        raise InvalidArgumentError("need at least two timestamp pairs")
    remote = [float(r) for _, r in pairs]
    if len(set(remote)) < 2:
        raise SingularFitError("remote counts must not all be equal")
    m, c, rms = ls_fit([(r, float(loc)) for loc, r in pairs])
    return SkewEstimate(s_hat=1.0 - m, method="app_counts", slope=m, intercept=c,
                        residual_rms=rms, n_points=len(pairs))


def make_timestamp(clock: AppClock, t: float, sender_id: int) -> TimestampMsg:
    """Timestamp sent on the first count tick at or after true time ``t``."""
    n = math.ceil(clock.read(t) * clock.count_rate - _COUNT_EPS)
    return TimestampMsg(sender_count=n, sender_id=sender_id, send_time_true=clock.time_of_count(n))


def apply_cross_layer_correction(clock: AppClock, phy: SkewEstimate, ts: TimestampMsg,
                                 delay: float = 0.0, reference_rate: float = 1.0) -> AppClock:
    """Slew the clock rate by the PHY skew estimate and set phase from one timestamp.

    ``reference_rate`` is the sender's own corrected rate factor relative to
    its oscillator; it is 1 for a master and lets corrections chain down a
    tree. ``delay`` is the (known) propagation latency of the timestamp.
    """
    if phy.method not in ("slope", "least_squares"):
        raise InvalidArgumentError(f"cross-layer correction needs a PHY estimate, got {phy.method!r}")
    if not abs(phy.s_hat) < SKEW_LIMIT:
        raise ImplausibleSkewError(f"skew estimate {phy.s_hat} out of range")
    return slew_clock(clock, reference_rate / (1.0 - phy.s_hat), ts, delay)


def slew_clock(clock: AppClock, rate_correction: float, ts: TimestampMsg,
               delay: float = 0.0) -> AppClock:
    """Set a new rate multiplier and align the reading to ``ts`` at its receipt."""
    t_rx = ts.send_time_true + delay
    remote_reading = ts.sender_count / clock.count_rate + delay
    phase = remote_reading - clock.raw_time(t_rx) * rate_correction
    return replace(clock, rate_correction=rate_correction, phase_offset=phase,
                   count=max(clock.count, ts.sender_count))


def clock_offset_between(a: AppClock, b: AppClock, t: float, quantized: bool = False) -> float:
    """``a``'s reading minus ``b``'s at true time ``t``, in seconds."""
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if quantized:
        return a.count_at(t) * a.quantum - b.count_at(t) * b.quantum
    return a.read(t) - b.read(t)
