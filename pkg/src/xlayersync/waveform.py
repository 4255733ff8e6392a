"""Binary PAM transmit chain and a skewed receiver front end.

The receive stream is produced by evaluating the continuous square-root
raised-cosine pulse train at the receiver's own sampling instants, so an
injected clock skew reaches the timing loop without any resampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

SKEW_LIMIT = 0.1

# |4*beta*t| closer than this to 1 is treated as the removable singularity
_SINGULAR_EPS = 1e-9


@dataclass(frozen=True)
class SymbolSequence:
    symbols: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if len(self.symbols) == 0:
            raise InvalidArgumentError("symbol sequence must be non-empty")
        if not np.all(np.abs(self.symbols) == 1.0):
            raise InvalidArgumentError("symbols must be exactly -1 or +1")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class FilterTaps:
    taps: np.ndarray
    samples_per_symbol: int
    rolloff: float
    span_symbols: int

    @property
    def delay(self) -> int:
        """Group delay in samples."""
        return (len(self.taps) - 1) // 2


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: float
    # accumulated filter group delay, in samples of this waveform
    group_delay: int = 0

    def __post_init__(self) -> None:
        if not self.sample_rate > 0:
            raise InvalidArgumentError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("waveform samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SkewSpec:
    """Signed dimensionless skew; ``s < 0`` means the receiver clock is fast."""

    s: float = 0.0

    def __post_init__(self) -> None:
        if not abs(self.s) < SKEW_LIMIT:
            raise InvalidArgumentError(f"|skew| must be below {SKEW_LIMIT}, got {self.s}")

    @property
    def delta(self) -> float:
        """Fractional excess of the receiver sampling rate, -s/(1+s)."""
        return -self.s / (1.0 + self.s)


@dataclass(frozen=True)
class WaveformConfig:
    symbol_rate: float = 1000.0
    rolloff: float = 0.5
    span_symbols: int = 12
    tx_samples_per_symbol: int = 8
    rx_samples_per_symbol: int = 2
    n_symbols: int = 5000
    seed: int = 1


def generate_symbols(n: int, seed: int) -> SymbolSequence:
    if n <= 0:
        raise InvalidArgumentError(f"need at least one symbol, got n={n}")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=n)
    return SymbolSequence(symbols=2.0 * bits - 1.0, seed=seed)


def srrc_pulse(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Unit-energy SRRC impulse response at times ``t`` given in symbol periods."""
    t = np.asarray(t, dtype=float)
    b = rolloff
    out = np.empty_like(t)

    at_zero = np.abs(t) < 1e-12
    at_sing = np.abs(np.abs(4.0 * b * t) - 1.0) < _SINGULAR_EPS
    regular = ~(at_zero | at_sing)

    out[at_zero] = 1.0 - b + 4.0 * b / math.pi
    out[at_sing] = (b / math.sqrt(2.0)) * (
        (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * b))
        + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * b))
    )
    tr = t[regular]
    num = np.sin(math.pi * tr * (1.0 - b)) + 4.0 * b * tr * np.cos(math.pi * tr * (1.0 + b))
    den = math.pi * tr * (1.0 - (4.0 * b * tr) ** 2)
    out[regular] = num / den
    return out


def _srrc_norm(rolloff: float, span_symbols: int, samples_per_symbol: int) -> float:
    n = np.arange(-span_symbols * samples_per_symbol // 2, span_symbols * samples_per_symbol // 2 + 1)
    raw = srrc_pulse(n / samples_per_symbol, rolloff)
    return float(np.sqrt(np.sum(raw**2)))


def srrc_taps(rolloff: float, span_symbols: int, samples_per_symbol: int) -> FilterTaps:
    """Square-root raised-cosine taps normalized to unit energy."""
    if not 0.0 < rolloff <= 1.0:
        raise InvalidArgumentError(f"rolloff must lie in (0, 1], got {rolloff}")
    if span_symbols <= 0 or span_symbols % 2:
        raise InvalidArgumentError(f"span_symbols must be even and positive, got {span_symbols}")
    if samples_per_symbol < 2:
        raise InvalidArgumentError(f"samples_per_symbol must be >= 2, got {samples_per_symbol}")

    half = span_symbols * samples_per_symbol // 2
    n = np.arange(-half, half + 1)
    taps = srrc_pulse(n / samples_per_symbol, rolloff)
    taps /= np.sqrt(np.sum(taps**2))
    return FilterTaps(taps, samples_per_symbol, rolloff, span_symbols)


def shape_pulse(sym: SymbolSequence, taps: FilterTaps, symbol_rate: float = 1000.0) -> Waveform:
    """Zero-stuff the symbols by N and convolve with the shaping taps."""
    n_sps = taps.samples_per_symbol
    up = np.zeros((len(sym) - 1) * n_sps + 1)
    up[::n_sps] = sym.symbols
    return Waveform(np.convolve(up, taps.taps), n_sps * symbol_rate, group_delay=taps.delay)


def sample_with_skew(
    sym: SymbolSequence,
    taps: FilterTaps,
    skew: SkewSpec,
    n_rx_per_symbol: int,
    symbol_rate: float = 1000.0,
) -> Waveform:
    """Sample the transmitted pulse train with a receiver clock carrying ``skew``.

    Time zero is the first sample of :func:`shape_pulse`'s output, so symbol
    ``j`` is centred at ``j + span/2`` symbol periods. Instants are
    ``t_k = k / (n_rx (1 + delta))`` for every ``t_k`` inside the
    ``len(sym)``-symbol observation window. With zero skew and ``n_rx``
    dividing ``taps.samples_per_symbol`` the result coincides with the
    decimated :func:`shape_pulse` output.
    """
    if n_rx_per_symbol < 2:
        raise InvalidArgumentError(f"n_rx_per_symbol must be >= 2, got {n_rx_per_symbol}")
    n_sym = len(sym)
    span = taps.span_symbols
    rate = n_rx_per_symbol * (1.0 + skew.delta)  # receiver samples per transmit symbol

    n_samples = math.ceil(n_sym * rate)
    if (n_samples - 1) / rate >= n_sym:
        n_samples -= 1
    t = np.arange(n_samples) / rate

    # each instant sees the span+1 nearest symbol pulses (plus one for edges)
    j0 = np.floor(t).astype(np.int64) - span
    j = j0[:, None] + np.arange(span + 2)[None, :]
    arg = t[:, None] - j - span / 2.0
    live = (j >= 0) & (j < n_sym) & (np.abs(arg) <= span / 2.0 + 1e-12)

    scale = 1.0 / _srrc_norm(taps.rolloff, span, taps.samples_per_symbol)
    pulse = srrc_pulse(np.where(live, arg, 0.0).ravel(), taps.rolloff).reshape(arg.shape)
    amps = sym.symbols[np.clip(j, 0, n_sym - 1)]
    samples = np.sum(np.where(live, amps * pulse, 0.0), axis=1) * scale
    return Waveform(samples, n_rx_per_symbol * symbol_rate, group_delay=0)


def matched_filter(w: Waveform, taps: FilterTaps) -> Waveform:
    """Convolve with the (symmetric) taps; group delay accumulates on the output."""
    return Waveform(np.convolve(w.samples, taps.taps), w.sample_rate, w.group_delay + taps.delay)


def receive(sym: SymbolSequence, skew: SkewSpec, cfg: WaveformConfig) -> Waveform:
    """Full receiver front end: skewed sampling at the loop rate, then matched filter.

    The transmit pulse is defined by the ``tx_samples_per_symbol`` taps; the
    matched filter runs at ``rx_samples_per_symbol``. Output is rescaled so an
    isolated symbol peaks at its amplitude.
    """
    tx = srrc_taps(cfg.rolloff, cfg.span_symbols, cfg.tx_samples_per_symbol)
    rx = srrc_taps(cfg.rolloff, cfg.span_symbols, cfg.rx_samples_per_symbol)
    raw = sample_with_skew(sym, tx, skew, cfg.rx_samples_per_symbol, cfg.symbol_rate)
    mf = matched_filter(raw, rx)
    gain = _srrc_norm(cfg.rolloff, cfg.span_symbols, cfg.tx_samples_per_symbol) / _srrc_norm(
        cfg.rolloff, cfg.span_symbols, cfg.rx_samples_per_symbol
    )
    return Waveform(mf.samples * gain, mf.sample_rate, mf.group_delay)
