"""Symbol timing PLL.

Piecewise-parabolic (Farrow) interpolator, zero-crossing timing error
detector, proportional-plus-integral loop filter and a decrementing mod-1
counter for interpolation control. The loop runs once per input sample and
produces one record per recovered symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, DivergenceError, InvalidArgumentError
from .waveform import Waveform

# Measured slope of the mean ZCTED output per sample of timing advance at
# 2 samples/symbol, 50% SRRC (see tests/test_timing_recovery.py::test_kp_calibration).
DEFAULT_KP = 1.6

# A decrementing counter underflows later when its step shrinks, so a
# positive filter output must reduce the step.
COUNTER_GAIN = -1.0


@dataclass(frozen=True)
class LoopConfig:
    K1: float
    K2: float
    N: int = 2
    alpha: float = 0.5
    kp: float = DEFAULT_KP

    def __post_init__(self) -> None:
        if not self.K1 > 0:
            raise InvalidArgumentError(f"K1 must be positive, got {self.K1}")
        if not self.K2 >= 0:
            raise InvalidArgumentError(f"K2 must be non-negative, got {self.K2}")
        if self.N < 2:
            raise InvalidArgumentError(f"N must be >= 2, got {self.N}")
        if not 0 < self.alpha <= 1:
            raise InvalidArgumentError(f"alpha must lie in (0, 1], got {self.alpha}")

    @classmethod
    def design(cls, bn_t: float = 0.01, zeta: float = 1.0, kp: float = DEFAULT_KP,
               N: int = 2, alpha: float = 0.5) -> LoopConfig:
        K1, K2 = design_loop_gains(bn_t, zeta, kp, N)
        return cls(K1=K1, K2=K2, N=N, alpha=alpha, kp=kp)


@dataclass
class TimingLoopState:
    m: int = 0
    mu: float = 0.0
    eta: float = 0.0
    vi: float = 0.0
    last_decision: float = 1.0


@dataclass
class FractionalIntervalTrace:
    k: np.ndarray
    mu_raw: np.ndarray
    timing_error: np.ndarray
    decision: np.ndarray
    # diagnostics, not part of the per-symbol record
    n_input_samples: int = 0
    strobe_sample: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    eta_min: float = 0.0
    eta_max: float = 0.0

    def __len__(self) -> int:
        return len(self.k)


def farrow_coefficients(mu: float, alpha: float = 0.5) -> tuple[float, float, float, float]:
    """Piecewise-parabolic weights for x(m+2), x(m+1), x(m), x(m-1)."""
    amu2 = alpha * mu * mu
    c_m2 = amu2 - alpha * mu
    c_m1 = -amu2 + (1.0 + alpha) * mu
    c_0 = -amu2 + (alpha - 1.0) * mu + 1.0
    c_1 = amu2 - alpha * mu
    return c_m2, c_m1, c_0, c_1


def interpolate(samples: Waveform | np.ndarray, m: int, mu: float, alpha: float = 0.5) -> float:
    """Interpolant at fractional position ``m + mu``."""
    x = samples.samples if isinstance(samples, Waveform) else samples
    if m - 1 < 0 or m + 2 >= len(x):
        raise BoundsError(f"basepoint {m} needs samples {m - 1}..{m + 2} of {len(x)}")
    c_m2, c_m1, c_0, c_1 = farrow_coefficients(mu, alpha)
    return c_m2 * x[m + 2] + c_m1 * x[m + 1] + c_0 * x[m] + c_1 * x[m - 1]


def ted_zero_crossing(mid_sample: float, prev_dec: float, curr_dec: float) -> float:
    return mid_sample * (prev_dec - curr_dec)


def loop_filter_step(state: TimingLoopState, e: float, cfg: LoopConfig) -> float:
    state.vi += cfg.K2 * e
    return cfg.K1 * e + state.vi


def interp_control_step(state: TimingLoopState, v: float, cfg: LoopConfig) -> tuple[bool, int, float]:
    """Advance the mod-1 counter by one input sample.

    Returns ``(strobe, m, mu)``: on a strobe the interpolation instant is
    ``m + mu`` with ``m`` the sample just consumed. ``state.m`` moves on by one.
    """
    W = 1.0 / cfg.N + COUNTER_GAIN * v
    if not W > 0:
        raise DivergenceError(f"counter step W={W} at sample {state.m}")
    base = state.m
    strobe = state.eta < W
    if strobe:
        state.mu = state.eta / W
    state.eta = (state.eta - W) % 1.0
    state.m = base + 1
    return strobe, base, state.mu


def design_loop_gains(bn_t: float, zeta: float, kp: float, N: int) -> tuple[float, float]:
    """Proportional and integral gains of a second-order loop (K1, K2)."""
    if not (bn_t > 0 and zeta > 0 and kp > 0):
        raise InvalidArgumentError("bn_t, zeta and kp must be positive")
    theta = bn_t / (zeta + 1.0 / (4.0 * zeta))
    delta = 1.0 + 2.0 * zeta * theta + theta * theta
    K1 = (4.0 * zeta * theta / delta) / (kp * N)
    K2 = (4.0 * theta * theta / delta) / (kp * N)
    return K1, K2


def _decide(y: float) -> float:
    return 1.0 if y >= 0.0 else -1.0


def _interp_at(x: np.ndarray, t: float, alpha: float) -> float:
    m = math.floor(t)
    return interpolate(x, m, t - m, alpha)


def run_timing_loop(rx: Waveform, cfg: LoopConfig, seed: int = 0,
                    start: int | None = None) -> FractionalIntervalTrace:
    """Recover symbol timing from a matched-filter output stream.

    The counter and fractional interval start at seeded random values.
    ``start`` defaults to the accumulated filter delay of ``rx`` so the loop
    does not lock onto the start-up transient.
    """
    x = np.asarray(rx.samples, dtype=float)
    lo = max(2, rx.group_delay if start is None else start)
    hi = len(x) - 3
    if (hi - lo) < 100 * cfg.N:
        raise InvalidArgumentError(f"need at least 100 symbols of input, got {hi - lo} samples")

    rng = np.random.default_rng(seed)
    state = TimingLoopState(m=lo, mu=float(rng.random()), eta=float(rng.random()))

    ks: list[int] = []
    mus: list[float] = []
    errs: list[float] = []
    decs: list[float] = []
    strobes: list[int] = []
    eta_min = eta_max = state.eta

    v = 0.0
    t_prev = None
    while state.m < hi:
        strobe, base, mu = interp_control_step(state, v, cfg)
        eta_min = min(eta_min, state.eta)
        eta_max = max(eta_max, state.eta)
        e = 0.0
        if strobe:
            t_now = base + mu
            dec = _decide(interpolate(x, base, mu, cfg.alpha))
            if t_prev is not None and math.floor((t_prev + t_now) / 2.0) >= 1:
                mid = _interp_at(x, (t_prev + t_now) / 2.0, cfg.alpha)
                e = ted_zero_crossing(mid, state.last_decision, dec)
            state.last_decision = dec
            t_prev = t_now
            ks.append(len(ks))
            mus.append(mu)
            errs.append(e)
            decs.append(dec)
            strobes.append(base)
        v = loop_filter_step(state, e, cfg)

    return FractionalIntervalTrace(
        k=np.asarray(ks, dtype=np.int64),
        mu_raw=np.asarray(mus),
        timing_error=np.asarray(errs),
        decision=np.asarray(decs),
        n_input_samples=hi - lo,
        strobe_sample=np.asarray(strobes, dtype=np.int64),
        eta_min=eta_min,
        eta_max=eta_max,
    )
