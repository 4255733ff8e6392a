"""Clock skew from the fractional-interval trajectory.

At ``N`` nominal samples per symbol the interpolation instant drifts by
``m`` samples per symbol, so the receiver effectively takes ``N + m``
samples per symbol and the sampling rate is ``f_s = (N + m) f_d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError, SingularFitError
from .timing_recovery import FractionalIntervalTrace, LoopConfig

Method = Literal["slope", "least_squares", "app_counts"]

# leading share of the trace treated as acquisition transient
ACQUISITION_FRACTION = 0.2
MIN_FIT_SYMBOLS = 500


@dataclass(frozen=True)
class SkewEstimate:
    s_hat: float
    method: Method
    slope: float = 0.0
    intercept: float = 0.0
    residual_rms: float = 0.0
    n_points: int = 0

    def __post_init__(self) -> None:
        if not abs(self.s_hat) < 0.1:
            raise InvalidArgumentError(f"implausible skew estimate {self.s_hat}")
        if self.residual_rms < 0:
            raise InvalidArgumentError("residual_rms must be non-negative")


def unwrap_mu(trace: FractionalIntervalTrace | Iterable[float]) -> np.ndarray:
    """Remove the mod-1 wraps so successive differences lie in (-0.5, 0.5]."""
    mu = np.asarray(trace.mu_raw if isinstance(trace, FractionalIntervalTrace) else list(trace),
                    dtype=float)
    if mu.size == 0:
        raise InsufficientDataError("empty trace")
    d = np.diff(mu)
    wraps = np.zeros_like(d)
    wraps[d > 0.5] = -1.0
    wraps[d <= -0.5] = 1.0
    return mu + np.concatenate(([0.0], np.cumsum(wraps)))


def ls_fit(points) -> tuple[float, float, float]:
    """Least-squares line ``y = m x + c`` through ``points``.

    Solves the normal equations on mean-centred data. Returns
    ``(m, c, residual_rms)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise InvalidArgumentError("need at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    x_bar, y_bar = x.mean(), y.mean()
    dx, dy = x - x_bar, y - y_bar
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0 or np.all(x == x[0]):
        raise SingularFitError("all x values identical")
    m = float(np.dot(dx, dy)) / sxx
    c = y_bar - m * x_bar
    resid = y - (m * x + c)
    return m, float(c), float(np.sqrt(np.mean(resid**2)))


def skew_from_slope(m: float, N: int = 2) -> float:
    """Skew implied by a fractional-interval slope of ``m`` samples per symbol."""
    if N < 2:
        raise InvalidArgumentError(f"N must be >= 2, got {N}")
    if not abs(m) < N:
        raise InvalidArgumentError(f"|slope| must be below N={N}, got {m}")
    delta = m / N
    return -delta / (1.0 + delta)


def estimate_physical_skew(trace: FractionalIntervalTrace, cfg: LoopConfig,
                           method: Method = "least_squares",
                           acquisition_fraction: float = ACQUISITION_FRACTION) -> SkewEstimate:
    """Skew from the post-acquisition fractional-interval trajectory.

    ``method="least_squares"`` fits a line to every retained point;
    ``method="slope"`` uses the end-to-end slope of the unwrapped trace.
    """
    if method not in ("least_squares", "slope"):
        raise InvalidArgumentError(f"unsupported method {method!r}")
    mu = unwrap_mu(trace)
    start = int(len(mu) * acquisition_fraction)
    k = np.asarray(trace.k[start:], dtype=float)
    if len(k) < MIN_FIT_SYMBOLS:
        raise InsufficientDataError(
            f"{len(k)} post-acquisition symbols, need at least {MIN_FIT_SYMBOLS}")
    pts = np.column_stack((k, mu[start:]))
    if method == "slope":
        m, c, _ = ls_fit(pts[[0, -1]])
        rms = float(np.sqrt(np.mean((pts[:, 1] - (m * pts[:, 0] + c)) ** 2)))
    else:
        m, c, rms = ls_fit(pts)
    return SkewEstimate(s_hat=skew_from_slope(m, cfg.N), method=method,
                        slope=m, intercept=c, residual_rms=rms, n_points=len(k))
