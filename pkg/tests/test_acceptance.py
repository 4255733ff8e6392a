"""Acceptance gate. Each test records a PASS/FAIL line shown at the end of the run."""

import time

import numpy as np
import pytest

from _oracles import normal_equation_fit, ted_s_curve
from xlayersync.clocks import AppClock, OscillatorModel, app_skew_from_counts, run_app_clock
from xlayersync.crn_harness import EnergyLedger, Node, run_pair_sync_baseline, run_pair_sync_crosslayer
from xlayersync.scenario import parse_config, run_scenario
from xlayersync.skew_estimation import estimate_physical_skew, ls_fit
from xlayersync.timing_recovery import LoopConfig, interpolate, run_timing_loop
from xlayersync.waveform import SkewSpec, WaveformConfig, generate_symbols, receive

pytestmark = pytest.mark.acceptance

LOOP = LoopConfig.design()
MATRIX = [0.0, 5e-4, -5e-4, 1.25e-3, -1.25e-3, 5e-3, -5e-3]


def estimate(s, n_symbols=5000, seed=1):
    cfg = WaveformConfig(n_symbols=n_symbols, symbol_rate=1000.0, seed=seed)
    trace = run_timing_loop(receive(generate_symbols(n_symbols, seed), SkewSpec(s), cfg), LOOP)
    return trace, estimate_physical_skew(trace, LOOP)


def app_estimate(s):
    c_tx = run_app_clock(AppClock(OscillatorModel(200.0, 0.0)), 500.0)
    c_rx = run_app_clock(AppClock(OscillatorModel(200.0, s)), 500.0)
    return app_skew_from_counts(c_tx, c_rx)


def test_ac1_negative_skew(criterion):
    s = -1.2484e-3
    t0 = time.perf_counter()
    _, est = estimate(s)
    elapsed = time.perf_counter() - t0
    err = abs(est.s_hat - s)
    ok = err <= 1.0e-5 and elapsed < 5.0
    criterion("AC1 negative skew", ok, f"s_hat={est.s_hat:.6e} |err|={err:.2e} (<=1e-5), {elapsed:.2f}s (<5s)")
    assert err <= 1.0e-5
    assert elapsed < 5.0


def test_ac2_positive_skew(criterion):
    s = 1.25e-3
    _, est = estimate(s)
    err = abs(est.s_hat - s)
    criterion("AC2 positive skew", err <= 1.0e-5, f"s_hat={est.s_hat:.6e} |err|={err:.2e} (<=1e-5)")
    assert err <= 1.0e-5


def test_ac3_app_clock_counts(criterion):
    counts = {s: run_app_clock(AppClock(OscillatorModel(200.0, s)), 500.0) for s in (0.0, -1.2484e-3, 1.25e-3)}
    neg = app_skew_from_counts(100000, 100124)
    pos = app_skew_from_counts(100000, 99875)
    ok_counts = counts == {0.0: 100000, -1.2484e-3: 100124, 1.25e-3: 99875}
    # printed values carry 5 significant digits; the exact quotients agree at 9
    ok_skew = (float(f"{neg:.4e}") == -1.2385e-3 and float(f"{pos:.4e}") == 1.2516e-3
               and f"{neg:.8e}" == f"{-124 / 100123:.8e}" and f"{pos:.8e}" == f"{125 / 99874:.8e}")
    criterion("AC3 app-clock counts", ok_counts and ok_skew,
              f"counts={sorted(counts.values())} skews={neg:.8e},{pos:.8e}")
    assert ok_counts
    assert ok_skew


@pytest.mark.parametrize("s", [-1.2484e-3, 1.25e-3])
def test_ac4_cross_layer_agreement(criterion, s):
    _, est = estimate(s)
    diff = abs(est.s_hat - app_estimate(s))
    criterion(f"AC4 cross-layer agreement s={s:+.4e}", diff <= 2.0e-5, f"|phy-app|={diff:.2e} (<=2e-5)")
    assert diff <= 2.0e-5


def test_ac5_one_timestamp(criterion):
    lx, lb = EnergyLedger(), EnergyLedger()
    x = run_pair_sync_crosslayer(Node.with_skew(0, 0.0), Node.with_skew(1, -1.2484e-3, level=1), ledger=lx)
    b = run_pair_sync_baseline(Node.with_skew(0, 0.0), Node.with_skew(1, -1.2484e-3, level=1), k=4, ledger=lb)
    ok = (x.timestamps_used == 1 and x.offset_after_100s <= 1.0e-3
          and b.timestamps_used == 4 and lb.energy >= 4 * lx.energy)
    criterion("AC5 one-timestamp sync", ok,
              f"ts={x.timestamps_used} offset={x.offset_after_100s * 1e3:.3f}ms (<=1ms); "
              f"baseline ts={b.timestamps_used} energy {lb.energy:g} vs {lx.energy:g} uJ")
    assert x.timestamps_used == 1
    assert x.offset_after_100s <= 1.0e-3
    assert b.timestamps_used == 4
    assert lb.energy >= 4 * lx.energy


def test_ac6_interpolator(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.uniform(-10, 10, 2)
        m, mu = int(rng.integers(1, 30)), float(rng.uniform(0, 1))
        x = a * np.arange(34) + b
        worst = max(worst, abs(interpolate(x, m, mu) - (a * (m + mu) + b)) / (1 + abs(a) * 34 + abs(b)))
    y = rng.normal(size=34)
    at_zero = all(interpolate(y, m, 0.0) == y[m] for m in range(1, 31))
    smooth = np.cos(0.05 * np.arange(34))
    endpoint = max(abs(interpolate(smooth, m, 1 - 1e-9) - smooth[m + 1]) for m in range(1, 31))
    ok = worst <= 1e-12 and at_zero and endpoint <= 1e-8
    criterion("AC6 interpolator", ok, f"affine rel err={worst:.1e}, mu=0 exact={at_zero}, mu->1 err={endpoint:.1e}")
    assert worst <= 1e-12
    assert at_zero
    assert endpoint <= 1e-8


def test_ac6_ted_s_curve(criterion):
    offsets = [-0.05, -0.02, 0.0, 0.02, 0.05]
    g, transitions = ted_s_curve(offsets, n_symbols=21000, seed=8)
    slope = np.polyfit(offsets, g, 1)[0]
    ok = transitions >= 10_000 and abs(g[2]) < 1e-3 and slope > 0 and np.all(np.diff(g) > 0)
    criterion("AC6 TED S-curve", ok, f"{transitions} transitions, g(0)={g[2]:.1e}, slope={slope:.3f}")
    assert transitions >= 10_000
    assert abs(g[2]) < 1e-3
    assert slope > 0


def test_ac6_state_ranges(criterion):
    bad = []
    for s in MATRIX:
        trace, _ = estimate(s)
        if not (np.all((trace.mu_raw >= 0) & (trace.mu_raw < 1)) and trace.eta_min >= 0 and trace.eta_max < 1):
            bad.append(s)
    criterion("AC6 mu, eta in [0,1)", not bad, f"{len(MATRIX)} skews, violations={bad}")
    assert not bad


def test_ac6_ls_fit_oracle(criterion):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 12))
        x = rng.uniform(-5, 5, n)
        y = rng.uniform(-2, 2) * x + rng.normal(size=n)
        m, c, _ = ls_fit(np.column_stack((x, y)))
        mo, co = normal_equation_fit(x, y)
        worst = max(worst, abs(m - mo), abs(c - co))
    criterion("AC6 ls_fit vs normal equations", worst <= 1e-9, f"max diff={worst:.1e} (<=1e-9)")
    assert worst <= 1e-9


def test_ac6_zero_skew_null(criterion):
    _, est = estimate(0.0)
    criterion("AC6 zero-skew null", abs(est.s_hat) <= 2e-6, f"|s_hat|={abs(est.s_hat):.1e} (<=2e-6)")
    assert abs(est.s_hat) <= 2e-6


def test_ac6_determinism(criterion, tmp_path):
    outputs = []
    for _ in range(2):
        cfg = parse_config(overrides={"mode": "crosslayer", "seed": 7, "out": str(tmp_path)})
        run_scenario(cfg)
        outputs.append({p.name: p.read_bytes() for p in sorted(tmp_path.iterdir())})
    a, b = estimate(1.25e-3, seed=4)[0], estimate(1.25e-3, seed=4)[0]
    ok = outputs[0] == outputs[1] and a.mu_raw.tobytes() == b.mu_raw.tobytes()
    criterion("AC6 determinism", ok, f"files={sorted(outputs[0])} identical={outputs[0] == outputs[1]}")
    assert ok
