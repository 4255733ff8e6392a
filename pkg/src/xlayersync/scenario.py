"""Scenario configuration and the runners behind each CLI mode."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from .clocks import AppClock, OscillatorModel, app_skew_from_counts, run_app_clock
from .crn_harness import (
    EnergyLedger,
    Node,
    PhyResult,
    SyncReport,
    energy_compare,
    phy_exchange,
    run_network_sync,
    run_pair_sync_crosslayer,
)
from .errors import ConfigError
from .skew_estimation import unwrap_mu
from .timing_recovery import DEFAULT_KP, LoopConfig
from .waveform import WaveformConfig

MODES = ("phy", "appclock", "crosslayer", "network", "compare")
TOPOLOGIES = ("star", "chain")
TRACE_HEADER = ("k", "mu_raw", "mu_unwrapped", "timing_error", "decision")
SIG_DIGITS = 9
# 20% acquisition plus the 500-symbol minimum fit
MIN_SYMBOLS = 625


@dataclass
class ScenarioConfig:
    mode: str = "crosslayer"
    skew: float = -1.2484e-3
    n_symbols: int = 5000
    symbol_rate: float = 1000.0
    rolloff: float = 0.5
    span_symbols: int = 12
    tx_samples_per_symbol: int = 8
    seed: int = 1
    bn_t: float = 0.01
    zeta: float = 1.0
    N: int = 2
    kp: float = DEFAULT_KP
    duration_s: float = 500.0
    count_rate: float = 200.0
    topology: str = "star"
    n_nodes: int = 5
    node_skews: list[float] | None = None
    k_timestamps: int = 4
    spacing_s: float = 100.0
    e_tx_uJ: float = 50.0
    e_rx_uJ: float = 30.0
    network_mode: str = "crosslayer"
    out: str = "."

    def waveform(self) -> WaveformConfig:
        return WaveformConfig(symbol_rate=self.symbol_rate, rolloff=self.rolloff,
                              span_symbols=self.span_symbols,
                              tx_samples_per_symbol=self.tx_samples_per_symbol,
                              rx_samples_per_symbol=self.N, n_symbols=self.n_symbols,
                              seed=self.seed)

    def loop(self) -> LoopConfig:
        return LoopConfig.design(bn_t=self.bn_t, zeta=self.zeta, kp=self.kp, N=self.N)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _check(key: str, ok: bool, why: str) -> None:
    if not ok:
        raise ConfigError(key, why)


def _validate(cfg: ScenarioConfig) -> None:
    _check("mode", cfg.mode in MODES, f"must be one of {MODES}")
    _check("skew", abs(cfg.skew) < 0.1, "must satisfy |skew| < 0.1")
    _check("n_symbols", cfg.n_symbols >= MIN_SYMBOLS, f"must be >= {MIN_SYMBOLS}")
    _check("symbol_rate", cfg.symbol_rate > 0, "must be positive")
    _check("rolloff", 0 < cfg.rolloff <= 1, "must lie in (0, 1]")
    _check("span_symbols", cfg.span_symbols > 0 and cfg.span_symbols % 2 == 0, "must be even and positive")
    _check("tx_samples_per_symbol", cfg.tx_samples_per_symbol >= 2, "must be >= 2")
    _check("bn_t", 0 < cfg.bn_t < 0.5, "must lie in (0, 0.5)")
    _check("zeta", cfg.zeta > 0, "must be positive")
    _check("N", cfg.N >= 2, "must be >= 2")
    _check("kp", cfg.kp > 0, "must be positive")
    _check("duration_s", cfg.duration_s > 0, "must be positive")
    _check("count_rate", cfg.count_rate > 0, "must be positive")
    _check("topology", cfg.topology in TOPOLOGIES, f"must be one of {TOPOLOGIES}")
    _check("n_nodes", cfg.n_nodes >= 2, "must be >= 2")
    _check("k_timestamps", cfg.k_timestamps >= 2, "must be >= 2")
    _check("spacing_s", cfg.spacing_s > 0, "must be positive")
    _check("e_tx_uJ", cfg.e_tx_uJ >= 0, "must be non-negative")
    _check("e_rx_uJ", cfg.e_rx_uJ >= 0, "must be non-negative")
    _check("network_mode", cfg.network_mode in ("crosslayer", "baseline"), "must be crosslayer or baseline")
    if cfg.node_skews is not None:
        _check("node_skews", len(cfg.node_skews) == cfg.n_nodes - 1,
               "needs one skew per non-master node (n_nodes - 1 values)")
        _check("node_skews", all(abs(s) < 0.1 for s in cfg.node_skews), "every |skew| must be < 0.1")


def _coerce(key: str, value: Any, kind: type) -> Any:
    if value is None:
        return None
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise ValueError
            return value
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(key, f"invalid value {value!r}") from None


def parse_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Resolve defaults, then the flat JSON file, then ``overrides`` (flags win)."""
    raw: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"file not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8") or "{}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    known = {f.name: f for f in fields(ScenarioConfig)}
    values = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(key, "unknown key")
        default = known[key].default
        values[key] = _coerce(key, value, list if default is None else type(default))
    cfg = ScenarioConfig(**values)
    _validate(cfg)
    return cfg


# --- output formatting -------------------------------------------------------

def _fmt(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def round_floats(obj: Any) -> Any:
    """Round every float in a JSON-like structure to 9 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _fmt(x) if math.isfinite(x) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(round_floats(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_trace_csv(path: Path, phy: PhyResult) -> None:
    tr = phy.trace
    mu_u = unwrap_mu(tr)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, mu, mu_unw, e, d in zip(tr.k, tr.mu_raw, mu_u, tr.timing_error, tr.decision):
            w.writerow((int(k), f"{mu:.{SIG_DIGITS}g}", f"{mu_unw:.{SIG_DIGITS}g}",
                        f"{e + 0.0:.{SIG_DIGITS}g}", int(d)))


# --- runners -----------------------------------------------------------------

def _empty_summary(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "mode": cfg.mode,
        "injected_skew": cfg.skew,
        "s_hat_phy": None,
        "s_hat_app": None,
        "slope_m": None,
        "intercept_c": None,
        "residual_rms": None,
        "counts": None,
        "timestamps_used": None,
        "energy_uJ": None,
        "offset_after_100s_ms": None,
        "config": cfg.to_dict(),
    }


def _fill_phy(summary: dict, phy: PhyResult) -> None:
    est = phy.estimate
    summary.update(s_hat_phy=est.s_hat, slope_m=est.slope, intercept_c=est.intercept,
                   residual_rms=est.residual_rms)


def _fill_app(summary: dict, cfg: ScenarioConfig) -> None:
    tx = AppClock(OscillatorModel(cfg.count_rate, 0.0))
    rx = AppClock(OscillatorModel(cfg.count_rate, cfg.skew))
    c_tx, c_rx = run_app_clock(tx, cfg.duration_s), run_app_clock(rx, cfg.duration_s)
    summary.update(counts={"tx": c_tx, "rx": c_rx}, s_hat_app=app_skew_from_counts(c_tx, c_rx))


def _build_nodes(cfg: ScenarioConfig) -> list[Node]:
    n = cfg.n_nodes - 1
    if cfg.node_skews is not None:
        skews = list(cfg.node_skews)
    else:
        rng = np.random.default_rng(cfg.seed)
        skews = [round(float(v), 7) for v in rng.uniform(-2e-3, 2e-3, size=n)]
    nodes = [Node.with_skew(0, 0.0, level=0, count_rate=cfg.count_rate)]
    for i, s in enumerate(skews, start=1):
        if cfg.topology == "star":
            nodes.append(Node.with_skew(i, s, level=1, parent=0, count_rate=cfg.count_rate))
        else:
            nodes.append(Node.with_skew(i, s, level=i, parent=i - 1, count_rate=cfg.count_rate))
    return nodes


def _network_summary(cfg: ScenarioConfig, mode: str, reports: list[SyncReport],
                     ledger: EnergyLedger) -> dict[str, Any]:
    summary = _empty_summary(cfg)
    summary["mode"] = f"network:{mode}"
    summary["injected_skew"] = None
    summary["timestamps_used"] = sum(r.timestamps_used for r in reports)
    summary["energy_uJ"] = ledger.energy
    summary["offset_after_100s_ms"] = max(r.offset_after_100s for r in reports) * 1e3
    return summary


def _run_network(cfg: ScenarioConfig, mode: str) -> tuple[list[SyncReport], EnergyLedger]:
    ledger = EnergyLedger(cfg.e_tx_uJ, cfg.e_rx_uJ)
    reports = run_network_sync(_build_nodes(cfg), mode, cfg.k_timestamps, cfg.loop(), cfg.waveform(),
                               ledger=ledger, spacing=cfg.spacing_s)
    return reports, ledger


def run_scenario(cfg: ScenarioConfig) -> dict[str, Any]:
    """Run one scenario and write its artifacts under ``cfg.out``; returns the summary."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.mode in ("phy", "appclock", "crosslayer"):
        summary = _empty_summary(cfg)
        if cfg.mode in ("phy", "crosslayer"):
            phy = phy_exchange(cfg.skew, cfg.waveform(), cfg.loop())
            _fill_phy(summary, phy)
            write_trace_csv(out / "trace.csv", phy)
        if cfg.mode in ("appclock", "crosslayer"):
            _fill_app(summary, cfg)
        if cfg.mode == "crosslayer":
            ledger = EnergyLedger(cfg.e_tx_uJ, cfg.e_rx_uJ)
            master = Node.with_skew(0, 0.0, count_rate=cfg.count_rate)
            slave = Node.with_skew(1, cfg.skew, level=1, count_rate=cfg.count_rate)
            rep = run_pair_sync_crosslayer(master, slave, cfg.loop(), cfg.waveform(),
                                           ledger=ledger, phy=phy)
            summary.update(timestamps_used=rep.timestamps_used, energy_uJ=rep.energy_spent,
                           offset_after_100s_ms=rep.offset_after_100s * 1e3)
    elif cfg.mode == "network":
        reports, ledger = _run_network(cfg, cfg.network_mode)
        summary = _network_summary(cfg, cfg.network_mode, reports, ledger)
        write_json(out / "network.json", {"mode": cfg.network_mode, "topology": cfg.topology,
                                          "reports": [r.to_dict() for r in reports]})
    else:
        legs = {}
        reports = {}
        for mode in ("crosslayer", "baseline"):
            reports[mode], ledger = _run_network(cfg, mode)
            legs[mode] = _network_summary(cfg, mode, reports[mode], ledger)
        cmp = energy_compare(reports["crosslayer"], reports["baseline"])
        summary = {"mode": "compare", "crosslayer": legs["crosslayer"], "baseline": legs["baseline"],
                   "comparison": cmp.to_dict(), "config": cfg.to_dict()}
        write_json(out / "network.json", {m: [r.to_dict() for r in reps] for m, reps in reports.items()})

    write_json(out / "summary.json", summary)
    return round_floats(summary)
