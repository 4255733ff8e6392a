"""Synchronization sessions over simulated cognitive-radio nodes.

Two session types are modelled. A cross-layer session estimates skew from
the physical-layer timing loop and needs a single application timestamp.
The baseline session estimates skew from ``k`` timestamps by least squares.
Only application-layer timestamp messages are billed; the PHY preamble is
common to both and is not counted.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np

from .clocks import (
    AppClock,
    OscillatorModel,
    apply_cross_layer_correction,
    clock_offset_between,
    ls_skew_from_timestamps,
    make_timestamp,
    slew_clock,
)
from .errors import InvalidArgumentError, TopologyError
from .skew_estimation import SkewEstimate, estimate_physical_skew
from .timing_recovery import FractionalIntervalTrace, LoopConfig, run_timing_loop
from .waveform import SkewSpec, WaveformConfig, generate_symbols, receive

Mode = Literal["crosslayer", "baseline"]

DEFAULT_E_TX_UJ = 50.0
DEFAULT_E_RX_UJ = 30.0
EVAL_HORIZON_S = 100.0
DEFAULT_SPACING_S = 100.0


@dataclass
class Node:
    id: int
    clock: AppClock
    true_skew: float = 0.0  # relative to the master oscillator; hidden from protocol logic
    level: int = 0
    parent: int | None = None

    @classmethod
    def with_skew(cls, id: int, s: float, level: int = 0, parent: int | None = None,
                  count_rate: float = 200.0) -> Node:
        return cls(id=id, clock=AppClock(OscillatorModel(count_rate, s)), true_skew=s,
                   level=level, parent=parent)


@dataclass
class EnergyLedger:
    e_tx_per_msg: float = DEFAULT_E_TX_UJ
    e_rx_per_msg: float = DEFAULT_E_RX_UJ
    msgs_tx: int = 0
    msgs_rx: int = 0

    def __post_init__(self) -> None:
        if self.e_tx_per_msg < 0 or self.e_rx_per_msg < 0:
            raise InvalidArgumentError("per-message energies must be non-negative")

    def record(self, n: int = 1) -> None:
        """One sender transmission and one receiver reception per message."""
        self.msgs_tx += n
        self.msgs_rx += n

    @property
    def energy(self) -> float:
        return self.msgs_tx * self.e_tx_per_msg + self.msgs_rx * self.e_rx_per_msg


@dataclass
class SyncReport:
    node_id: int
    parent_id: int
    mode: str
    timestamps_used: int
    s_true: float
    s_hat: float
    offset_after_100s: float
    energy_spent: float
    sync_time: float = 0.0

    def __post_init__(self) -> None:
        if self.timestamps_used < 1:
            raise InvalidArgumentError("a session uses at least one timestamp")

    @property
    def skew_error(self) -> float:
        return self.s_hat - self.s_true

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhyResult:
    trace: FractionalIntervalTrace
    estimate: SkewEstimate


def phy_exchange(skew: float, wf_cfg: WaveformConfig, loop_cfg: LoopConfig,
                 loop_seed: int | None = None) -> PhyResult:
    """Transmit a PAM burst across a link with ``skew`` and estimate it from timing recovery."""
    sym = generate_symbols(wf_cfg.n_symbols, wf_cfg.seed)
    rx = receive(sym, SkewSpec(skew), wf_cfg)
    trace = run_timing_loop(rx, loop_cfg, seed=wf_cfg.seed if loop_seed is None else loop_seed)
    return PhyResult(trace, estimate_physical_skew(trace, loop_cfg))


def relative_skew(child: Node, parent: Node) -> float:
    """Oscillator skew of ``child`` measured against ``parent``."""
    # same as 1 - (1 - s_c)/(1 - s_p), without the cancellation
    s_c, s_p = child.clock.osc.s, parent.clock.osc.s
    return (s_c - s_p) / (1.0 - s_p)


def _horizon_offset(parent: Node, child: Node, t_sync: float) -> float:
    return abs(clock_offset_between(parent.clock, child.clock, t_sync + EVAL_HORIZON_S))


def run_pair_sync_crosslayer(master: Node, slave: Node, phy_cfg: LoopConfig | None = None,
                             wf_cfg: WaveformConfig | None = None, t_sync: float = 10.0,
                             ledger: EnergyLedger | None = None,
                             phy: PhyResult | None = None) -> SyncReport:
    """One PHY burst plus a single timestamp; updates ``slave.clock`` in place.

    Pass ``phy`` to reuse an already computed exchange over this link.
    """
    if master.id == slave.id:
        raise InvalidArgumentError("master and slave must be distinct nodes")
    phy_cfg = phy_cfg or LoopConfig.design()
    wf_cfg = wf_cfg or WaveformConfig()
    ledger = ledger if ledger is not None else EnergyLedger()
    before = ledger.energy

    s_link = relative_skew(slave, master)
    if phy is None:
        phy = phy_exchange(s_link, wf_cfg, phy_cfg)

    ts = make_timestamp(master.clock, t_sync, master.id)
    ledger.record(1)
    slave.clock = apply_cross_layer_correction(slave.clock, phy.estimate, ts,
                                               reference_rate=master.clock.rate_correction)
    return SyncReport(
        node_id=slave.id, parent_id=master.id, mode="crosslayer", timestamps_used=1,
        s_true=s_link, s_hat=phy.estimate.s_hat,
        offset_after_100s=_horizon_offset(master, slave, ts.send_time_true),
        energy_spent=ledger.energy - before, sync_time=ts.send_time_true,
    )


def run_pair_sync_baseline(master: Node, slave: Node, k: int, t_sync: float = 10.0,
                           spacing: float = DEFAULT_SPACING_S,
                           ledger: EnergyLedger | None = None) -> SyncReport:
    """Classic ``k``-timestamp least-squares skew estimate, then slew; updates ``slave.clock``."""
    if k < 2:
        raise InvalidArgumentError(f"baseline needs k >= 2 timestamps, got {k}")
    if master.id == slave.id:
        raise InvalidArgumentError("master and slave must be distinct nodes")
    ledger = ledger if ledger is not None else EnergyLedger()
    before = ledger.energy

    pairs = []
    ts = None
    for i in range(k):
        ts = make_timestamp(master.clock, t_sync + i * spacing, master.id)
        ledger.record(1)
        pairs.append((slave.clock.count_at(ts.send_time_true), ts.sender_count))
    est = ls_skew_from_timestamps(pairs)
    slave.clock = slew_clock(slave.clock, slave.clock.rate_correction / (1.0 - est.s_hat), ts)
    return SyncReport(
        node_id=slave.id, parent_id=master.id, mode="baseline", timestamps_used=k,
        s_true=relative_skew(slave, master), s_hat=est.s_hat,
        offset_after_100s=_horizon_offset(master, slave, ts.send_time_true),
        energy_spent=ledger.energy - before, sync_time=ts.send_time_true,
    )


def _resolve_parents(nodes: Sequence[Node]) -> dict[int, int]:
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise TopologyError("node ids must be unique")
    masters = [n for n in nodes if n.level == 0]
    if len(masters) != 1:
        raise TopologyError(f"expected exactly one level-0 master, found {len(masters)}")
    if masters[0].true_skew != 0.0:
        raise TopologyError("the master is the reference and must have zero skew")
    by_level: dict[int, list[Node]] = {}
    for n in nodes:
        by_level.setdefault(n.level, []).append(n)
    parents = {}
    for n in nodes:
        if n.level == 0:
            continue
        upper = by_level.get(n.level - 1, [])
        if n.parent is None:
            if len(upper) != 1:
                raise TopologyError(f"node {n.id} at level {n.level} needs an explicit parent")
            parents[n.id] = upper[0].id
        elif n.parent not in {u.id for u in upper}:
            raise TopologyError(f"node {n.id}: parent {n.parent} is not at level {n.level - 1}")
        else:
            parents[n.id] = n.parent
    return parents


def run_network_sync(nodes: Sequence[Node], mode: Mode = "crosslayer", k: int = 4,
                     phy_cfg: LoopConfig | None = None, wf_cfg: WaveformConfig | None = None,
                     ledger: EnergyLedger | None = None, t_start: float = 10.0,
                     session_gap: float = 10.0, spacing: float = DEFAULT_SPACING_S) -> list[SyncReport]:
    """Synchronize every node to its parent, one level at a time.

    Sessions run back to back on one timeline; in baseline mode each session
    lasts ``(k - 1) * spacing`` seconds.
    """
    if mode not in ("crosslayer", "baseline"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    parents = _resolve_parents(nodes)
    by_id = {n.id: n for n in nodes}
    ledger = ledger if ledger is not None else EnergyLedger()
    wf_cfg = wf_cfg or WaveformConfig()

    reports = []
    t = t_start
    for n in sorted((n for n in nodes if n.level > 0), key=lambda n: (n.level, n.id)):
        parent = by_id[parents[n.id]]
        if mode == "crosslayer":
            link_cfg = replace(wf_cfg, seed=wf_cfg.seed + n.id)
            rep = run_pair_sync_crosslayer(parent, n, phy_cfg, link_cfg, t_sync=t, ledger=ledger)
        else:
            rep = run_pair_sync_baseline(parent, n, k, t_sync=t, spacing=spacing, ledger=ledger)
        reports.append(rep)
        t = rep.sync_time + session_gap
    return reports


def offset_to_root(nodes: Sequence[Node], node_id: int, t: float) -> float:
    """Reading of the master minus reading of ``node_id`` at true time ``t``."""
    master = next(n for n in nodes if n.level == 0)
    node = next(n for n in nodes if n.id == node_id)
    return clock_offset_between(master.clock, node.clock, t)


@dataclass
class EnergyComparison:
    per_node_energy_ratio: dict[int, float]
    total_energy_a: float
    total_energy_b: float
    energy_ratio: float
    messages_a: int
    messages_b: int
    message_ratio: float
    mean_abs_skew_error_a: float
    mean_abs_skew_error_b: float
    accuracy_delta: float = field(default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_node_energy_ratio"] = {str(k): v for k, v in self.per_node_energy_ratio.items()}
        return d


def _ratio(a: float, b: float) -> float:
    return a / b if b else float("inf") if a else 1.0


def energy_compare(a: Iterable[SyncReport], b: Iterable[SyncReport]) -> EnergyComparison:
    """Compare two runs over the same nodes; ratios are ``a / b``."""
    a, b = list(a), list(b)
    ia = {r.node_id: r for r in a}
    ib = {r.node_id: r for r in b}
    if set(ia) != set(ib):
        raise InvalidArgumentError("reports cover different node sets")
    ea = sum(r.energy_spent for r in a)
    eb = sum(r.energy_spent for r in b)
    ma = sum(r.timestamps_used for r in a)
    mb = sum(r.timestamps_used for r in b)
    err_a = float(np.mean([abs(r.skew_error) for r in a])) if a else 0.0
    err_b = float(np.mean([abs(r.skew_error) for r in b])) if b else 0.0
    return EnergyComparison(
        per_node_energy_ratio={i: _ratio(ia[i].energy_spent, ib[i].energy_spent) for i in sorted(ia)},
        total_energy_a=ea, total_energy_b=eb, energy_ratio=_ratio(ea, eb),
        messages_a=ma, messages_b=mb, message_ratio=_ratio(ma, mb),
        mean_abs_skew_error_a=err_a, mean_abs_skew_error_b=err_b,
        accuracy_delta=err_a - err_b,
    )
