"""Cross-layer time synchronization: clock skew from symbol timing recovery."""

from .clocks import (
    AppClock,
    OscillatorModel,
    TimestampMsg,
    app_skew_from_counts,
    apply_cross_layer_correction,
    clock_offset_between,
    ls_skew_from_timestamps,
    run_app_clock,
)
from .crn_harness import (
    EnergyLedger,
    Node,
    SyncReport,
    energy_compare,
    phy_exchange,
    run_network_sync,
    run_pair_sync_baseline,
    run_pair_sync_crosslayer,
)
from .skew_estimation import SkewEstimate, estimate_physical_skew, ls_fit, skew_from_slope, unwrap_mu
from .timing_recovery import LoopConfig, design_loop_gains, run_timing_loop
from .waveform import SkewSpec, WaveformConfig, generate_symbols, receive, srrc_taps

__version__ = "0.1.0"
