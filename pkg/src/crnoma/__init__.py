"""Outage-probability laboratory for uplink CR-NOMA with a multi-antenna base station."""
from .analytic import (
    NumericInstabilityError,
    ScaledParams,
    outage_alg1_closed,
    outage_alg1_published,
    outage_single_antenna_closed,
    quadrature_oracle,
)
from .channel import ChannelBatch, ChannelRealization, make_stream, sample_imperfect, sample_perfect
from .model import (
    InvalidParameterError,
    OutageCause,
    OutageVerdict,
    SystemConfig,
    Thresholds,
    csi_outage,
    qos_outage,
    sinr_rate,
    threshold_snr,
)
from .montecarlo import OutageEstimate, SweepResult, estimate, estimate_paired, sweep
from .selection import (
    Branch,
    SelectionOutcome,
    Strategy,
    exhaustive_feasible,
    max_secondary_rate,
    select_algorithm1,
    select_algorithm2,
    select_csi_baseline,
    select_min_gain_qos,
)

__version__ = "0.1.0"
