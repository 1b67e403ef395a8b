"""Joint antenna / secondary-user selection strategies.

Every selection comparison uses the decision gains (channel estimates when
available); achieved rates and the outage verdict use the true gains.
Ties resolve to the lowest index. Indices are zero-based.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .channel import ChannelBatch, ChannelRealization
from .model import (
    InvalidParameterError,
    OutageCause,
    OutageVerdict,
    SystemConfig,
    Thresholds,
    csi_outage,
    csi_outage_codes,
    qos_outage,
    qos_outage_codes,
    sinr_rate,
)


class Strategy(str, enum.Enum):
    ALG1 = "alg1"
    ALG2 = "alg2"
    CSI_BASELINE = "csi_baseline"
    MIN_GAIN_QOS = "min_gain_qos"
    EXHAUSTIVE = "exhaustive"
    CSI_BASELINE_BOTH = "csi_baseline_both"

    @property
    def code(self) -> int:
        """Stable small integer used to key random substreams."""
        return list(Strategy).index(self)


class Branch(str, enum.Enum):
    PRE_SIC_OUTAGE = "pre_sic_outage"
    SELECTED_AT_BEST_ANTENNA = "selected_at_best_antenna"
    FALLBACK_JOINT_SEARCH = "fallback_joint_search"
    DIRECT = "direct"


@dataclass(frozen=True)
class SelectionOutcome:
    strategy: Strategy
    antenna_index: Optional[int]
    user_index: Optional[int]
    primary_rate: float
    secondary_rate: float
    verdict: OutageVerdict
    branch: Branch

    def __post_init__(self):
        absent = self.antenna_index is None and self.user_index is None
        if absent != (self.branch is Branch.PRE_SIC_OUTAGE):
            raise InvalidParameterError("indices must be absent exactly for a pre-SIC outage")
        if self.branch is Branch.FALLBACK_JOINT_SEARCH and self.strategy is not Strategy.ALG1:
            raise InvalidParameterError("only Algorithm 1 has a fallback branch")


def max_secondary_rate(gains, snr: float) -> float:
    """Largest interference-free secondary rate over all (user, antenna) pairs."""
    g = np.asarray(gains, dtype=float)
    if g.size == 0:
        raise InvalidParameterError("empty gain matrix")
    return math.log2(1.0 + snr * float(g.max()))


def _eligible(S: np.ndarray, cfg: SystemConfig, th: Thresholds) -> np.ndarray:
    return cfg.snr * S >= th.gammaS


def _pre_sic_outage(strategy: Strategy) -> SelectionOutcome:
    return SelectionOutcome(strategy, None, None, 0.0, 0.0,
                            OutageVerdict(True, OutageCause.NO_ELIGIBLE_SECONDARY),
                            Branch.PRE_SIC_OUTAGE)


def _qos_outcome(strategy, real, k, m, cfg, th, branch) -> SelectionOutcome:
    Pt, St = real.true_gains()
    x, y = float(Pt[k]), float(St[m, k])
    return SelectionOutcome(
        strategy, int(k), int(m),
        primary_rate=sinr_rate(x, y, cfg.snr),
        secondary_rate=sinr_rate(y, 0.0, cfg.snr),
        verdict=qos_outage(x, y, cfg, th),
        branch=branch,
    )


def _check_shape(real: ChannelRealization, cfg: SystemConfig):
    if real.K != cfg.K or real.M != cfg.M:
        raise InvalidParameterError(
            f"realization is {real.M}x{real.K} but the config expects {cfg.M}x{cfg.K}")


def select_algorithm1(real: ChannelRealization, cfg: SystemConfig, th: Thresholds) -> SelectionOutcome:
    """Suboptimal selection: best primary antenna, then weakest eligible secondary there.

    If no secondary is eligible at that antenna, the weakest eligible
    (user, antenna) pair over the remaining antennas is used instead.
    """
    _check_shape(real, cfg)
    P, S = real.decision_gains()
    eligible = _eligible(S, cfg, th)
    if not eligible.any():
        return _pre_sic_outage(Strategy.ALG1)

    k_star = int(np.argmax(P))
    at_k_star = [m for m in range(cfg.M) if eligible[m, k_star]]
    if at_k_star:
        m_star = min(at_k_star, key=lambda m: S[m, k_star])
        return _qos_outcome(Strategy.ALG1, real, k_star, m_star, cfg, th, Branch.SELECTED_AT_BEST_ANTENNA)

    pairs = [(S[m, k], m, k) for m in range(cfg.M) for k in range(cfg.K)
             if k != k_star and eligible[m, k]]
    _, m_plus, k_plus = min(pairs)
    return _qos_outcome(Strategy.ALG1, real, k_plus, m_plus, cfg, th, Branch.FALLBACK_JOINT_SEARCH)


def select_algorithm2(real: ChannelRealization, cfg: SystemConfig, th: Thresholds) -> SelectionOutcome:
    """Optimal selection: per antenna the weakest eligible secondary, then the
    antenna maximising primary-to-interferer gain ratio."""
    _check_shape(real, cfg)
    P, S = real.decision_gains()
    eligible = _eligible(S, cfg, th)
    if not eligible.any():
        return _pre_sic_outage(Strategy.ALG2)

    recorded = {}
    for k in range(cfg.K):
        users = [m for m in range(cfg.M) if eligible[m, k]]
        if users:
            m_k = min(users, key=lambda m: S[m, k])
            recorded[k] = (P[k] / S[m_k, k], m_k)
    assert recorded, "an eligible pair exists, so some antenna must record a ratio"
    k_best = max(recorded, key=lambda k: (recorded[k][0], -k))
    return _qos_outcome(Strategy.ALG2, real, k_best, recorded[k_best][1], cfg, th, Branch.DIRECT)


def select_csi_baseline(real: ChannelRealization, cfg: SystemConfig, th: Thresholds,
                        *, include_primary: bool = False) -> SelectionOutcome:
    """Weakest primary antenna, strongest secondary there, CSI-based decoding order.

    The verdict is the scheduled secondary user's outage, as for the QoS
    strategies; ``include_primary=True`` also fails on the primary's rate.
    """
    _check_shape(real, cfg)
    P, S = real.decision_gains()
    k = int(np.argmin(P))
    m = int(np.argmax(S[:, k]))
    Pt, St = real.true_gains()
    x, y = float(Pt[k]), float(St[m, k])
    return SelectionOutcome(
        Strategy.CSI_BASELINE_BOTH if include_primary else Strategy.CSI_BASELINE, k, m,
        primary_rate=sinr_rate(x, 0.0, cfg.snr),
        secondary_rate=sinr_rate(y, x, cfg.snr),
        verdict=csi_outage(x, y, cfg, th, include_primary=include_primary),
        branch=Branch.DIRECT,
    )


def select_min_gain_qos(real: ChannelRealization, cfg: SystemConfig, th: Thresholds) -> SelectionOutcome:
    """Single-antenna baseline: weakest secondary, no eligibility filter."""
    if cfg.K != 1:
        raise InvalidParameterError("the min-gain QoS baseline is defined for K = 1 only")
    _check_shape(real, cfg)
    _, S = real.decision_gains()
    m = int(np.argmin(S[:, 0]))
    return _qos_outcome(Strategy.MIN_GAIN_QOS, real, 0, m, cfg, th, Branch.DIRECT)


def exhaustive_feasible(real: ChannelRealization, cfg: SystemConfig, th: Thresholds) -> OutageVerdict:
    """Genie check on the true gains: does any (antenna, user) pair avoid outage?"""
    _check_shape(real, cfg)
    Pt, St = real.true_gains()
    snr = cfg.snr
    any_eligible = False
    for k in range(cfg.K):
        for m in range(cfg.M):
            y = snr * St[m, k]
            if y >= th.gammaS:
                any_eligible = True
                if snr * Pt[k] >= th.gamma0 * (1.0 + y):
                    return OutageVerdict(False, OutageCause.NONE)
    cause = OutageCause.SIC_DECODE_FAILURE if any_eligible else OutageCause.NO_ELIGIBLE_SECONDARY
    return OutageVerdict(True, cause)


SELECTORS = {
    Strategy.ALG1: select_algorithm1,
    Strategy.ALG2: select_algorithm2,
    Strategy.CSI_BASELINE: select_csi_baseline,
    Strategy.MIN_GAIN_QOS: select_min_gain_qos,
    Strategy.CSI_BASELINE_BOTH: lambda real, cfg, th: select_csi_baseline(real, cfg, th, include_primary=True),
}


def verdict_for(strategy: Strategy, real: ChannelRealization, cfg: SystemConfig, th: Thresholds) -> OutageVerdict:
    strategy = Strategy(strategy)
    if strategy is Strategy.EXHAUSTIVE:
        return exhaustive_feasible(real, cfg, th)
    return SELECTORS[strategy](real, cfg, th).verdict


# --- vectorised kernels ---------------------------------------------------
# Each returns an int8 array of OutageCause codes, one per realization.

def _alg1_codes(P, S, Pt, St, snr, th):
    n, M, K = S.shape
    rows = np.arange(n)
    elig = snr * S >= th.gammaS
    any_elig = elig.reshape(n, -1).any(axis=1)
    masked = np.where(elig, S, np.inf)

    k_star = P.argmax(axis=1)
    col = masked[rows, :, k_star]
    has_at_k_star = np.isfinite(col).any(axis=1)
    m_star = col.argmin(axis=1)

    masked[rows, :, k_star] = np.inf
    flat = masked.reshape(n, M * K).argmin(axis=1)
    m_plus, k_plus = np.divmod(flat, K)

    m = np.where(has_at_k_star, m_star, m_plus)
    k = np.where(has_at_k_star, k_star, k_plus)
    codes = qos_outage_codes(Pt[rows, k], St[rows, m, k], snr, th)
    codes[~any_elig] = OutageCause.NO_ELIGIBLE_SECONDARY
    return codes


def _alg2_codes(P, S, Pt, St, snr, th):
    n = S.shape[0]
    rows = np.arange(n)
    elig = snr * S >= th.gammaS
    any_elig = elig.reshape(n, -1).any(axis=1)
    masked = np.where(elig, S, np.inf)
    m_per_k = masked.argmin(axis=1)                                # (n, K)
    s_min = np.take_along_axis(masked, m_per_k[:, None, :], axis=1)[:, 0, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isfinite(s_min), P / s_min, -np.inf)
    k = ratio.argmax(axis=1)
    m = m_per_k[rows, k]
    codes = qos_outage_codes(Pt[rows, k], St[rows, m, k], snr, th)
    codes[~any_elig] = OutageCause.NO_ELIGIBLE_SECONDARY
    return codes


def _csi_codes(P, S, Pt, St, snr, th, include_primary=False):
    rows = np.arange(S.shape[0])
    k = P.argmin(axis=1)
    m = S[rows, :, k].argmax(axis=1)
    return csi_outage_codes(Pt[rows, k], St[rows, m, k], snr, th, include_primary)


def _csi_both_codes(P, S, Pt, St, snr, th):
    return _csi_codes(P, S, Pt, St, snr, th, include_primary=True)


def _min_gain_codes(P, S, Pt, St, snr, th):
    if S.shape[2] != 1:
        raise InvalidParameterError("the min-gain QoS baseline is defined for K = 1 only")
    rows = np.arange(S.shape[0])
    m = S[:, :, 0].argmin(axis=1)
    return qos_outage_codes(Pt[:, 0], St[rows, m, 0], snr, th)


def _exhaustive_codes(P, S, Pt, St, snr, th):
    y = snr * St
    elig = y >= th.gammaS
    feasible = elig & (snr * Pt[:, None, :] >= th.gamma0 * (1.0 + y))
    n = St.shape[0]
    codes = np.full(n, OutageCause.SIC_DECODE_FAILURE, dtype=np.int8)
    codes[~elig.reshape(n, -1).any(axis=1)] = OutageCause.NO_ELIGIBLE_SECONDARY
    codes[feasible.reshape(n, -1).any(axis=1)] = OutageCause.NONE
    return codes


_KERNELS = {
    Strategy.ALG1: _alg1_codes,
    Strategy.ALG2: _alg2_codes,
    Strategy.CSI_BASELINE: _csi_codes,
    Strategy.MIN_GAIN_QOS: _min_gain_codes,
    Strategy.EXHAUSTIVE: _exhaustive_codes,
    Strategy.CSI_BASELINE_BOTH: _csi_both_codes,
}

BatchKernel = Callable[[ChannelBatch, SystemConfig, Thresholds], np.ndarray]


def check_compatible(strategy: Union[Strategy, BatchKernel], cfg: SystemConfig) -> None:
    if strategy is Strategy.MIN_GAIN_QOS and cfg.K != 1:
        raise InvalidParameterError("the min-gain QoS baseline is defined for K = 1 only")


def outage_codes(strategy: Union[Strategy, BatchKernel], batch: ChannelBatch,
                 cfg: SystemConfig, th: Thresholds) -> np.ndarray:
    """Outage cause of ``strategy`` for every realization in ``batch``.

    ``strategy`` may also be a plain callable ``(batch, cfg, th) -> codes``.
    """
    if not isinstance(strategy, Strategy):
        if callable(strategy):
            return np.asarray(strategy(batch, cfg, th), dtype=np.int8)
        strategy = Strategy(strategy)
    P, S = batch.decision_gains()
    Pt, St = batch.true_gains() if batch.has_estimates else (P, S)
    return _KERNELS[strategy](P, S, Pt, St, cfg.snr, th)
