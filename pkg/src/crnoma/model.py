"""Scenario parameters and the rate/outage arithmetic shared by every strategy."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class InvalidParameterError(ValueError):
    pass


class OutageCause(enum.IntEnum):
    NONE = 0
    NO_ELIGIBLE_SECONDARY = 1
    SIC_DECODE_FAILURE = 2
    SECONDARY_RATE_FAILURE = 3
    PRIMARY_RATE_FAILURE = 4


@dataclass(frozen=True)
class OutageVerdict:
    in_outage: bool
    cause: OutageCause

    def __post_init__(self):
        if self.in_outage == (self.cause is OutageCause.NONE):
            raise InvalidParameterError(
                f"inconsistent verdict: in_outage={self.in_outage}, cause={self.cause.name}"
            )

    @classmethod
    def from_cause(cls, cause: OutageCause) -> "OutageVerdict":
        cause = OutageCause(cause)
        return cls(cause is not OutageCause.NONE, cause)


NO_OUTAGE = OutageVerdict(False, OutageCause.NONE)


@dataclass(frozen=True)
class SystemConfig:
    """One CR-NOMA scenario.

    ``K`` base-station antennas, ``M`` secondary users, mean channel powers
    ``omega0`` (primary) and ``omegaM`` (each secondary), target rates in
    bits per channel use, average SNR in dB and the channel-estimation error
    variance (0 for perfect CSI).
    """

    K: int
    M: int
    omega0: float = 1.0
    omegaM: float = 1.0
    r0_th: float = 0.2
    rs_th: float = 1.0
    snr_db: float = 20.0
    sigma_e_sq: float = 0.0

    def __post_init__(self):
        for name in ("K", "M"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {v!r}")
        for name in ("omega0", "omegaM", "r0_th", "rs_th"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be positive and finite, got {v!r}")
        if not math.isfinite(self.snr_db):
            raise InvalidParameterError(f"snr_db must be finite, got {self.snr_db!r}")
        if not (math.isfinite(self.sigma_e_sq) and self.sigma_e_sq >= 0):
            raise InvalidParameterError(f"sigma_e_sq must be >= 0, got {self.sigma_e_sq!r}")
        if not self.r0_th < self.rs_th:
            raise InvalidParameterError(
                f"primary target rate must be below the secondary one (r0_th={self.r0_th}, rs_th={self.rs_th})"
            )

    @property
    def snr(self) -> float:
        """Average SNR on the linear scale."""
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def perfect_csi(self) -> bool:
        return self.sigma_e_sq == 0

    def thresholds(self) -> "Thresholds":
        return Thresholds(threshold_snr(self.r0_th), threshold_snr(self.rs_th))


@dataclass(frozen=True)
class Thresholds:
    gamma0: float
    gammaS: float

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gammaS > 0):
            raise InvalidParameterError("threshold SNRs must be positive")


def threshold_snr(rate_bpcu: float) -> float:
    """SNR needed to support ``rate_bpcu``: 2**rate - 1."""
    if not rate_bpcu > 0:
        raise InvalidParameterError(f"rate must be positive, got {rate_bpcu!r}")
    return math.expm1(rate_bpcu * math.log(2.0))


def sinr_rate(signal_gain: float, interference_gain: float, avg_snr_linear: float) -> float:
    """log2(1 + snr*g / (1 + snr*g_i)) in bits per channel use."""
    if signal_gain < 0 or interference_gain < 0 or not avg_snr_linear > 0:
        raise InvalidParameterError("gains must be non-negative and SNR positive")
    sinr = avg_snr_linear * signal_gain / (1.0 + avg_snr_linear * interference_gain)
    return math.log1p(sinr) / math.log(2.0)


# SINR-domain comparisons; equality with the threshold counts as success.

def qos_outage(primary_gain: float, secondary_gain: float, cfg: SystemConfig, th: Thresholds) -> OutageVerdict:
    """Primary decoded first under interference from the secondary, then the secondary."""
    snr = cfg.snr
    if snr * primary_gain < th.gamma0 * (1.0 + snr * secondary_gain):
        return OutageVerdict(True, OutageCause.SIC_DECODE_FAILURE)
    if snr * secondary_gain < th.gammaS:
        return OutageVerdict(True, OutageCause.SECONDARY_RATE_FAILURE)
    return NO_OUTAGE


def csi_outage(primary_gain: float, secondary_gain: float, cfg: SystemConfig, th: Thresholds,
               *, include_primary: bool = True) -> OutageVerdict:
    """Stronger (secondary) user decoded first, then the primary interference-free.

    With ``include_primary=False`` only the secondary user's outage counts,
    the CSI-order counterpart of :func:`qos_outage`.
    """
    snr = cfg.snr
    if snr * secondary_gain < th.gammaS * (1.0 + snr * primary_gain):
        return OutageVerdict(True, OutageCause.SIC_DECODE_FAILURE)
    if include_primary and snr * primary_gain < th.gamma0:
        return OutageVerdict(True, OutageCause.PRIMARY_RATE_FAILURE)
    return NO_OUTAGE


def qos_outage_codes(primary_gain, secondary_gain, snr: float, th: Thresholds) -> np.ndarray:
    """Vectorised :func:`qos_outage`; returns ``OutageCause`` codes as int8."""
    x = snr * np.asarray(primary_gain)
    y = snr * np.asarray(secondary_gain)
    codes = np.zeros(np.broadcast(x, y).shape, dtype=np.int8)
    codes[y < th.gammaS] = OutageCause.SECONDARY_RATE_FAILURE
    codes[x < th.gamma0 * (1.0 + y)] = OutageCause.SIC_DECODE_FAILURE
    return codes


def csi_outage_codes(primary_gain, secondary_gain, snr: float, th: Thresholds,
                     include_primary: bool = True) -> np.ndarray:
    x = snr * np.asarray(primary_gain)
    y = snr * np.asarray(secondary_gain)
    codes = np.zeros(np.broadcast(x, y).shape, dtype=np.int8)
    if include_primary:
        codes[x < th.gamma0] = OutageCause.PRIMARY_RATE_FAILURE
    codes[y < th.gammaS * (1.0 + x)] = OutageCause.SIC_DECODE_FAILURE
    return codes
