import math

import pytest
from hypothesis import given, strategies as st

from crnoma.model import (
    InvalidParameterError,
    OutageCause,
    OutageVerdict,
    SystemConfig,
    Thresholds,
    csi_outage,
    qos_outage,
    qos_outage_codes,
    csi_outage_codes,
    sinr_rate,
    threshold_snr,
)


def test_threshold_snr_values():
    assert threshold_snr(1.0) == 1.0
    assert threshold_snr(2.0) == pytest.approx(3.0, rel=1e-15)
    # 2**0.2 - 1 from a 40-digit mpmath evaluation
    assert threshold_snr(0.2) == pytest.approx(0.1486983549970350068, rel=1e-15)


def test_threshold_snr_small_rate_is_accurate():
    r = 1e-12
    assert threshold_snr(r) == pytest.approx(r * math.log(2), rel=1e-9)


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_threshold_snr_rejects_non_positive(rate):
    with pytest.raises(InvalidParameterError):
        threshold_snr(rate)


@given(st.floats(1e-6, 20), st.floats(1e-6, 20))
def test_threshold_snr_increasing(a, b):
    if a < b:
        assert threshold_snr(a) < threshold_snr(b)


def test_sinr_rate_examples():
    assert sinr_rate(0.0, 5.0, 10.0) == 0.0
    assert sinr_rate(0.1, 0.0, 10.0) == pytest.approx(1.0, rel=1e-15)
    # log2(1 + 10/11), 40-digit mpmath reference
    assert sinr_rate(1.0, 1.0, 10.0) == pytest.approx(0.93288580414146303, rel=1e-14)


gains = st.floats(0, 1e3, allow_nan=False)
snrs = st.floats(1e-3, 1e5)


@given(gains, gains, gains, snrs)
def test_sinr_rate_monotone_in_signal_and_interference(g1, g2, gi, snr):
    lo, hi = sorted((g1, g2))
    assert sinr_rate(lo, gi, snr) <= sinr_rate(hi, gi, snr)
    assert sinr_rate(gi, hi, snr) <= sinr_rate(gi, lo, snr)


@given(gains, gains, snrs, snrs)
def test_sinr_rate_monotone_in_snr(g, gi, s1, s2):
    lo, hi = sorted((s1, s2))
    assert sinr_rate(g, gi, lo) <= sinr_rate(g, gi, hi) + 1e-12


@given(st.floats(1e-3, 10), st.floats(0, 10), st.floats(1e-2, 100), st.floats(1e-2, 100))
def test_qos_sic_metric_increasing_in_snr(x, y, s1, s2):
    lo, hi = sorted((s1, s2))
    assume_ok = lo < hi
    if assume_ok:
        assert lo * x / (1 + lo * y) < hi * x / (1 + hi * y)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        SystemConfig(K=0, M=1)
    with pytest.raises(InvalidParameterError):
        SystemConfig(K=1, M=1, omega0=0)
    with pytest.raises(InvalidParameterError):
        SystemConfig(K=1, M=1, sigma_e_sq=-0.1)
    with pytest.raises(InvalidParameterError):
        SystemConfig(K=1, M=1, r0_th=1.0, rs_th=1.0)
    with pytest.raises(InvalidParameterError):
        SystemConfig(K=1.5, M=1)


def test_snr_conversion_and_thresholds():
    cfg = SystemConfig(K=1, M=1, snr_db=20)
    assert cfg.snr == pytest.approx(100.0)
    th = cfg.thresholds()
    assert th.gamma0 < th.gammaS
    assert th.gammaS == 1.0


def test_verdict_invariant():
    with pytest.raises(InvalidParameterError):
        OutageVerdict(True, OutageCause.NONE)
    with pytest.raises(InvalidParameterError):
        OutageVerdict(False, OutageCause.SIC_DECODE_FAILURE)


TH = Thresholds(0.1487, 1.0)


def test_qos_outage_examples():
    cfg = SystemConfig(K=1, M=1, snr_db=10)
    assert qos_outage(1e6, 1e3, cfg, TH).cause is OutageCause.NONE
    assert qos_outage(0.0, 0.3, cfg, TH).cause is OutageCause.SIC_DECODE_FAILURE
    # 10*1/(1+0.5) = 6.67 >= gamma0, but 10*0.05 = 0.5 < 1
    assert qos_outage(1.0, 0.05, cfg, TH).cause is OutageCause.SECONDARY_RATE_FAILURE


def test_qos_outage_boundary_counts_as_success():
    cfg = SystemConfig(K=1, M=1, snr_db=0)
    th = Thresholds(0.5, 1.0)
    # x/(1+y) == gamma0 exactly and y == gammaS exactly
    assert not qos_outage(1.0, 1.0, cfg, th).in_outage


def test_csi_outage_examples():
    cfg = SystemConfig(K=1, M=1, snr_db=10)
    v = csi_outage(0.0, 10.0, cfg, TH)
    assert v.cause is OutageCause.PRIMARY_RATE_FAILURE
    assert not csi_outage(0.0, 10.0, cfg, TH, include_primary=False).in_outage
    assert not csi_outage(1.0, 100.0, cfg, TH).in_outage
    # 10/11 < 1
    assert csi_outage(1.0, 1.0, cfg, TH).cause is OutageCause.SIC_DECODE_FAILURE


@given(st.floats(0, 5), st.floats(0, 5), st.floats(-10, 30), st.booleans())
def test_vectorised_verdicts_match_scalar(x, y, snr_db, include_primary):
    cfg = SystemConfig(K=1, M=1, snr_db=snr_db)
    th = cfg.thresholds()
    assert qos_outage_codes(x, y, cfg.snr, th)[()] == qos_outage(x, y, cfg, th).cause
    assert (csi_outage_codes(x, y, cfg.snr, th, include_primary)[()]
            == csi_outage(x, y, cfg, th, include_primary=include_primary).cause)


def test_verdicts_are_pure():
    cfg = SystemConfig(K=1, M=1, snr_db=7)
    th = cfg.thresholds()
    assert qos_outage(0.3, 0.2, cfg, th) == qos_outage(0.3, 0.2, cfg, th)
    assert csi_outage(0.3, 0.2, cfg, th) == csi_outage(0.3, 0.2, cfg, th)
