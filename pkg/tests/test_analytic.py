import math

import numpy as np
import pytest

from crnoma import analytic as an
from crnoma.analytic import NumericInstabilityError, ScaledParams
from crnoma.model import InvalidParameterError, SystemConfig

G0 = 0.1486983549970350


def sp(K, M, om0=10.0, omM=10.0, g0=G0, gs=1.0):
    return ScaledParams(om0, omM, g0, gs, K, M)


def test_scaled_params_from_config():
    p = ScaledParams.from_config(SystemConfig(K=2, M=3, omega0=2.0, omegaM=0.5, snr_db=10))
    assert p.omega0_t == pytest.approx(20.0)
    assert p.omegaM_t == pytest.approx(5.0)
    assert p.gamma0 == pytest.approx(G0, rel=1e-15)


def test_scaled_params_envelope():
    with pytest.raises(InvalidParameterError):
        sp(8, 9)
    with pytest.raises(InvalidParameterError):
        sp(1, 1, om0=0.0)


def test_j1_j2_values():
    assert an.j1(sp(1, 1, omM=1.0)) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    # (1 - e^-0.1)^6 from mpmath
    assert an.j1(sp(3, 2)) == pytest.approx(7.426724285218982e-07, rel=1e-13)
    assert an.j2(sp(3, 2)) == pytest.approx((1 - math.exp(-0.1)) ** 2, rel=1e-13)
    assert an.j1(sp(2, 2, omM=1e9)) < 1e-30


def test_j1_matches_sampled_frequency():
    rng = np.random.default_rng(3)
    n, hits = 10**7, 0
    for _ in range(10):
        y = rng.exponential(10.0, size=(n // 10, 6))
        hits += int((y.max(axis=1) < 1.0).sum())
    p = an.j1(sp(3, 2))
    assert abs(hits / n - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1 / n


@pytest.mark.parametrize("fn", [an.j3, an.j4, an.k1_appendix, an.alg1_fallback_outage])
def test_vanishing_sic_threshold(fn):
    assert fn(sp(2, 3, g0=1e-12)) == pytest.approx(0.0, abs=1e-9)


def test_k2_without_sic_threshold_is_weak_link_probability():
    p = sp(1, 3, g0=1e-12, omM=4.0)
    assert an.k2_appendix(p) == pytest.approx(-math.expm1(-3 / 4.0), rel=1e-9)


@pytest.mark.parametrize("K,M", [(1, 1), (2, 3), (3, 2), (4, 4), (1, 5)])
@pytest.mark.parametrize("om0,omM", [(1.0, 1.0), (10.0, 3.0), (100.0, 100.0), (5.0, 40.0)])
def test_series_match_quadrature(K, M, om0, omM):
    p = sp(K, M, om0, omM)
    for name, fn in [("j3", an.j3), ("j4", an.j4), ("k1", an.k1_appendix),
                     ("k2", an.k2_appendix), ("alg1_fallback", an.alg1_fallback_outage)]:
        if name in ("k1", "k2") and K != 1:
            continue
        ref = an.quadrature_oracle(name, p)
        assert fn(p) == pytest.approx(ref, rel=1e-9, abs=1e-14), name


def test_printed_j3_differs_from_its_integral():
    p = sp(2, 3, 10.0, 10.0)
    ref = an.quadrature_oracle("j3", p)
    assert an.j3(p) == pytest.approx(ref, rel=1e-9)
    assert abs(an.j3_printed(p) - ref) > 1e-3 * ref
    assert abs(an.j4_printed(p) - an.quadrature_oracle("j4", p)) > 1e-6


def test_k1_exponent_verdict():
    # the two variants only separate when the primary and secondary means differ
    p = sp(1, 4, om0=3.0, omM=20.0)
    ref = an.quadrature_oracle("k1", p)
    assert an.k1_appendix(p) == pytest.approx(ref, rel=1e-9)
    assert abs(an.k1_appendix_printed(p) - ref) > 1e-3 * ref
    q = sp(1, 4, om0=20.0, omM=20.0)
    assert an.k1_appendix(q) == pytest.approx(an.k1_appendix_printed(q), rel=1e-12)


def test_k2_exact_versus_product_form():
    p = sp(1, 1, 5.0, 1.0)
    assert an.k2_appendix(p) == pytest.approx(an.quadrature_oracle("k2", p), rel=1e-9)
    assert an.k2_appendix_printed(p) == pytest.approx(an.quadrature_oracle("k2_printed", p), rel=1e-9)
    assert abs(an.k2_appendix(p) - an.k2_appendix_printed(p)) > 5e-3


@pytest.mark.parametrize("K,M", [(1, 1), (2, 3), (4, 6), (6, 4)])
def test_eligible_min_masses(K, M):
    p = sp(K, M, 10.0, 7.0)
    assert an.quadrature_oracle("y1_mass", p) == pytest.approx(1 - an.j2(p), rel=1e-9)
    assert an.quadrature_oracle("y2_mass", p) == pytest.approx(1 - an.j1(p), rel=1e-9)


def test_unknown_oracle():
    assert an.quadrature_oracle("zero", sp(1, 1)) == 0.0
    with pytest.raises(InvalidParameterError):
        an.quadrature_oracle("nope", sp(1, 1))


def test_low_snr_limit_is_certain_outage():
    cfg = SystemConfig(K=3, M=3, snr_db=-60)
    assert an.outage_alg1_closed(cfg) == pytest.approx(1.0, abs=1e-5)
    assert an.outage_alg1_published(cfg) == pytest.approx(1.0, abs=1e-5)


def test_error_floor():
    cfg = SystemConfig(K=1, M=1, snr_db=60)
    expected = G0 / (1 + G0)  # 0.1294494367038759 from mpmath
    assert an.outage_alg1_closed(cfg) == pytest.approx(expected, abs=1e-4)
    assert an.outage_single_antenna_closed(cfg) == pytest.approx(expected, abs=1e-4)


def test_published_composition_equals_expansion():
    for K, M in [(1, 1), (1, 5), (2, 3), (4, 6), (6, 4)]:
        for snr_db in range(0, 45, 5):
            cfg = SystemConfig(K=K, M=M, snr_db=snr_db)
            composed = an.outage_alg1_published(cfg)
            expanded = an.outage_alg1_published_expanded(ScaledParams.from_config(cfg))
            assert composed == pytest.approx(expanded, rel=1e-12)


def test_exact_and_published_agree_at_high_snr():
    cfg = SystemConfig(K=2, M=3, snr_db=40)
    assert an.outage_alg1_closed(cfg) == pytest.approx(an.outage_alg1_published(cfg), rel=0.05)


def test_single_antenna_alg1_matches_min_gain_form():
    # with K=1 the best-antenna selection leaves no fallback, so both expressions describe the same event
    for snr_db in (0, 10, 20, 30):
        cfg = SystemConfig(K=1, M=1, snr_db=snr_db)
        assert an.outage_alg1_closed(cfg) == pytest.approx(an.outage_single_antenna_closed(cfg), rel=1e-9)


def test_accumulate_detects_cancellation():
    with pytest.raises(NumericInstabilityError):
        an._accumulate([1e8, -1e8, 1e-9], "probe")
    with pytest.raises(NumericInstabilityError):
        an._probability(1.5, "probe")
    assert an._probability(1.0 + 1e-12, "probe") == 1.0


def test_conditional_monte_carlo_for_j3():
    # Pr(an eligible user exists at the best antenna and the weakest of them breaks SIC)
    p = sp(2, 3, 10.0, 10.0)
    rng = np.random.default_rng(8)
    n = 10**6
    X = rng.exponential(p.omega0_t, size=(n, p.K)).max(axis=1)
    Y = rng.exponential(p.omegaM_t, size=(n, p.M))
    Ymin = np.where(Y >= p.gammaS, Y, np.inf).min(axis=1)
    event = np.isfinite(Ymin) & (X < p.gamma0 * (1 + np.where(np.isfinite(Ymin), Ymin, 0)))
    freq = event.mean()
    ref = an.j3(p)
    assert abs(freq - ref) <= 3 * math.sqrt(ref * (1 - ref) / n)
