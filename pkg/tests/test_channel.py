import numpy as np
import pytest
from scipy import stats

from crnoma.channel import (
    ChannelRealization,
    make_stream,
    sample_imperfect,
    sample_imperfect_batch,
    sample_perfect,
    sample_perfect_batch,
)
from crnoma.model import InvalidParameterError, SystemConfig

N = 10**6


def test_unit_mean_primary_power():
    cfg = SystemConfig(K=1, M=1)
    b = sample_perfect_batch(cfg, make_stream(1, 0), N)
    P, _ = b.true_gains()
    assert P.mean() == pytest.approx(1.0, abs=0.004)


def test_means_follow_config():
    cfg = SystemConfig(K=2, M=3, omega0=2.0, omegaM=0.5)
    P, S = sample_perfect_batch(cfg, make_stream(2, 0), N // 4).true_gains()
    # exponential gains: std = mean
    assert abs(P.mean() - 2.0) < 3 * 2.0 / np.sqrt(P.size)
    assert abs(S.mean() - 0.5) < 3 * 0.5 / np.sqrt(S.size)


def test_coefficients_circularly_symmetric():
    cfg = SystemConfig(K=1, M=1)
    h = sample_perfect_batch(cfg, make_stream(3, 0), N).primary[:, 0]
    assert abs(h.mean()) < 0.005
    assert abs(np.mean(h * h)) < 0.005      # pseudo-covariance vanishes


def test_determinism():
    cfg = SystemConfig(K=3, M=2)
    a = sample_perfect(cfg, make_stream(42, 7))
    b = sample_perfect(cfg, make_stream(42, 7))
    np.testing.assert_array_equal(a.primary, b.primary)
    np.testing.assert_array_equal(a.secondary, b.secondary)
    c = sample_perfect(cfg, make_stream(42, 8))
    assert not np.array_equal(a.primary, c.primary)


def test_stream_independent_of_creation_order():
    first = make_stream(5, 3).standard_normal(4)
    make_stream(5, 1).standard_normal(100)
    again = make_stream(5, 3).standard_normal(4)
    np.testing.assert_array_equal(first, again)


def test_secondary_gain_is_exponential():
    cfg = SystemConfig(K=1, M=1, omegaM=0.7)
    _, S = sample_perfect_batch(cfg, make_stream(11, 0), 10**5).true_gains()
    res = stats.kstest(S.ravel(), stats.expon(scale=0.7).cdf)
    assert res.pvalue > 0.01


def test_distinct_coefficients_uncorrelated():
    cfg = SystemConfig(K=2, M=2)
    b = sample_perfect_batch(cfg, make_stream(12, 0), N)
    P, S = b.true_gains()
    pairs = [(P[:, 0], P[:, 1]), (P[:, 0], S[:, 0, 0]), (S[:, 0, 1], S[:, 1, 1])]
    for u, v in pairs:
        assert abs(np.corrcoef(u, v)[0, 1]) < 0.01


def test_imperfect_zero_error_is_perfect():
    cfg = SystemConfig(K=3, M=4, sigma_e_sq=0.0)
    a = sample_imperfect_batch(cfg, make_stream(9, 1), 1000)
    b = sample_perfect_batch(cfg, make_stream(9, 1), 1000)
    np.testing.assert_array_equal(a.primary, b.primary)
    np.testing.assert_array_equal(a.secondary, b.secondary)
    assert not a.has_estimates
    r = sample_imperfect(cfg, make_stream(9, 2))
    assert r.estimated_primary is None


def test_imperfect_variances():
    cfg = SystemConfig(K=1, M=1, sigma_e_sq=1.0)
    b = sample_imperfect_batch(cfg, make_stream(13, 0), N)
    est = np.concatenate([b.estimated_primary.ravel(), b.estimated_secondary.ravel()])
    true = np.concatenate([b.primary.ravel(), b.secondary.ravel()])
    # Var(h_hat) = 1 + s2 = 2, Var(h) = Gamma^2 (1+s2) + s2/(1+s2) = 1
    assert np.mean(np.abs(est) ** 2) == pytest.approx(2.0, rel=0.005)
    assert np.mean(np.abs(true) ** 2) == pytest.approx(1.0, rel=0.005)


def test_imperfect_correlation():
    cfg = SystemConfig(K=1, M=1, sigma_e_sq=0.1)
    b = sample_imperfect_batch(cfg, make_stream(14, 0), N)
    h, hh = b.primary[:, 0], b.estimated_primary[:, 0]
    rho = np.abs(np.mean(h * np.conj(hh))) / np.sqrt(np.mean(np.abs(h) ** 2) * np.mean(np.abs(hh) ** 2))
    # sqrt(1/(1+s2)) = 0.95346...
    assert rho == pytest.approx(0.9534625892455923, abs=0.002)


def test_imperfect_requires_unit_means():
    cfg = SystemConfig(K=1, M=1, omega0=2.0, sigma_e_sq=0.1)
    with pytest.raises(InvalidParameterError):
        sample_imperfect(cfg, make_stream(1, 1))


def test_from_gains_roundtrip():
    r = ChannelRealization.from_gains([2.0, 0.5], [[0.1, 0.2], [0.4, 0.3]])
    P, S = r.true_gains()
    np.testing.assert_allclose(P, [2.0, 0.5])
    np.testing.assert_allclose(S, [[0.1, 0.2], [0.4, 0.3]])
    assert (r.K, r.M) == (2, 2)
