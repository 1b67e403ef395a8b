"""Closed-form outage probabilities and their quadrature oracles.

All expressions work with SNR-scaled channel means ``omega0_t = snr*omega0``
and ``omegaM_t = snr*omegaM``. Finite alternating sums are accumulated with
``math.fsum`` and refused when their cancellation exceeds what double
precision can resolve.

Two families are provided for Algorithm 1:

* :func:`outage_alg1_closed` is the exact outage probability of the
  selection rule as implemented (pre-check, best-antenna branch and the
  fallback joint search).
* :func:`outage_alg1_published` is the composed expression
  ``J1 + (1-J1)[(1-J2)J3 + J2 J4]``. It treats J3 as if it were conditional
  and models the fallback antenna's primary gain as unordered, so it only
  agrees with simulation once ``J1`` and ``J2`` are negligible
  (moderate-to-high SNR).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .model import InvalidParameterError, SystemConfig, Thresholds

MAX_KM = 64
_EPS = np.finfo(float).eps
_ABS_NOISE_LIMIT = 1e-10
_RANGE_GUARD = 1e-9


class NumericInstabilityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ScaledParams:
    omega0_t: float
    omegaM_t: float
    gamma0: float
    gammaS: float
    K: int
    M: int

    def __post_init__(self):
        if not (self.omega0_t > 0 and self.omegaM_t > 0 and self.gamma0 > 0 and self.gammaS > 0):
            raise InvalidParameterError("scaled parameters must be positive")
        if self.K < 1 or self.M < 1:
            raise InvalidParameterError("K and M must be positive")
        if self.K * self.M > MAX_KM:
            raise InvalidParameterError(
                f"K*M = {self.K * self.M} is outside the validated envelope K*M <= {MAX_KM}")

    @classmethod
    def from_config(cls, cfg: SystemConfig, th: Thresholds | None = None) -> "ScaledParams":
        th = th or cfg.thresholds()
        return cls(cfg.snr * cfg.omega0, cfg.snr * cfg.omegaM, th.gamma0, th.gammaS, cfg.K, cfg.M)

    @property
    def F(self) -> float:
        """Probability that one secondary link is below its rate target."""
        return -math.expm1(-self.gammaS / self.omegaM_t)

    @property
    def q0(self) -> float:
        return self.gamma0 / self.omega0_t


ParamsLike = Union[ScaledParams, SystemConfig]


def _params(p: ParamsLike, th: Thresholds | None = None) -> ScaledParams:
    if isinstance(p, SystemConfig):
        return ScaledParams.from_config(p, th)
    return p


def _accumulate(terms, what: str) -> float:
    terms = list(terms)
    total = math.fsum(terms)
    noise = 8 * len(terms) * _EPS * math.fsum(abs(t) for t in terms)
    if noise > _ABS_NOISE_LIMIT:
        raise NumericInstabilityError(
            f"{what}: cancellation too severe (rounding noise ~{noise:.1e})")
    return total


def _probability(value: float, what: str) -> float:
    if not (-_RANGE_GUARD <= value <= 1 + _RANGE_GUARD):
        raise NumericInstabilityError(f"{what} evaluated to {value!r}, outside [0, 1]")
    return min(max(value, 0.0), 1.0)


# --- Algorithm 1 chain ----------------------------------------------------

def j1(p: ParamsLike) -> float:
    """No secondary link anywhere meets its target."""
    p = _params(p)
    return p.F ** (p.M * p.K)


def j2(p: ParamsLike) -> float:
    """No secondary meets its target at the selected antenna."""
    p = _params(p)
    return p.F ** p.M


def _j3_terms(p: ScaledParams, printed: bool):
    F, q, Om, gs = p.F, p.q0, p.omegaM_t, p.gammaS
    for a in range(p.K + 1):
        qa = q if printed else a * q
        for b in range(p.M):
            rate = qa + (b + 1) / Om
            yield ((-1) ** a * math.comb(p.K, a) * math.comb(p.M - 1, b) * F ** (p.M - 1 - b)
                   * math.exp(-gs * rate - a * q) / rate * p.M / Om)


def j3(p: ParamsLike) -> float:
    """Joint probability that the best primary antenna has an eligible secondary
    and SIC still fails against the weakest eligible one."""
    p = _params(p)
    return _probability(_accumulate(_j3_terms(p, printed=False), "J3"), "J3")


def j3_printed(p: ParamsLike) -> float:
    """J3 sum exactly as typeset, with ``gamma0/omega0_t`` unscaled by ``a``.

    Kept only to document that it does not equal its defining integral.
    """
    p = _params(p)
    return _accumulate(_j3_terms(p, printed=True), "J3 (printed)")


def _j4_terms(p: ScaledParams, printed: bool):
    F, q, Om, gs = p.F, p.q0, p.omegaM_t, p.gammaS
    N = p.K * p.M
    for c in (0, 1):
        qc = q if printed else c * q
        for d in range(N):
            rate = qc + (d + 1) / Om
            yield ((-1) ** c * math.comb(N - 1, d) * F ** (N - 1 - d)
                   * math.exp(-gs * rate - c * q) / rate * N / Om)


def j4(p: ParamsLike) -> float:
    """SIC failure over the weakest eligible link among all K*M links, with an
    unordered primary gain."""
    p = _params(p)
    return _probability(_accumulate(_j4_terms(p, printed=False), "J4"), "J4")


def j4_printed(p: ParamsLike) -> float:
    p = _params(p)
    return _accumulate(_j4_terms(p, printed=True), "J4 (printed)")


def _fallback_weights(K: int) -> list[float]:
    # CDF of a uniformly chosen non-maximal gain among K i.i.d. ones is
    # (K F - F**K)/(K-1); expanded in powers of exp(-x/omega0_t).
    w = [0.0] * (K + 1)
    w[0] = 1.0
    for a in range(2, K + 1):
        w[a] = -((-1) ** a) * math.comb(K, a) / (K - 1)
    return w


def alg1_fallback_outage(p: ParamsLike) -> float:
    """Probability that Algorithm 1 takes the fallback branch and then fails SIC."""
    p = _params(p)
    if p.K == 1:
        return 0.0
    F, q, Om, gs = p.F, p.q0, p.omegaM_t, p.gammaS
    N = (p.K - 1) * p.M
    w = _fallback_weights(p.K)
    terms = []
    for a in range(p.K + 1):
        if w[a] == 0.0:
            continue
        for d in range(N):
            rate = a * q + (d + 1) / Om
            terms.append(F ** p.M * w[a] * math.comb(N - 1, d) * F ** (N - 1 - d)
                         * math.exp(-gs * rate - a * q) / rate * N / Om)
    value = _accumulate(terms, "fallback term")
    return _probability(value, "fallback term")


def outage_alg1_closed(cfg: ParamsLike, th: Thresholds | None = None) -> float:
    """Exact outage probability of Algorithm 1 under perfect CSI."""
    p = _params(cfg, th)
    return _probability(j1(p) + j3(p) + alg1_fallback_outage(p), "P_out(Alg1)")


def outage_alg1_published(cfg: ParamsLike, th: Thresholds | None = None) -> float:
    """``J1 + (1-J1)[(1-J2)J3 + J2 J4]``, asserted against the expanded form."""
    p = _params(cfg, th)
    J1, J2 = j1(p), j2(p)
    composed = J1 + (1 - J1) * ((1 - J2) * j3(p) + J2 * j4(p))
    expanded = outage_alg1_published_expanded(p)
    if abs(composed - expanded) > 1e-12 * max(abs(expanded), 1e-300):
        raise NumericInstabilityError(
            f"composed ({composed!r}) and expanded ({expanded!r}) forms disagree")
    return _probability(composed, "P_out(Alg1, published)")


def outage_alg1_published_expanded(p: ParamsLike) -> float:
    """The same expression written out as one formula, independent of j1..j4.

    Term arithmetic mirrors the series in :func:`j3`/:func:`j4` so that the
    comparison isolates the outer assembly from summation-order rounding.
    """
    p = _params(p)
    M, K, N = p.M, p.K, p.K * p.M
    Om, gs, g0, O0 = p.omegaM_t, p.gammaS, p.gamma0, p.omega0_t
    base = -math.expm1(-gs / Om)
    q = g0 / O0
    first = []
    for a in range(K + 1):
        for b in range(M):
            den = a * q + (b + 1) / Om
            first.append((-1) ** a * math.comb(K, a) * math.comb(M - 1, b) * base ** (M - 1 - b)
                         * math.exp(-gs * den - a * q) / den * M / Om)
    second = []
    for c in range(2):
        for d in range(N):
            den = c * q + (d + 1) / Om
            second.append((-1) ** c * math.comb(N - 1, d) * base ** (N - 1 - d)
                          * math.exp(-gs * den - c * q) / den * N / Om)
    bracket = ((1 - base ** M) * math.fsum(first) + base ** M * math.fsum(second))
    return (1 - base ** (M * K)) * bracket + base ** (M * K)


# --- single-antenna, weakest-secondary baseline ---------------------------

def _k1_sum(p: ScaledParams, prefactor: float) -> float:
    O1, q = p.omegaM_t, p.q0
    terms = []
    for s in range(p.M):
        for pp in range(s + 1):
            terms.append(prefactor * (-1) ** (s + pp) * math.comb(p.M - 1, s) * math.comb(s, pp)
                         / ((pp + 1) / O1 + q))
    return _accumulate(terms, "K1 sum")


def k1_appendix(p: ParamsLike) -> float:
    """P(X / (1 + Y_min) < gamma0) with the ``exp(-gamma0/omega0_t)`` prefactor."""
    p = _params(p)
    value = 1.0 - _k1_sum(p, p.M / p.omegaM_t * math.exp(-p.q0))
    return _probability(value, "K1")


def k1_appendix_printed(p: ParamsLike) -> float:
    """Variant with the typeset prefactor ``exp(-gamma0/omegaM_t)``."""
    p = _params(p)
    return 1.0 - _k1_sum(p, p.M / p.omegaM_t * math.exp(-p.gamma0 / p.omegaM_t))


def _min_cdf(p: ScaledParams, y: float) -> float:
    F1 = -math.expm1(-y / p.omegaM_t)
    terms = [p.M * (-1) ** s / (1 + s) * math.comb(p.M - 1, s) * F1 ** (s + 1) for s in range(p.M)]
    return _accumulate(terms, "CDF of the weakest secondary")


def k2_appendix(p: ParamsLike) -> float:
    """P(X / (1 + Y_min) >= gamma0, Y_min < gammaS), the exact joint event."""
    p = _params(p)
    O1, q, gs = p.omegaM_t, p.q0, p.gammaS
    pre = p.M / O1 * math.exp(-q)
    terms = []
    for s in range(p.M):
        for pp in range(s + 1):
            rate = (pp + 1) / O1 + q
            terms.append(pre * (-1) ** (s + pp) * math.comb(p.M - 1, s) * math.comb(s, pp)
                         * -math.expm1(-gs * rate) / rate)
    value = _accumulate(terms, "K2 sum")
    return _probability(value, "K2")


def k2_appendix_printed(p: ParamsLike) -> float:
    """Typeset product form ``(1 - K1) * F_Ymin(gammaS)``, which treats the two
    events as independent."""
    p = _params(p)
    return (1.0 - k1_appendix(p)) * _min_cdf(p, p.gammaS)


def outage_single_antenna_closed(cfg: ParamsLike, th: Thresholds | None = None) -> float:
    p = _params(cfg, th)
    if p.K != 1:
        raise InvalidParameterError("the single-antenna closed form needs K = 1")
    return _probability(k1_appendix(p) + k2_appendix(p), "P_A")


def outage_single_antenna_printed(cfg: ParamsLike, th: Thresholds | None = None) -> float:
    p = _params(cfg, th)
    if p.K != 1:
        raise InvalidParameterError("the single-antenna closed form needs K = 1")
    return k1_appendix(p) + k2_appendix_printed(p)


# --- quadrature oracles ---------------------------------------------------
# Integrands are assembled from the CDF of the primary gain and order-statistic
# densities, never from the series above.

def _cdf_x(p: ScaledParams, x):
    return -np.expm1(-x / p.omega0_t)


def _eligible_min_density(p: ScaledParams, y, n: int):
    """Defective density of the weakest eligible link among ``n`` i.i.d. links."""
    e = np.exp(-y / p.omegaM_t)
    return n / p.omegaM_t * e * (p.F + e) ** (n - 1)


def _min_density(p: ScaledParams, y):
    e = np.exp(-y / p.omegaM_t)
    return p.M / p.omegaM_t * e * e ** (p.M - 1)


def _tail(func, start: float, scale: float, epsabs: float) -> float:
    value, _ = integrate.quad(lambda t: func(start + scale * t) * scale, 0.0, np.inf,
                              epsabs=epsabs, epsrel=1e-12, limit=400)
    return value


def _finite(func, lo: float, hi: float, epsabs: float) -> float:
    value, _ = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=1e-12, limit=400)
    return value


def _non_max_cdf(p: ScaledParams, x):
    F = _cdf_x(p, x)
    return (p.K * F - F ** p.K) / (p.K - 1)


ORACLES = ("zero", "j3", "j4", "alg1_fallback", "k1", "k2", "k2_printed", "y1_mass", "y2_mass")


def quadrature_oracle(which: str, p: ParamsLike, epsabs: float = 1e-13) -> float:
    """Adaptive numerical integration of the integral behind a closed form.

    ``which`` is one of :data:`ORACLES`. Semi-infinite ranges are shifted and
    scaled to the secondary-link mean before QUADPACK's infinite-range map.
    """
    p = _params(p)
    g0, gs, Om = p.gamma0, p.gammaS, p.omegaM_t
    if which == "zero":
        return _finite(lambda y: 0.0, 0.0, 1.0, epsabs)
    if which == "j3":
        return _tail(lambda y: _cdf_x(p, g0 * (1 + y)) ** p.K * _eligible_min_density(p, y, p.M),
                     gs, Om, epsabs)
    if which == "j4":
        return _tail(lambda y: _cdf_x(p, g0 * (1 + y)) * _eligible_min_density(p, y, p.K * p.M),
                     gs, Om, epsabs)
    if which == "alg1_fallback":
        if p.K == 1:
            return 0.0
        n = (p.K - 1) * p.M
        inner = _tail(lambda y: _non_max_cdf(p, g0 * (1 + y)) * _eligible_min_density(p, y, n),
                      gs, Om, epsabs)
        return p.F ** p.M * inner
    if which == "k1":
        return _tail(lambda y: _cdf_x(p, g0 * (1 + y)) * _min_density(p, y), 0.0, Om / p.M, epsabs)
    if which == "k2":
        return _finite(lambda y: (1 - _cdf_x(p, g0 * (1 + y))) * _min_density(p, y), 0.0, gs, epsabs)
    if which == "k2_printed":
        k1 = quadrature_oracle("k1", p, epsabs)
        return (1 - k1) * _finite(lambda y: _min_density(p, y), 0.0, gs, epsabs)
    if which == "y1_mass":
        return _tail(lambda y: _eligible_min_density(p, y, p.M), gs, Om, epsabs)
    if which == "y2_mass":
        return _tail(lambda y: _eligible_min_density(p, y, p.K * p.M), gs, Om, epsabs)
    raise InvalidParameterError(f"unknown oracle {which!r}; choose from {ORACLES}")
