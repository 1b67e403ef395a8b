"""Rayleigh channel realizations, with optional imperfect-CSI estimates.

Under imperfect CSI the estimates are drawn first and the true channels are
derived from them, ``h = Gamma * h_hat + h_tilde`` with ``Gamma = 1/(1+s2)``
and ``h_tilde ~ CN(0, s2/(1+s2))``, where ``s2`` is the error variance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import InvalidParameterError, SystemConfig


def make_stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the substream identified by ``(seed, *key)``.

    The substream depends only on the key, never on how many streams were
    created before it, which is what makes block-parallel runs reproducible.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _complex_gaussian(rng: np.random.Generator, variance: float, shape: tuple) -> np.ndarray:
    z = rng.standard_normal((2,) + shape)
    out = z[0] + 1j * z[1]
    out *= np.sqrt(variance / 2.0)
    return out


@dataclass(frozen=True)
class ChannelRealization:
    primary: np.ndarray                 # (K,) complex
    secondary: np.ndarray               # (M, K) complex
    estimated_primary: Optional[np.ndarray] = None
    estimated_secondary: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return self.primary.shape[0]

    @property
    def M(self) -> int:
        return self.secondary.shape[0]

    @property
    def has_estimates(self) -> bool:
        return self.estimated_primary is not None

    def true_gains(self) -> tuple[np.ndarray, np.ndarray]:
        return np.abs(self.primary) ** 2, np.abs(self.secondary) ** 2

    def decision_gains(self) -> tuple[np.ndarray, np.ndarray]:
        """Gains the base station acts on: the estimates when present."""
        if self.has_estimates:
            return np.abs(self.estimated_primary) ** 2, np.abs(self.estimated_secondary) ** 2
        return self.true_gains()

    @classmethod
    def from_gains(cls, primary_gains, secondary_gains, est_primary_gains=None, est_secondary_gains=None):
        """Build a realization with real, non-negative coefficients (handy for tests)."""
        p = np.sqrt(np.asarray(primary_gains, dtype=float)).astype(complex)
        s = np.sqrt(np.atleast_2d(np.asarray(secondary_gains, dtype=float))).astype(complex)
        if s.shape[1] != p.shape[0]:
            raise InvalidParameterError("secondary gains must be an M x K matrix")
        ep = es = None
        if est_primary_gains is not None:
            ep = np.sqrt(np.asarray(est_primary_gains, dtype=float)).astype(complex)
            es = np.sqrt(np.atleast_2d(np.asarray(est_secondary_gains, dtype=float))).astype(complex)
        return cls(p, s, ep, es)


@dataclass(frozen=True)
class ChannelBatch:
    """``n`` independent realizations stacked along the first axis."""

    primary: np.ndarray                 # (n, K)
    secondary: np.ndarray               # (n, M, K)
    estimated_primary: Optional[np.ndarray] = None
    estimated_secondary: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.primary.shape[0]

    @property
    def has_estimates(self) -> bool:
        return self.estimated_primary is not None

    def true_gains(self) -> tuple[np.ndarray, np.ndarray]:
        return _abs2(self.primary), _abs2(self.secondary)

    def decision_gains(self) -> tuple[np.ndarray, np.ndarray]:
        if self.has_estimates:
            return _abs2(self.estimated_primary), _abs2(self.estimated_secondary)
        return self.true_gains()

    def realization(self, i: int) -> ChannelRealization:
        if self.has_estimates:
            return ChannelRealization(self.primary[i], self.secondary[i],
                                      self.estimated_primary[i], self.estimated_secondary[i])
        return ChannelRealization(self.primary[i], self.secondary[i])


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real ** 2 + z.imag ** 2


def sample_perfect_batch(cfg: SystemConfig, rng: np.random.Generator, n: int) -> ChannelBatch:
    primary = _complex_gaussian(rng, cfg.omega0, (n, cfg.K))
    secondary = _complex_gaussian(rng, cfg.omegaM, (n, cfg.M, cfg.K))
    return ChannelBatch(primary, secondary)


def sample_imperfect_batch(cfg: SystemConfig, rng: np.random.Generator, n: int) -> ChannelBatch:
    s2 = cfg.sigma_e_sq
    if s2 == 0:
        return sample_perfect_batch(cfg, rng, n)
    if cfg.omega0 != 1 or cfg.omegaM != 1:
        raise InvalidParameterError("the imperfect-CSI model assumes omega0 = omegaM = 1")
    gamma = 1.0 / (1.0 + s2)
    resid = s2 / (1.0 + s2)
    est_p = _complex_gaussian(rng, 1.0 + s2, (n, cfg.K))
    est_s = _complex_gaussian(rng, 1.0 + s2, (n, cfg.M, cfg.K))
    true_p = gamma * est_p + _complex_gaussian(rng, resid, (n, cfg.K))
    true_s = gamma * est_s + _complex_gaussian(rng, resid, (n, cfg.M, cfg.K))
    return ChannelBatch(true_p, true_s, est_p, est_s)


def sample_batch(cfg: SystemConfig, rng: np.random.Generator, n: int) -> ChannelBatch:
    if cfg.sigma_e_sq > 0:
        return sample_imperfect_batch(cfg, rng, n)
    return sample_perfect_batch(cfg, rng, n)


def sample_perfect(cfg: SystemConfig, stream: np.random.Generator) -> ChannelRealization:
    return sample_perfect_batch(cfg, stream, 1).realization(0)


def sample_imperfect(cfg: SystemConfig, stream: np.random.Generator) -> ChannelRealization:
    return sample_imperfect_batch(cfg, stream, 1).realization(0)
