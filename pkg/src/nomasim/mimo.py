"""MIMO NOMA: zero-forcing cluster beamforming and spatial multiplexing rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import MimoChannel, complex_normal
from .rates import LinkBudget, PowerAllocation, RatePair, capacity, noma_rates

LN2 = np.log(2.0)


@dataclass(frozen=True)
class ClusterScenario:
    """Four users in two clusters ((1, 3), (2, 4)) with h3 = c h1 and h2 = c' h4.

    ``channels`` holds h1..h4 as rows of a ``4 x M`` complex array.
    """

    h1: np.ndarray
    h4: np.ndarray
    c: complex
    c_prime: complex

    @property
    def channels(self) -> np.ndarray:
        return np.stack([self.h1, self.c_prime * self.h4, self.c * self.h1, self.h4])

    @property
    def antennas(self) -> int:
        return self.h1.shape[0]

    @property
    def clusters(self) -> tuple[tuple[int, int], tuple[int, int]]:
        # zero-based user indices
        return (0, 2), (1, 3)

    @classmethod
    def random(cls, rng: np.random.Generator, antennas: int) -> "ClusterScenario":
        h1 = complex_normal(rng, antennas)
        h4 = complex_normal(rng, antennas)
        c = complex_normal(rng)
        c_prime = complex_normal(rng)
        return cls(h1, h4, c, c_prime)


class BeamSet(NamedTuple):
    w1: np.ndarray
    w2: np.ndarray


def _project_out(h: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Component of ``h`` orthogonal to span{u}."""
    uu = u / np.linalg.norm(u)
    return h - uu * np.vdot(uu, h)


def zf_cluster_beams(scenario: ClusterScenario, tol: float = 1e-9) -> BeamSet:
    """Unit-norm beams, each orthogonal to every channel of the other cluster."""
    h1, h4 = scenario.h1, scenario.h4
    if scenario.antennas < 2:
        raise ValueError("zero-forcing needs at least 2 antennas")
    beams = []
    for target, other in ((h1, h4), (h4, h1)):
        v = _project_out(target, other)
        # a second pass removes the residual left by the first subtraction
        v = _project_out(v, other)
        norm = np.linalg.norm(v)
        if norm <= tol * np.linalg.norm(target):
            raise ValueError("cluster channels are collinear; zero-forcing is infeasible")
        beams.append(v / norm)
    return BeamSet(*beams)


def effective_gains(scenario: ClusterScenario, beams: BeamSet) -> np.ndarray:
    """``|w_m^H h_k|^2`` as a ``2 x 4`` array (beam, user)."""
    w = np.stack(beams)
    return np.abs(w.conj() @ scenario.channels.T) ** 2


def cluster_noma_rates(
    scenario: ClusterScenario, beams: BeamSet, alloc: PowerAllocation, rho: float
) -> np.ndarray:
    """Per-user rates (users 1..4) with two-user NOMA inside each cluster.

    Each beam carries power ``rho``. Within a cluster, the user with the smaller
    effective gain is the weak user and gets ``alloc.a_weak``; leakage from the
    other beam is kept as interference.
    """
    gains = effective_gains(scenario, beams)
    rates = np.zeros(4)
    for m, (i, j) in enumerate(scenario.clusters):
        other = 1 - m
        weak, strong = (i, j) if gains[m, i] <= gains[m, j] else (j, i)
        # leakage from the other beam, normalised into the noise term
        n_weak = 1 + rho * gains[other, weak]
        n_strong = 1 + rho * gains[other, strong]
        budget = LinkBudget(rho / n_weak, gains[m, weak], 0.0)
        rates[weak] = noma_rates(budget, alloc).rate_weak
        rates[strong] = capacity(rho * alloc.a_strong * gains[m, strong] / n_strong)
    return rates


@dataclass(frozen=True)
class SmConfig:
    antennas: int
    power_strong: float
    power_weak: float
    weak_gain_scale: float = 0.25

    def __post_init__(self):
        if self.antennas < 1:
            raise ValueError("antennas must be >= 1")
        if self.power_strong < 0 or self.power_weak < 0:
            raise ValueError("powers must be non-negative")
        if not 0 < self.weak_gain_scale <= 1:
            raise ValueError("weak_gain_scale must be in (0, 1]")


def logdet2(a: np.ndarray) -> np.ndarray:
    """log2 det of Hermitian positive-definite matrices (batched)."""
    sign, ld = np.linalg.slogdet(a)
    if np.any(sign.real <= 0):
        raise ValueError("matrix is not positive definite")
    return ld / LN2


def sm_rates(
    config: SmConfig, h_strong: MimoChannel, h_weak: MimoChannel
) -> tuple[RatePair, RatePair]:
    """NOMA and TDMA achievable rates with white input covariance.

    NOMA: the strong user decodes after SIC; the weak user treats the strong
    user's streams as noise. TDMA: each user gets half the time.
    Channels may carry a leading batch dimension.
    """
    m = config.antennas
    if h_strong.antennas != m or h_weak.antennas != m:
        raise ValueError(
            f"channel dimension {h_strong.antennas}/{h_weak.antennas} != antennas {m}"
        )
    eye = np.eye(m)
    hs, hw = h_strong.matrix, h_weak.matrix
    gs = hs @ np.swapaxes(hs, -1, -2).conj()
    gw = hw @ np.swapaxes(hw, -1, -2).conj()
    ps, pw = config.power_strong / m, config.power_weak / m

    strong_full = logdet2(eye + ps * gs)
    weak_full = logdet2(eye + pw * gw)
    noma_weak = logdet2(eye + (ps + pw) * gw) - logdet2(eye + ps * gw)
    return RatePair(noma_weak, strong_full), RatePair(0.5 * weak_full, 0.5 * strong_full)
