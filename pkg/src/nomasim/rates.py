"""Two-user downlink rate calculus: OMA, NOMA with SIC, outage, CR allocation.

Power allocation coefficients are power fractions with ``a_weak + a_strong = 1``.
All functions accept scalars or numpy arrays of trials in the budget fields.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LN2 = np.log(2.0)


class AllocationSource(enum.Enum):
    FIXED = "Fixed"
    COGNITIVE_RADIO = "CognitiveRadio"


@dataclass(frozen=True)
class PowerAllocation:
    a_weak: float | np.ndarray
    a_strong: float | np.ndarray
    source: AllocationSource = AllocationSource.FIXED
    # CR allocations only: True where even a_weak = 1 misses the weak user's target.
    primary_outage: bool | np.ndarray = False

    def __post_init__(self):
        aw = np.asarray(self.a_weak, dtype=float)
        as_ = np.asarray(self.a_strong, dtype=float)
        if np.any(aw < 0) or np.any(as_ < 0):
            raise ValueError("power fractions must be non-negative")
        if np.any(np.abs(aw + as_ - 1) > 1e-12):
            raise ValueError("power fractions must sum to one")

    @classmethod
    def fixed(cls, a_weak: float, a_strong: float | None = None, strict: bool = False):
        if a_strong is None:
            a_strong = 1.0 - a_weak
        if strict and a_weak < a_strong:
            raise ValueError(
                f"strict NOMA policy needs a_weak >= a_strong, got ({a_weak}, {a_strong})"
            )
        return cls(float(a_weak), float(a_strong), AllocationSource.FIXED)


@dataclass(frozen=True)
class LinkBudget:
    rho: float | np.ndarray
    h_weak_sq: float | np.ndarray
    h_strong_sq: float | np.ndarray

    def __post_init__(self):
        for name in ("rho", "h_weak_sq", "h_strong_sq"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def ordered(cls, rho, g1, g2) -> "LinkBudget":
        """Assign roles by instantaneous gain: the smaller |h|^2 is the weak user."""
        return cls(rho, np.minimum(g1, g2), np.maximum(g1, g2))


class RatePair(NamedTuple):
    rate_weak: float | np.ndarray
    rate_strong: float | np.ndarray


class TargetRates(NamedTuple):
    r_weak: float
    r_strong: float


class OutageFlags(NamedTuple):
    weak_outage: bool | np.ndarray
    strong_outage: bool | np.ndarray


def snr_threshold(rate):
    """SINR needed to support ``rate`` bits per channel use."""
    return np.expm1(np.multiply(rate, LN2))


def capacity(snr):
    """``log2(1 + snr)``, accurate for small ``snr``."""
    return np.log1p(snr) / LN2


def oma_rates(budget: LinkBudget) -> RatePair:
    rho = budget.rho
    return RatePair(
        0.5 * capacity(rho * budget.h_weak_sq),
        0.5 * capacity(rho * budget.h_strong_sq),
    )


def weak_sinr(rho, a_weak, a_strong, g):
    """SINR of the weak user's message at a receiver with gain ``g``,
    treating the strong user's message as noise."""
    return rho * a_weak * g / (1 + rho * a_strong * g)


def noma_rates(budget: LinkBudget, alloc: PowerAllocation) -> RatePair:
    """Achievable rates, assuming the strong user's SIC succeeds."""
    rho = budget.rho
    return RatePair(
        capacity(weak_sinr(rho, alloc.a_weak, alloc.a_strong, budget.h_weak_sq)),
        capacity(rho * alloc.a_strong * budget.h_strong_sq),
    )


def sum_rate(pair: RatePair):
    return pair.rate_weak + pair.rate_strong


def high_snr_sum_rates(budget: LinkBudget) -> tuple[float, float]:
    """High-SNR sum-rate approximations ``(oma, noma)``.

    Raises ``ValueError`` outside the regime ``rho |h|^2 > 1`` for both users.
    """
    sa = budget.rho * budget.h_weak_sq
    sb = budget.rho * budget.h_strong_sq
    if np.any(sa <= 1) or np.any(sb <= 1):
        raise ValueError("high-SNR approximation needs rho*|h|^2 > 1 for both users")
    return 0.5 * np.log2(sa) + 0.5 * np.log2(sb), np.log2(sb)


def noma_outage_flags(
    budget: LinkBudget, alloc: PowerAllocation, targets: TargetRates
) -> OutageFlags:
    rho, aw, as_ = budget.rho, alloc.a_weak, alloc.a_strong
    weak = capacity(weak_sinr(rho, aw, as_, budget.h_weak_sq)) < targets.r_weak
    sic_fail = capacity(weak_sinr(rho, aw, as_, budget.h_strong_sq)) < targets.r_weak
    own_fail = capacity(rho * as_ * budget.h_strong_sq) < targets.r_strong
    return OutageFlags(weak, sic_fail | own_fail)


def cr_weak_fraction(rho, g, r_weak):
    """Smallest weak-user power fraction meeting ``r_weak``.

    Returns ``(a_weak, feasible)``. Where the target cannot be met even with all
    power, ``a_weak`` is 1 and ``feasible`` is False.
    """
    eps = snr_threshold(np.asarray(r_weak, dtype=float))
    snr = np.asarray(rho * g, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = eps * (snr + 1) / (snr * (1 + eps))
    a = np.where(eps == 0, 0.0, a)
    feasible = snr >= eps
    a = np.where(feasible, np.minimum(a, 1.0), 1.0)
    if a.ndim == 0:
        return float(a), bool(feasible)
    return a, feasible


def cr_power_allocation(budget: LinkBudget, r_weak: float) -> PowerAllocation:
    """Cognitive-radio style allocation: the weak (primary) user gets exactly
    the power it needs for ``r_weak``, the strong user gets the rest."""
    if np.any(np.asarray(r_weak) < 0):
        raise ValueError("r_weak must be non-negative")
    a, feasible = cr_weak_fraction(budget.rho, budget.h_weak_sq, r_weak)
    outage = ~feasible if isinstance(feasible, np.ndarray) else not feasible
    return PowerAllocation(a, 1.0 - a, AllocationSource.COGNITIVE_RADIO, outage)


def weak_outage_closed_form(rho, a_weak, a_strong, mean_gain, r_weak):
    """Rayleigh outage of the non-cooperative weak user.

    ``1 - exp(-eps / ((a_weak - eps a_strong) rho mean_gain))``; certain outage
    when ``a_weak <= eps a_strong``.
    """
    eps = snr_threshold(r_weak)
    margin = a_weak - eps * a_strong
    if margin <= 0:
        return 1.0
    return -np.expm1(-eps / (margin * rho * mean_gain))
