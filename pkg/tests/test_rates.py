import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nomasim.channel import PathLossModel, Position, draw_scalar_channel, stream
from nomasim.rates import (
    AllocationSource,
    LinkBudget,
    PowerAllocation,
    RatePair,
    TargetRates,
    cr_power_allocation,
    high_snr_sum_rates,
    noma_outage_flags,
    noma_rates,
    oma_rates,
    sum_rate,
    weak_outage_closed_form,
)

FIG4 = PowerAllocation.fixed(4 / 5, 1 / 5)


def bisect_cr(rho, g, r_weak, tol=1e-14):
    """Smallest a in [0, 1] with log2(1 + rho a g / (rho (1 - a) g + 1)) >= r_weak."""
    def rate(a):
        return math.log1p(rho * a * g / (rho * (1 - a) * g + 1)) / math.log(2)

    if rate(0.0) >= r_weak:
        return 0.0
    if rate(1.0) < r_weak:
        return None
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rate(mid) >= r_weak:
            hi = mid
        else:
            lo = mid
    return hi


# --- oma / noma ---------------------------------------------------------------

def test_oma_examples():
    assert oma_rates(LinkBudget(3.0, 1.0, 2.0)).rate_weak == pytest.approx(1.0, abs=1e-15)
    assert oma_rates(LinkBudget(0.0, 0.3, 2.0)) == (0.0, 0.0)
    r = oma_rates(LinkBudget(1000.0, 0.008, 1.0))
    assert r.rate_weak == pytest.approx(0.5 * math.log2(9), rel=1e-14)
    assert r.rate_strong == pytest.approx(0.5 * math.log2(1001), rel=1e-14)
    assert (round(r.rate_weak, 3), round(r.rate_strong, 3)) == (1.585, 4.984)


def test_noma_examples():
    b = LinkBudget(100.0, 0.2, 1.0)
    r = noma_rates(b, PowerAllocation.fixed(1.0, 0.0))
    assert r.rate_strong == 0.0
    assert r.rate_weak == pytest.approx(math.log2(1 + 100 * 0.2), rel=1e-14)
    assert noma_rates(LinkBudget(100.0, 0.0, 1.0), FIG4).rate_weak == 0.0
    r = noma_rates(b, FIG4)
    assert r.rate_weak == pytest.approx(math.log2(4.2), rel=1e-14)
    assert r.rate_strong == pytest.approx(math.log2(21), rel=1e-14)


def test_sum_rate():
    assert sum_rate(RatePair(0.0, 0.0)) == 0.0
    assert sum_rate(RatePair(1.585, 4.984)) == pytest.approx(6.569, abs=1e-12)
    b = LinkBudget(100.0, 0.05, 0.9)
    expected = math.log2(1 + 100 * 0.875 * 0.05 / (1 + 100 * 0.125 * 0.05)) + math.log2(
        1 + 100 * 0.125 * 0.9
    )
    assert sum_rate(noma_rates(b, PowerAllocation.fixed(7 / 8, 1 / 8))) == pytest.approx(
        expected, rel=1e-14
    )


def test_allocation_validation():
    with pytest.raises(ValueError):
        PowerAllocation(0.6, 0.6)
    with pytest.raises(ValueError):
        PowerAllocation(-0.1, 1.1)
    with pytest.raises(ValueError):
        PowerAllocation.fixed(0.3, 0.7, strict=True)
    assert PowerAllocation.fixed(0.3, 0.7).source is AllocationSource.FIXED


def test_budget_validation_and_ordering():
    with pytest.raises(ValueError):
        LinkBudget(-1.0, 0.1, 0.2)
    b = LinkBudget.ordered(10.0, np.array([0.5, 0.1]), np.array([0.2, 0.3]))
    np.testing.assert_array_equal(b.h_weak_sq, [0.2, 0.1])
    np.testing.assert_array_equal(b.h_strong_sq, [0.5, 0.3])


# --- high SNR -----------------------------------------------------------------

def test_high_snr_symmetric_gains_coincide():
    oma, noma = high_snr_sum_rates(LinkBudget(1e3, 0.5, 0.5))
    assert oma == pytest.approx(noma, rel=1e-14)


def test_high_snr_gap():
    oma, noma = high_snr_sum_rates(LinkBudget(1e6, 0.008, 1.0))
    assert noma - oma == pytest.approx(0.5 * math.log2(1 / 0.008), rel=1e-12)
    assert round(noma - oma, 2) == 3.48


def test_high_snr_limit_of_exact_sum():
    b = LinkBudget(1e6, 0.008, 1.0)
    exact = sum_rate(noma_rates(b, FIG4))
    assert abs(exact - high_snr_sum_rates(b)[1]) < 0.1


def test_high_snr_precondition():
    with pytest.raises(ValueError):
        high_snr_sum_rates(LinkBudget(10.0, 0.05, 1.0))


def test_noma_beats_oma_at_high_snr_when_gain_ratio_large():
    g_a, g_b = 0.008, 1.0
    alloc = FIG4
    assert alloc.a_strong * g_b / g_a > 1
    rhos = np.logspace(0, 9, 91)
    gap = sum_rate(noma_rates(LinkBudget(rhos, g_a, g_b), alloc)) - sum_rate(
        oma_rates(LinkBudget(rhos, g_a, g_b))
    )
    # the weak user's rate tends to log2(1 + a_w/a_s), which cancels log2(a_s)
    limit = 0.5 * math.log2(g_b / g_a)
    assert gap[-1] == pytest.approx(limit, abs=1e-3)
    positive = np.nonzero(gap > 0)[0]
    assert positive.size and np.all(gap[positive[0]:] > 0)


# --- outage ---------------------------------------------------------------------

def test_outage_flags_trivial():
    b = LinkBudget(10.0, 0.1, 0.5)
    assert noma_outage_flags(b, FIG4, TargetRates(0, 0)) == (False, False)
    assert noma_outage_flags(LinkBudget(0.0, 0.1, 0.5), FIG4, TargetRates(0.5, 0.5)) == (
        True,
        True,
    )


def test_strong_outage_from_sic_failure():
    # strong user can decode its own message but not the weak one
    b = LinkBudget(100.0, 0.001, 0.01)
    t = TargetRates(2.0, 0.1)
    own = math.log2(1 + 100 * 0.2 * 0.01)
    sic = math.log2(1 + 100 * 0.8 * 0.01 / (1 + 100 * 0.2 * 0.01))
    assert own >= 0.1 and sic < 2.0
    assert noma_outage_flags(b, FIG4, t).strong_outage


def test_weak_outage_matches_rayleigh_closed_form():
    rho, lam, n = 1e3, 0.008, 10**6
    ch = draw_scalar_channel(stream(21, 0), PathLossModel(3, 1), Position(5, 0), size=n)
    flags = noma_outage_flags(LinkBudget(rho, ch.gain_sq, 1.0), FIG4, TargetRates(0.5, 0.0))
    p_hat = np.mean(flags.weak_outage)
    eps = 2**0.5 - 1
    p = 1 - math.exp(-eps / ((0.8 - eps * 0.2) * rho * lam))
    assert weak_outage_closed_form(rho, 0.8, 0.2, lam, 0.5) == pytest.approx(p, rel=1e-12)
    assert abs(p_hat - p) < 3 * math.sqrt(p * (1 - p) / n)


@given(st.floats(0.1, 1e4), st.floats(1e-4, 1.0), st.floats(0.0, 2.0))
def test_weak_outage_ignores_strong_channel(rho, g_a, g_b):
    t = TargetRates(0.5, 0.5)
    base = noma_outage_flags(LinkBudget(rho, g_a, 1.0), FIG4, t).weak_outage
    assert noma_outage_flags(LinkBudget(rho, g_a, g_b), FIG4, t).weak_outage == base


@given(st.floats(0.1, 1e5), st.floats(1e-4, 1.0), st.floats(1e-4, 1.0),
       st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_rates_monotone_in_strong_fraction(rho, g_a, g_b, a_strong, step):
    b = LinkBudget(rho, g_a, g_b)
    lo = noma_rates(b, PowerAllocation.fixed(1 - a_strong, a_strong))
    hi = noma_rates(b, PowerAllocation.fixed(1 - a_strong - step, a_strong + step))
    assert hi.rate_strong > lo.rate_strong
    assert hi.rate_weak < lo.rate_weak


def test_noma_full_weak_power_is_single_user_rate():
    b = LinkBudget(37.0, 0.3, 0.9)
    rate = noma_rates(b, PowerAllocation.fixed(1.0, 0.0)).rate_weak
    assert rate == 2 * oma_rates(b).rate_weak
    assert rate == pytest.approx(math.log2(1 + 37.0 * 0.3), rel=1e-15)


# --- cognitive-radio allocation --------------------------------------------------

def test_cr_zero_target_frees_all_power():
    a = cr_power_allocation(LinkBudget(100.0, 0.5, 1.0), 0.0)
    assert (a.a_weak, a.a_strong) == (0.0, 1.0)
    assert a.source is AllocationSource.COGNITIVE_RADIO
    assert not a.primary_outage


def test_cr_high_snr_limit():
    eps = 2**0.5 - 1
    a = cr_power_allocation(LinkBudget(1e12, 1.0, 1.0), 0.5)
    assert a.a_weak == pytest.approx(eps / (1 + eps), rel=1e-9)


def test_cr_example_value():
    a = cr_power_allocation(LinkBudget(100.0, 1.0, 2.0), 0.5)
    closed = (2**0.5 - 1) * 101 / (100 * 2**0.5)
    assert a.a_weak == pytest.approx(closed, abs=1e-15)
    assert a.a_weak == pytest.approx(0.29582, abs=1e-5)
    assert abs(bisect_cr(100.0, 1.0, 0.5) - closed) < 1e-9


def test_cr_infeasible_marks_primary_outage():
    a = cr_power_allocation(LinkBudget(1.0, 0.1, 1.0), 1.0)
    assert a.a_weak == 1.0 and a.a_strong == 0.0
    assert a.primary_outage


@settings(max_examples=300)
@given(st.floats(1e-2, 1e6), st.floats(1e-5, 1.0), st.floats(0.0, 4.0))
def test_cr_allocation_meets_target_exactly(rho, g, r):
    alloc = cr_power_allocation(LinkBudget(rho, g, 1.0), r)
    oracle = bisect_cr(rho, g, r)
    if oracle is None:
        assert alloc.primary_outage
        return
    assert abs(alloc.a_weak - oracle) < 1e-9
    assume(alloc.a_weak < 1)
    achieved = noma_rates(LinkBudget(rho, g, 1.0), alloc).rate_weak
    assert abs(achieved - r) < 1e-9


def test_cr_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    g = rng.exponential(0.01, 200)
    vec = cr_power_allocation(LinkBudget(100.0, g, 1.0), 0.5)
    for i in range(0, 200, 17):
        s = cr_power_allocation(LinkBudget(100.0, float(g[i]), 1.0), 0.5)
        assert vec.a_weak[i] == s.a_weak
        assert bool(vec.primary_outage[i]) == s.primary_outage
