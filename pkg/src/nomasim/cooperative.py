"""Two-phase cooperative NOMA versus the non-cooperative baseline.

Phase 1: the BS broadcasts the superposition and the strong user runs SIC.
Phase 2: if SIC succeeded, the strong user re-sends the weak user's message at
full power over the inter-user link; the weak user adds both SNRs (MRC).
Both phases have equal length, so the cooperative scheme is evaluated at doubled
per-phase targets to deliver the same bits per channel use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel import ChannelRealization, PathLossModel, Position, draw_scalar_channel, stream
from .montecarlo import blocks, map_tasks, proportion_halfwidth
from .rates import (
    LinkBudget,
    PowerAllocation,
    TargetRates,
    capacity,
    noma_outage_flags,
    weak_sinr,
)

# substream tag, keeps cooperative draws disjoint from other experiments
STREAM_TAG = 4

LINK_WEAK, LINK_STRONG, LINK_RELAY = 0, 1, 2


class Mode(enum.Enum):
    COOPERATIVE = "Cooperative"
    NON_COOPERATIVE = "NonCooperative"


class Metric(enum.Enum):
    PAIR = "Pair"
    WEAK_USER = "WeakUser"


@dataclass(frozen=True)
class CooperativeTrial:
    bs_to_weak: ChannelRealization
    bs_to_strong: ChannelRealization
    strong_to_weak: ChannelRealization
    rho: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        for ch in (self.bs_to_weak, self.bs_to_strong, self.strong_to_weak):
            if not np.all(np.isfinite(ch.gain_sq)):
                raise ValueError("channel gains must be finite")


@dataclass(frozen=True)
class OutageEstimate:
    probability: float
    trials: int
    half_width: float

    @classmethod
    def from_count(cls, count: int, trials: int) -> "OutageEstimate":
        return cls(count / trials, trials, proportion_halfwidth(count, trials))

    @property
    def interval(self) -> tuple[float, float]:
        return self.probability - self.half_width, self.probability + self.half_width


class Outcome(NamedTuple):
    weak_outage: bool | np.ndarray
    strong_outage: bool | np.ndarray
    pair_outage: bool | np.ndarray


def noncooperative_outcome(
    trial: CooperativeTrial, alloc: PowerAllocation, targets: TargetRates
) -> Outcome:
    budget = LinkBudget(trial.rho, trial.bs_to_weak.gain_sq, trial.bs_to_strong.gain_sq)
    weak, strong = noma_outage_flags(budget, alloc, targets)
    return Outcome(weak, strong, weak | strong)


def cooperative_outcome(
    trial: CooperativeTrial, alloc: PowerAllocation, targets: TargetRates
) -> Outcome:
    rho, aw, as_ = trial.rho, alloc.a_weak, alloc.a_strong
    r_weak, r_strong = 2 * targets.r_weak, 2 * targets.r_strong
    g_weak = trial.bs_to_weak.gain_sq
    g_strong = trial.bs_to_strong.gain_sq

    sic_ok = capacity(weak_sinr(rho, aw, as_, g_strong)) >= r_weak
    relayed = np.where(sic_ok, rho * trial.strong_to_weak.gain_sq, 0.0)
    combined = weak_sinr(rho, aw, as_, g_weak) + relayed
    weak = capacity(combined) < r_weak
    strong = ~sic_ok | (capacity(rho * as_ * g_strong) < r_strong)
    if np.ndim(weak) == 0:
        weak, strong = bool(weak), bool(strong)
    return Outcome(weak, strong, weak | strong)


def draw_trials(
    seed: int,
    point: int,
    block: int,
    n: int,
    rho: float,
    pathloss: PathLossModel,
    bs: Position,
    user_a: Position,
    user_b: Position,
) -> CooperativeTrial:
    """``n`` trials of block ``block`` for grid point ``point``."""
    key = (STREAM_TAG, point, block)
    h_a = draw_scalar_channel(stream(seed, *key, LINK_WEAK), pathloss, user_a, bs, size=n)
    h_b = draw_scalar_channel(stream(seed, *key, LINK_STRONG), pathloss, user_b, bs, size=n)
    h_r = draw_scalar_channel(stream(seed, *key, LINK_RELAY), pathloss, user_a, user_b, size=n)
    return CooperativeTrial(h_a, h_b, h_r, rho)


@dataclass(frozen=True)
class _BlockTask:
    seed: int
    point: int
    block: int
    n: int
    rho: float
    pathloss: PathLossModel
    bs: Position
    user_a: Position
    user_b: Position
    alloc: PowerAllocation
    targets: TargetRates
    relay: bool


# column order of the count vectors returned by ``_count_block``
COUNT_COLUMNS = ("weak_nc", "strong_nc", "pair_nc", "weak_c", "strong_c", "pair_c")


def _count_block(task: _BlockTask) -> np.ndarray:
    trial = draw_trials(
        task.seed, task.point, task.block, task.n, task.rho,
        task.pathloss, task.bs, task.user_a, task.user_b,
    )
    if not task.relay:
        zero = ChannelRealization(np.zeros(task.n, dtype=complex), trial.strong_to_weak.geometry)
        trial = CooperativeTrial(trial.bs_to_weak, trial.bs_to_strong, zero, trial.rho)
    nc = noncooperative_outcome(trial, task.alloc, task.targets)
    co = cooperative_outcome(trial, task.alloc, task.targets)
    return np.array([np.count_nonzero(f) for f in (*nc, *co)], dtype=np.int64)


def outage_counts(
    scenario,
    points: Sequence[tuple[int, Position, float]],
    workers: int = 1,
) -> list[np.ndarray]:
    """Outage counts (``COUNT_COLUMNS`` order) for ``(point_index, user_b, rho)``
    triples. Each point uses its own substreams."""
    if scenario.trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [
        _BlockTask(
            scenario.seed, idx, b, n, rho, scenario.pathloss, scenario.bs,
            scenario.user_a, user_b, scenario.allocation, scenario.targets,
            getattr(scenario, "relay", True),
        )
        for idx, user_b, rho in points
        for b, n in blocks(scenario.trials)
    ]
    per_block = map_tasks(_count_block, tasks, workers)
    nblocks = len(blocks(scenario.trials))
    return [
        np.sum(per_block[i * nblocks:(i + 1) * nblocks], axis=0)
        for i in range(len(points))
    ]


def _column(mode: Mode, metric: Metric) -> int:
    name = ("pair" if metric is Metric.PAIR else "weak") + (
        "_c" if mode is Mode.COOPERATIVE else "_nc"
    )
    return COUNT_COLUMNS.index(name)


def outage_map(
    scenario,
    grid: Sequence[Position],
    mode: Mode,
    metric: Metric,
    workers: int = 1,
) -> list[tuple[Position, OutageEstimate]]:
    """Outage estimate at each strong-user position on ``grid``."""
    if not grid:
        raise ValueError("grid must be non-empty")
    if scenario.trials < 1:
        raise ValueError("trials must be >= 1")
    rho = scenario.rho[0]
    counts = outage_counts(scenario, [(i, p, rho) for i, p in enumerate(grid)], workers)
    col = _column(mode, metric)
    return [
        (p, OutageEstimate.from_count(int(c[col]), scenario.trials))
        for p, c in zip(grid, counts)
    ]


def weak_outage_sweep(
    scenario, snr_grid_db: Sequence[float], mode: Mode, workers: int = 1
) -> list[OutageEstimate]:
    points = [(i, scenario.user_b, 10 ** (s / 10)) for i, s in enumerate(snr_grid_db)]
    counts = outage_counts(scenario, points, workers)
    col = _column(mode, Metric.WEAK_USER)
    return [OutageEstimate.from_count(int(c[col]), scenario.trials) for c in counts]


def fit_diversity(
    snr_grid_db: Sequence[float],
    estimates: Sequence[OutageEstimate],
    max_probability: float = 0.1,
) -> float:
    """Negated least-squares slope of log10(outage) against log10(rho)."""
    if max(snr_grid_db) - min(snr_grid_db) < 15:
        raise ValueError("SNR grid must span at least 15 dB")
    for s, est in zip(snr_grid_db, estimates):
        if not 10 / est.trials < est.probability < max_probability:
            raise ValueError(
                f"outage {est.probability:.3g} at {s} dB outside fit window "
                f"({10 / est.trials:.3g}, {max_probability})"
            )
    x = np.asarray(snr_grid_db, dtype=float) / 10
    y = np.log10([e.probability for e in estimates])
    return -float(np.polyfit(x, y, 1)[0])


def diversity_slope(
    scenario,
    snr_grid_db: Sequence[float],
    mode: Mode,
    workers: int = 1,
    max_probability: float = 0.1,
) -> float:
    """Fitted weak-user diversity order over ``snr_grid_db``."""
    estimates = weak_outage_sweep(scenario, snr_grid_db, mode, workers)
    return fit_diversity(snr_grid_db, estimates, max_probability)
