"""Seeded channel generation under a bounded path-loss geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


ORIGIN = Position(0.0, 0.0)


@dataclass(frozen=True)
class PathLossModel:
    """Attenuation ``max(bound, d) ** -exponent``; never exceeds one."""

    exponent: float = 3.0
    bound: float = 1.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("path-loss exponent must be positive")
        if not self.bound >= 1:
            raise ValueError("path-loss bound must be >= 1")


def path_loss(model: PathLossModel, distance: float) -> float:
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return max(model.bound, distance) ** (-model.exponent)


@dataclass(frozen=True)
class ChannelRealization:
    """Complex gain of one link. ``gain`` may be a scalar or an array of trials."""

    gain: complex | np.ndarray
    geometry: Position | None = None
    gain_sq: float | np.ndarray = field(init=False)

    def __post_init__(self):
        g = self.gain
        object.__setattr__(self, "gain_sq", g.real * g.real + g.imag * g.imag)


@dataclass(frozen=True)
class MimoChannel:
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
            raise ValueError(f"MIMO channel must be square, got shape {m.shape}")

    @property
    def antennas(self) -> int:
        return self.matrix.shape[-1]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based Philox generator for the substream ``(seed, *key)``.

    Distinct keys give non-overlapping streams; identical keys give identical
    sequences no matter which process or in which order they are created.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, size=None, variance: float = 1.0):
    """Circularly-symmetric complex Gaussian with the given total variance."""
    shape = () if size is None else (tuple(size) if isinstance(size, (tuple, list)) else (int(size),))
    z = rng.standard_normal(size=(2,) + shape)
    out = math.sqrt(variance / 2) * (z[0] + 1j * z[1])
    return complex(out) if size is None else out


def draw_scalar_channel(
    rng: np.random.Generator,
    model: PathLossModel,
    rx: Position,
    bs: Position = ORIGIN,
    size: int | None = None,
) -> ChannelRealization:
    """Rayleigh-faded link from ``bs`` to ``rx``; ``E|h|^2`` equals the path loss."""
    loss = path_loss(model, rx.distance(bs))
    return ChannelRealization(complex_normal(rng, size, variance=loss), geometry=rx)


def draw_mimo_channel(
    rng: np.random.Generator,
    antennas: int,
    power_scale: float = 1.0,
    size: int | None = None,
) -> MimoChannel:
    """i.i.d. complex Gaussian ``antennas x antennas`` matrix (rich scattering).

    With ``size`` a leading batch dimension of independent draws is added.
    """
    if antennas < 1:
        raise ValueError("antennas must be >= 1")
    if not power_scale > 0:
        raise ValueError("power_scale must be positive")
    shape = (antennas, antennas) if size is None else (int(size), antennas, antennas)
    return MimoChannel(complex_normal(rng, shape, variance=power_scale))
