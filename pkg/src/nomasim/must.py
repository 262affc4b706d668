"""Superposition constellations for downlink multiuser transmission.

Category 1 concatenates component labels as-is, Category 2 flips the near
user's bits depending on the far symbol so the composite is Gray, Category 3
labels the composite grid directly with a Gray code.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel import complex_normal, stream

STREAM_TAG = 6


class Category(enum.Enum):
    CAT1 = "Cat1"
    CAT2 = "Cat2"
    CAT3 = "Cat3"


@dataclass(frozen=True, eq=False)
class LabeledConstellation:
    points: np.ndarray  # complex
    labels: np.ndarray  # uint8, shape (len(points), bits)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        lab = np.asarray(self.labels, dtype=np.uint8)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        if lab.ndim != 2 or len(pts) != len(lab) or len(pts) != 2 ** lab.shape[1]:
            raise ValueError("need 2**bits points, each with a bits-wide label")
        if len({tuple(r) for r in lab}) != len(lab):
            raise ValueError("labels must be distinct")

    @property
    def bits(self) -> int:
        return self.labels.shape[1]

    @property
    def average_power(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def label_of(self, i: int) -> str:
        return "".join(str(b) for b in self.labels[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "label"])
        for i, p in enumerate(self.points):
            w.writerow([f"{p.real:.12g}", f"{p.imag:.12g}", self.label_of(i)])
        return buf.getvalue()


def gray_code(n_bits: int) -> np.ndarray:
    """Binary reflected Gray code; row ``i`` is the label of level ``i``."""
    idx = np.arange(2 ** n_bits)
    g = idx ^ (idx >> 1)
    return ((g[:, None] >> np.arange(n_bits - 1, -1, -1)) & 1).astype(np.uint8)


def _pam_levels(n: int) -> np.ndarray:
    return np.arange(-(n - 1), n, 2, dtype=float)


def qam(bits: int) -> LabeledConstellation:
    """Unit-power square QAM with Gray labels (I bits first, then Q bits).

    Supports 2 (QPSK) and 4 (16-QAM) bits.
    """
    if bits not in (2, 4):
        raise ValueError("only QPSK (2 bits) and 16-QAM (4 bits) are supported")
    half = bits // 2
    levels = _pam_levels(2 ** half)
    code = gray_code(half)
    pts, labs = [], []
    for i, li in enumerate(levels):
        for q, lq in enumerate(levels):
            pts.append(li + 1j * lq)
            labs.append(np.concatenate([code[i], code[q]]))
    pts = np.array(pts)
    return LabeledConstellation(pts / np.sqrt(np.mean(np.abs(pts) ** 2)), np.array(labs))


QPSK = qam(2)
QAM16 = qam(4)


@dataclass(frozen=True)
class SuperpositionSpec:
    far: LabeledConstellation
    near: LabeledConstellation
    power_ratio: float  # fraction of power for the far user
    category: Category

    def __post_init__(self):
        if not 0.5 < self.power_ratio < 1:
            raise ValueError("power_ratio must lie in (0.5, 1)")
        for c in (self.far, self.near):
            if abs(c.average_power - 1) > 1e-12:
                raise ValueError("component constellations must have unit power")


def _level_index(values: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, int]:
    """Ascending rank of each value among the distinct values (within tol)."""
    levels = _distinct(values, tol)
    idx = np.abs(values[:, None] - levels[None, :]).argmin(axis=1)
    return idx, len(levels)


def _distinct(values: np.ndarray, tol: float) -> np.ndarray:
    out: list[float] = []
    for v in np.sort(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return np.array(out)


def _near_flip_mask(far: LabeledConstellation, near: LabeledConstellation) -> np.ndarray:
    """Per far symbol, the XOR mask applied to the near user's label.

    Along each axis the near labels are mirrored on every other far level; for a
    reflected Gray code, mirroring is a flip of that axis' leading bit.
    """
    half = near.bits // 2
    i_idx, _ = _level_index(far.points.real)
    q_idx, _ = _level_index(far.points.imag)
    mask = np.zeros((len(far.points), near.bits), dtype=np.uint8)
    mask[:, 0] = i_idx % 2
    mask[:, half] = q_idx % 2
    return mask


def build_composite(spec: SuperpositionSpec, tol: float = 1e-9) -> LabeledConstellation:
    far, near, beta = spec.far, spec.near, spec.power_ratio
    s_far = np.repeat(far.points, len(near.points))
    s_near = np.tile(near.points, len(far.points))
    pts = np.sqrt(beta) * s_far + np.sqrt(1 - beta) * s_near

    diffs = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(diffs, np.inf)
    if diffs.min() < tol:
        raise ValueError(f"power ratio {beta} makes composite points coincide")
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))

    far_lab = np.repeat(far.labels, len(near.points), axis=0)
    near_lab = np.tile(near.labels, (len(far.points), 1))
    if spec.category is Category.CAT1:
        labels = np.hstack([far_lab, near_lab])
    elif spec.category is Category.CAT2:
        mask = np.repeat(_near_flip_mask(far, near), len(near.points), axis=0)
        labels = np.hstack([far_lab, near_lab ^ mask])
    else:
        labels = _grid_gray_labels(pts, far.bits // 2, near.bits // 2, tol)
    return LabeledConstellation(pts, labels)


def _grid_gray_labels(pts: np.ndarray, far_half: int, near_half: int, tol: float) -> np.ndarray:
    """Gray-label a rectangular composite grid, far user on the leading bits."""
    i_idx, ni = _level_index(pts.real, tol)
    q_idx, nq = _level_index(pts.imag, tol)
    per_axis = far_half + near_half
    if ni != 2 ** per_axis or nq != 2 ** per_axis:
        raise ValueError("composite points do not form a square grid")
    code = gray_code(per_axis)
    ci, cq = code[i_idx], code[q_idx]
    return np.hstack([ci[:, :far_half], cq[:, :far_half], ci[:, far_half:], cq[:, far_half:]])


class GrayCheck(NamedTuple):
    ok: bool
    violation: tuple[int, int] | None  # indices of an offending adjacent pair


def gray_check(constellation: LabeledConstellation, tol: float = 1e-9) -> GrayCheck:
    """True iff horizontally/vertically adjacent grid points differ in one bit."""
    pts = constellation.points
    i_idx, ni = _level_index(pts.real, tol)
    q_idx, nq = _level_index(pts.imag, tol)
    grid = -np.ones((ni, nq), dtype=int)
    for k, (a, b) in enumerate(zip(i_idx, q_idx)):
        if grid[a, b] >= 0:
            raise ValueError("points do not form a rectangular grid")
        grid[a, b] = k
    if np.any(grid < 0):
        raise ValueError("points do not form a rectangular grid")
    lab = constellation.labels
    for a in range(ni):
        for b in range(nq):
            for da, db in ((1, 0), (0, 1)):
                if a + da < ni and b + db < nq:
                    u, v = grid[a, b], grid[a + da, b + db]
                    if np.count_nonzero(lab[u] != lab[v]) != 1:
                        return GrayCheck(False, (int(u), int(v)))
    return GrayCheck(True, None)


def demodulate(
    constellation: LabeledConstellation, received: complex, noise_var: float
) -> tuple[np.ndarray, np.ndarray]:
    """Hard label and max-log LLRs, ``log P(b=0)/P(b=1)``."""
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    d2 = np.abs(received - constellation.points) ** 2
    lab = constellation.labels
    llr = np.empty(constellation.bits)
    for k in range(constellation.bits):
        llr[k] = (d2[lab[:, k] == 1].min() - d2[lab[:, k] == 0].min()) / noise_var
    return lab[np.argmin(d2)].copy(), llr


def detect(constellation: LabeledConstellation, received: np.ndarray) -> np.ndarray:
    """Minimum-distance point indices for an array of received samples."""
    d2 = np.abs(received[:, None] - constellation.points[None, :]) ** 2
    return d2.argmin(axis=1)


class LinkRow(NamedTuple):
    category: str
    snr_db: float
    user: str
    ber: float
    goodput: float
    oma_ber: float
    oma_goodput: float


def _bit_errors(const: LabeledConstellation, sent: np.ndarray, rx: np.ndarray, cols) -> int:
    got = detect(const, rx)
    return int(np.count_nonzero(const.labels[sent][:, cols] != const.labels[got][:, cols]))


def link_gain_experiment(
    spec: SuperpositionSpec,
    snr_grid_db: Sequence[float],
    trials: int,
    seed: int,
    categories: Sequence[Category] = tuple(Category),
    near_offset_db: float = 0.0,
) -> list[LinkRow]:
    """Uncoded goodput of superposed transmission against half-time OMA.

    ``spec.category`` is ignored; every entry of ``categories`` is evaluated on
    the same symbols and noise. Each user detects the composite symbol by
    minimum distance and keeps its own bits (far user: leading bits). The near
    user sees ``near_offset_db`` more SNR than the far user.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    far, near = spec.far, spec.near
    comps = {
        cat: build_composite(SuperpositionSpec(far, near, spec.power_ratio, cat))
        for cat in categories
    }
    kf, kn = far.bits, near.bits
    far_cols, near_cols = list(range(kf)), list(range(kf, kf + kn))
    rows = []
    for s_idx, snr_db in enumerate(snr_grid_db):
        rng = stream(seed, STREAM_TAG, s_idx)
        sent = rng.integers(0, 2 ** (kf + kn), size=trials)
        noise_far = complex_normal(rng, trials, 10 ** (-snr_db / 10))
        noise_near = complex_normal(rng, trials, 10 ** (-(snr_db + near_offset_db) / 10))
        far_sent = rng.integers(0, 2 ** kf, size=trials)
        near_sent = rng.integers(0, 2 ** kn, size=trials)
        oma = {
            "far": (far, far_sent, noise_far, list(range(kf)), kf),
            "near": (near, near_sent, noise_near, list(range(kn)), kn),
        }
        oma_ber = {}
        for user, (c, idx, noise, cols, k) in oma.items():
            oma_ber[user] = _bit_errors(c, idx, c.points[idx] + noise, cols) / (trials * k)
        for cat, comp in comps.items():
            tx = comp.points[sent]
            for user, noise, cols, k in (
                ("far", noise_far, far_cols, kf),
                ("near", noise_near, near_cols, kn),
            ):
                ber = _bit_errors(comp, sent, tx + noise, cols) / (trials * k)
                rows.append(LinkRow(
                    cat.value, float(snr_db), user, ber, k * (1 - ber),
                    oma_ber[user], 0.5 * k * (1 - oma_ber[user]),
                ))
    return rows
