"""Experiment configuration: parsing, validation, defaults and hashing."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..channel import ORIGIN, PathLossModel, Position
from ..rates import PowerAllocation, TargetRates


class ScenarioError(ValueError):
    """Malformed or invalid experiment configuration."""


class Experiment(enum.Enum):
    FIG3_SCALING = "Fig3Scaling"
    FIG4_OUTAGE_MAP = "Fig4OutageMap"
    FIG4_SNR_SWEEP = "Fig4SnrSweep"
    FIG5_FIXED_ALLOC = "Fig5FixedAlloc"
    FIG5_CR_ALLOC = "Fig5CrAlloc"
    MUST_LINK = "MustLink"
    CUSTOM = "Custom"


# Values fixed by the figure setups; applied only when the config omits them.
FIG4_PARAMS = {
    "user_a": (5.0, 0.0),
    "exponent": 3.0,
    "snr_db": 30.0,
    "allocation": (4 / 5, 1 / 5),
    "targets": (0.5, 0.5),
}
FIG5_PARAMS = {
    "user_a": (5.0, 0.0),
    "exponent": 3.0,
    "snr_db": 20.0,
    "allocation": (7 / 8, 1 / 8),
    "cr_target": 0.5,
}
FIG3_PARAMS = {"power_strong_db": 3.0, "power_weak_db": 6.0, "weak_gain_scale": 0.25}

# Monte Carlo sizes not given by the figures; recorded as artifact defaults.
DEFAULT_TRIALS = {
    Experiment.FIG4_OUTAGE_MAP: 10**6,
    Experiment.FIG4_SNR_SWEEP: 10**6,
    Experiment.FIG5_FIXED_ALLOC: 10**5,
    Experiment.FIG5_CR_ALLOC: 10**5,
    Experiment.FIG3_SCALING: 10**5,
    Experiment.MUST_LINK: 10**5,
}

TOP_LEVEL_KEYS = {
    "experiment", "seed", "trials", "snr_db", "geometry", "pathloss",
    "allocation", "targets", "relay", "mimo", "must",
}


@dataclass(frozen=True)
class Scenario:
    experiment: Experiment
    seed: int
    trials: int
    snr_db: tuple[float, ...] = ()
    rho: tuple[float, ...] = ()
    bs: Position = ORIGIN
    user_a: Position | None = None
    user_b: Position | None = None
    grid: tuple[Position, ...] = ()
    pathloss: PathLossModel = PathLossModel()
    allocation: PowerAllocation | None = None
    cr_target: float | None = None
    targets: TargetRates | None = None
    relay: bool = True
    antennas: tuple[int, ...] = ()
    power_strong_db: float | None = None
    power_weak_db: float | None = None
    weak_gain_scale: float | None = None
    far: str | None = None
    near: str | None = None
    power_ratio: float | None = None
    categories: tuple[str, ...] = ()
    near_offset_db: float = 0.0
    defaults: tuple[str, ...] = field(default=(), compare=False)

    def document(self) -> dict[str, Any]:
        """Canonical, JSON-serialisable form of every semantic field."""
        def pos(p):
            return None if p is None else [p.x, p.y]

        alloc = None
        if self.allocation is not None:
            alloc = [float(self.allocation.a_weak), float(self.allocation.a_strong)]
        return {
            "experiment": self.experiment.value,
            "seed": self.seed,
            "trials": self.trials,
            "snr_db": list(self.snr_db),
            "geometry": {
                "bs": pos(self.bs),
                "user_a": pos(self.user_a),
                "user_b": pos(self.user_b),
                "grid": [pos(p) for p in self.grid],
            },
            "pathloss": {"exponent": self.pathloss.exponent, "bound": self.pathloss.bound},
            "allocation": alloc,
            "cr_target": self.cr_target,
            "targets": None if self.targets is None else list(self.targets),
            "relay": self.relay,
            "mimo": {
                "antennas": list(self.antennas),
                "power_strong_db": self.power_strong_db,
                "power_weak_db": self.power_weak_db,
                "weak_gain_scale": self.weak_gain_scale,
            },
            "must": {
                "far": self.far,
                "near": self.near,
                "power_ratio": self.power_ratio,
                "categories": list(self.categories),
                "near_offset_db": self.near_offset_db,
            },
        }

    @property
    def hash(self) -> str:
        text = json.dumps(self.document(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=_seed(seed))


def _seed(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ScenarioError(f"seed: expected an integer in [0, 2**64), got {value!r}")
    return value


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{name}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ScenarioError(f"{name}: must be finite")
    return float(value)


def _position(value, name: str) -> Position:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"{name}: expected [x, y], got {value!r}")
    return Position(_number(value[0], f"{name}[0]"), _number(value[1], f"{name}[1]"))


def _grid(value) -> tuple[Position, ...]:
    if isinstance(value, dict):
        unknown = set(value) - {"x", "y"}
        if unknown or not {"x", "y"} <= set(value):
            raise ScenarioError("geometry.grid: expected keys 'x' and 'y' as [start, stop, num]")
        axes = []
        for k in ("x", "y"):
            spec = value[k]
            if not isinstance(spec, list) or len(spec) != 3:
                raise ScenarioError(f"geometry.grid.{k}: expected [start, stop, num]")
            start, stop = _number(spec[0], f"grid.{k}[0]"), _number(spec[1], f"grid.{k}[1]")
            num = spec[2]
            if isinstance(num, bool) or not isinstance(num, int) or num < 1:
                raise ScenarioError(f"geometry.grid.{k}[2]: expected a positive integer")
            axes.append(np.linspace(start, stop, num))
        return tuple(Position(float(x), float(y)) for x in axes[0] for y in axes[1])
    if isinstance(value, list):
        return tuple(_position(p, f"geometry.grid[{i}]") for i, p in enumerate(value))
    raise ScenarioError("geometry.grid: expected a list of [x, y] or an {x, y} range")


def _snr(value) -> tuple[float, ...]:
    vals = value if isinstance(value, list) else [value]
    out = tuple(_number(v, "snr_db") for v in vals)
    if not out:
        raise ScenarioError("snr_db: must not be empty")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ScenarioError("snr_db: sweep values must be strictly increasing")
    return out


def _pair(value, name: str, keys: tuple[str, str]) -> tuple[float, float]:
    if isinstance(value, dict):
        if set(value) != set(keys):
            raise ScenarioError(f"{name}: expected keys {list(keys)}")
        value = [value[keys[0]], value[keys[1]]]
    if not isinstance(value, list) or len(value) != 2:
        raise ScenarioError(f"{name}: expected a pair {list(keys)}")
    return _number(value[0], f"{name}.{keys[0]}"), _number(value[1], f"{name}.{keys[1]}")


def _section(doc: dict, key: str, allowed: set[str]) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ScenarioError(f"{key}: expected an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ScenarioError(f"{key}: unknown field(s) {sorted(unknown)}; allowed {sorted(allowed)}")
    return sec


CONSTELLATIONS = ("QPSK", "16QAM")


def parse_scenario(text: str, seed: int | None = None) -> Scenario:
    """Parse and validate a JSON config. ``seed`` overrides the config's seed."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("config must be a JSON object")
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError(f"unknown field(s) {sorted(unknown)}")

    names = [e.value for e in Experiment]
    if doc.get("experiment") not in names:
        raise ScenarioError(
            f"experiment: unknown value {doc.get('experiment')!r}; valid names: {', '.join(names)}"
        )
    exp = Experiment(doc["experiment"])
    defaults: list[str] = []

    def default(name, value):
        defaults.append(f"{name}={value}")
        return value

    if seed is not None:
        seed_val = _seed(seed)
    elif "seed" in doc:
        seed_val = _seed(doc["seed"])
    else:
        raise ScenarioError("seed: required (in the config or via --seed)")

    if "trials" in doc:
        trials = doc["trials"]
        if isinstance(trials, bool) or not isinstance(trials, int):
            raise ScenarioError(f"trials: expected an integer, got {trials!r}")
        if trials < 1:
            raise ScenarioError("trials: must be >= 1")
    elif exp in DEFAULT_TRIALS:
        trials = default("trials", DEFAULT_TRIALS[exp])
    else:
        raise ScenarioError("trials: required for Custom experiments")

    figure = {
        Experiment.FIG4_OUTAGE_MAP: FIG4_PARAMS,
        Experiment.FIG4_SNR_SWEEP: FIG4_PARAMS,
        Experiment.FIG5_FIXED_ALLOC: FIG5_PARAMS,
        Experiment.FIG5_CR_ALLOC: FIG5_PARAMS,
    }.get(exp, {})

    geo = _section(doc, "geometry", {"bs", "user_a", "user_b", "grid"})
    pl = _section(doc, "pathloss", {"exponent", "bound"})
    mimo = _section(doc, "mimo", {"antennas", "power_strong_db", "power_weak_db", "weak_gain_scale"})
    must = _section(doc, "must", {"far", "near", "power_ratio", "categories", "near_offset_db"})

    kw: dict[str, Any] = {}
    pair_exp = exp not in (Experiment.FIG3_SCALING, Experiment.MUST_LINK)

    if "snr_db" in doc:
        kw["snr_db"] = _snr(doc["snr_db"])
    elif "snr_db" in figure and exp is not Experiment.FIG4_SNR_SWEEP:
        kw["snr_db"] = (default("snr_db", figure["snr_db"]),)
    elif exp is not Experiment.FIG3_SCALING:
        raise ScenarioError("snr_db: required for this experiment")
    if exp is Experiment.FIG4_SNR_SWEEP and len(kw["snr_db"]) < 2:
        raise ScenarioError("snr_db: Fig4SnrSweep needs at least two SNR values")
    kw["rho"] = tuple(10 ** (s / 10) for s in kw.get("snr_db", ()))

    if pair_exp:
        if "bs" in geo:
            kw["bs"] = _position(geo["bs"], "geometry.bs")
        else:
            default("geometry.bs", "(0, 0)")
        if "user_a" in geo:
            kw["user_a"] = _position(geo["user_a"], "geometry.user_a")
        elif "user_a" in figure:
            kw["user_a"] = Position(*default("geometry.user_a", figure["user_a"]))
        else:
            raise ScenarioError("geometry.user_a: required for Custom experiments")
        if "user_b" in geo:
            kw["user_b"] = _position(geo["user_b"], "geometry.user_b")
        if "grid" in geo:
            kw["grid"] = _grid(geo["grid"])
            if not kw["grid"]:
                raise ScenarioError("geometry.grid: must not be empty")

        exponent = pl.get("exponent")
        if exponent is None:
            if "exponent" not in figure:
                raise ScenarioError("pathloss.exponent: required for Custom experiments")
            exponent = default("pathloss.exponent", figure["exponent"])
        bound = pl.get("bound")
        if bound is None:
            bound = default("pathloss.bound", 1.0)
        try:
            kw["pathloss"] = PathLossModel(_number(exponent, "pathloss.exponent"),
                                           _number(bound, "pathloss.bound"))
        except ValueError as e:
            raise ScenarioError(f"pathloss: {e}") from None

        kw.update(_allocation(doc, exp, figure, default))

        if "targets" in doc:
            t = _pair(doc["targets"], "targets", ("r_weak", "r_strong"))
            if min(t) < 0:
                raise ScenarioError("targets: rates must be non-negative")
            kw["targets"] = TargetRates(*t)
        elif "targets" in figure:
            kw["targets"] = TargetRates(*default("targets", figure["targets"]))

        if "relay" in doc:
            if not isinstance(doc["relay"], bool):
                raise ScenarioError("relay: expected true or false")
            kw["relay"] = doc["relay"]

    if exp in (Experiment.FIG4_OUTAGE_MAP, Experiment.FIG5_FIXED_ALLOC, Experiment.FIG5_CR_ALLOC):
        if not kw.get("grid"):
            raise ScenarioError("geometry.grid: required for this experiment")
    if exp in (Experiment.FIG4_SNR_SWEEP, Experiment.CUSTOM) and "user_b" not in kw:
        raise ScenarioError("geometry.user_b: required for this experiment")
    if exp is Experiment.CUSTOM:
        if "targets" not in kw:
            raise ScenarioError("targets: required for Custom experiments")
        if kw.get("allocation") is None:
            raise ScenarioError("allocation: Custom experiments need a fixed allocation")

    if exp is Experiment.FIG3_SCALING:
        kw.update(_mimo(mimo, default))
    if exp is Experiment.MUST_LINK:
        kw.update(_must(must))

    return Scenario(exp, seed_val, trials, defaults=tuple(defaults), **kw)


def _allocation(doc, exp, figure, default) -> dict:
    value = doc.get("allocation")
    if isinstance(value, dict) and "cr_target" in value:
        if set(value) != {"cr_target"}:
            raise ScenarioError("allocation: a CR allocation takes only 'cr_target'")
        r = _number(value["cr_target"], "allocation.cr_target")
        if r < 0:
            raise ScenarioError("allocation.cr_target: must be non-negative")
        if exp not in (Experiment.FIG5_CR_ALLOC,):
            raise ScenarioError(f"allocation.cr_target: not supported by {exp.value}")
        return {"cr_target": r}
    if value is not None:
        if exp is Experiment.FIG5_CR_ALLOC:
            raise ScenarioError("allocation: Fig5CrAlloc takes {'cr_target': r}")
        a_weak, a_strong = _pair(value, "allocation", ("a_weak", "a_strong"))
        try:
            return {"allocation": PowerAllocation.fixed(a_weak, a_strong)}
        except ValueError as e:
            raise ScenarioError(f"allocation: {e}") from None
    if exp is Experiment.FIG5_CR_ALLOC:
        return {"cr_target": default("allocation.cr_target", figure["cr_target"])}
    if "allocation" in figure:
        return {"allocation": PowerAllocation.fixed(*default("allocation", figure["allocation"]))}
    return {}


def _mimo(sec, default) -> dict:
    ants = sec.get("antennas")
    if not isinstance(ants, list) or not ants:
        raise ScenarioError("mimo.antennas: required, a non-empty list of antenna counts")
    for a in ants:
        if isinstance(a, bool) or not isinstance(a, int) or a < 1:
            raise ScenarioError(f"mimo.antennas: expected positive integers, got {a!r}")
    if any(b <= a for a, b in zip(ants, ants[1:])):
        raise ScenarioError("mimo.antennas: values must be strictly increasing")
    out = {"antennas": tuple(ants)}
    for key in ("power_strong_db", "power_weak_db", "weak_gain_scale"):
        out[key] = (
            _number(sec[key], f"mimo.{key}") if key in sec
            else default(f"mimo.{key}", FIG3_PARAMS[key])
        )
    if not 0 < out["weak_gain_scale"] <= 1:
        raise ScenarioError("mimo.weak_gain_scale: must lie in (0, 1]")
    return out


def _must(sec) -> dict:
    out = {}
    for key in ("far", "near"):
        if sec.get(key) not in CONSTELLATIONS:
            raise ScenarioError(f"must.{key}: expected one of {list(CONSTELLATIONS)}")
        out[key] = sec[key]
    if "power_ratio" not in sec:
        raise ScenarioError("must.power_ratio: required")
    beta = _number(sec["power_ratio"], "must.power_ratio")
    if not 0.5 < beta < 1:
        raise ScenarioError("must.power_ratio: must lie in (0.5, 1)")
    out["power_ratio"] = beta
    cats = sec.get("categories", ["Cat1", "Cat2", "Cat3"])
    if not isinstance(cats, list) or not cats or any(c not in ("Cat1", "Cat2", "Cat3") for c in cats):
        raise ScenarioError("must.categories: expected a non-empty subset of Cat1, Cat2, Cat3")
    out["categories"] = tuple(cats)
    if "near_offset_db" in sec:
        out["near_offset_db"] = _number(sec["near_offset_db"], "must.near_offset_db")
    return out
