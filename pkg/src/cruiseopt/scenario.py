"""Problem-instance definition: aircraft, cruise altitude, wind, hazards,
objective weights, endpoints, bounds, and the JSON file format they live in.

A scenario file is a single JSON document with explicit SI units in field
names and one `schema_version` field; missing wind/hazards/bounds fall back
to documented defaults so a minimal file needs only endpoints, altitude,
mass, and weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .atmosphere import ALTITUDE_MAX, ALTITUDE_MIN
from .hazards import EllipseHazard
from .performance import B767_300ER, AircraftModel
from .windfield import WindField

SCHEMA_VERSION = 1

# Built-in airframes addressable by name from scenario files
AIRCRAFT_REGISTRY: dict[str, AircraftModel] = {
    "b767-300er": B767_300ER,
}

DEFAULT_MACH_MIN = 0.50
DEFAULT_MACH_MAX = 0.88
DEFAULT_HEADING_LIMIT = math.radians(85.0)
DEFAULT_THROTTLE_MIN = 0.10
DEFAULT_THROTTLE_MAX = 1.00

# Heading magnitude past which integration is aborted as hopeless; the
# chord-aligned internal frame keeps well-posed solutions far from it.
HEADING_ABORT = math.radians(89.0)


@dataclass(frozen=True)
class Bounds:
    """Control bounds. Heading limits are measured from the start-goal chord
    direction, so the same file works for any route orientation."""

    mach_min: float = DEFAULT_MACH_MIN
    mach_max: float = DEFAULT_MACH_MAX
    heading_min: float = -DEFAULT_HEADING_LIMIT   # rad, chord-relative
    heading_max: float = DEFAULT_HEADING_LIMIT
    throttle_min: float = DEFAULT_THROTTLE_MIN
    throttle_max: float = DEFAULT_THROTTLE_MAX

    def __post_init__(self):
        if not 0.0 < self.mach_min < self.mach_max < 1.0:
            raise ValueError(
                "bounds must satisfy 0 < M_min < M_max < 1, got "
                f"[{self.mach_min}, {self.mach_max}]"
            )
        if not -HEADING_ABORT <= self.heading_min < self.heading_max <= HEADING_ABORT:
            raise ValueError(
                "heading bounds must satisfy chi_min < chi_max with "
                f"|chi| < {math.degrees(HEADING_ABORT):.0f} deg, got "
                f"[{self.heading_min}, {self.heading_max}] rad"
            )
        if not 0.0 < self.throttle_min < self.throttle_max <= 1.0:
            raise ValueError(
                "throttle bounds must satisfy 0 < Pi_min < Pi_max <= 1, got "
                f"[{self.throttle_min}, {self.throttle_max}]"
            )

    def to_dict(self) -> dict:
        return {
            "mach_min": self.mach_min,
            "mach_max": self.mach_max,
            "heading_min_rad": self.heading_min,
            "heading_max_rad": self.heading_max,
            "throttle_min": self.throttle_min,
            "throttle_max": self.throttle_max,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Bounds":
        base = Bounds()
        return Bounds(
            mach_min=float(doc.get("mach_min", base.mach_min)),
            mach_max=float(doc.get("mach_max", base.mach_max)),
            heading_min=float(doc.get("heading_min_rad", base.heading_min)),
            heading_max=float(doc.get("heading_max_rad", base.heading_max)),
            throttle_min=float(doc.get("throttle_min", base.throttle_min)),
            throttle_max=float(doc.get("throttle_max", base.throttle_max)),
        )


@dataclass(frozen=True)
class Weights:
    """Objective weights: J = time_weight * tf + final_mass_weight * m(tf)
    plus the accumulated hazard penalty. Units 1/s and 1/kg respectively."""

    time_weight: float = 1.0
    final_mass_weight: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.time_weight)
                and math.isfinite(self.final_mass_weight)):
            raise ValueError("weights must be finite")

    def to_dict(self) -> dict:
        return {
            "time_weight_per_s": self.time_weight,
            "final_mass_weight_per_kg": self.final_mass_weight,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Weights":
        return Weights(
            time_weight=float(doc.get("time_weight_per_s", 1.0)),
            final_mass_weight=float(doc.get("final_mass_weight_per_kg", 0.0)),
        )


@dataclass(frozen=True)
class Scenario:
    """One complete cruise problem instance.

    Immutable during a solve; every numeric field is SI. `hazards` and the
    wind primitive list may be empty (still air, no penalty zones).
    """

    aircraft: AircraftModel
    altitude: float                 # cruise altitude h-bar, m
    initial_mass: float             # m0, kg
    start: tuple[float, float]      # (x0, y0), m
    goal: tuple[float, float]       # (xf, yf), m
    weights: Weights = field(default_factory=Weights)
    wind: WindField = field(default_factory=WindField)
    hazards: tuple[EllipseHazard, ...] = ()
    bounds: Bounds = field(default_factory=Bounds)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start",
                           (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "goal",
                           (float(self.goal[0]), float(self.goal[1])))
        object.__setattr__(self, "hazards", tuple(self.hazards))
        if not ALTITUDE_MIN <= self.altitude <= ALTITUDE_MAX:
            raise ValueError(
                f"altitude must lie in [{ALTITUDE_MIN}, {ALTITUDE_MAX}] m"
            )
        if not 0.0 < self.initial_mass <= self.aircraft.mtow:
            raise ValueError(
                f"initial_mass must satisfy 0 < m0 <= MTOW "
                f"({self.aircraft.mtow} kg), got {self.initial_mass}"
            )
        if self.chord_length() <= 0.0:
            raise ValueError("start and goal endpoints must be distinct")

    def chord_length(self) -> float:
        dx = self.goal[0] - self.start[0]
        dy = self.goal[1] - self.start[1]
        return math.hypot(dx, dy)

    def chord_angle(self) -> float:
        """Direction of the start-goal chord, rad, in the scenario frame."""
        dx = self.goal[0] - self.start[0]
        dy = self.goal[1] - self.start[1]
        return math.atan2(dy, dx)

    def with_wind(self, wind: WindField) -> "Scenario":
        return replace(self, wind=wind)

    def to_dict(self) -> dict:
        aircraft_key = None
        for key, model in AIRCRAFT_REGISTRY.items():
            if model == self.aircraft:
                aircraft_key = key
                break
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "aircraft": aircraft_key or self.aircraft.to_dict(),
            "altitude_m": self.altitude,
            "initial_mass_kg": self.initial_mass,
            "start_m": [self.start[0], self.start[1]],
            "goal_m": [self.goal[0], self.goal[1]],
            "weights": self.weights.to_dict(),
            "wind": self.wind.to_dicts(),
            "hazards": [h.to_dict() for h in self.hazards],
            "bounds": self.bounds.to_dict(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(
                f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}"
            )
        for key in ("altitude_m", "initial_mass_kg", "start_m", "goal_m"):
            if key not in doc:
                raise ValueError(f"scenario is missing required field {key!r}")
        aircraft_doc = doc.get("aircraft", "b767-300er")
        if isinstance(aircraft_doc, str):
            key = aircraft_doc.lower()
            if key not in AIRCRAFT_REGISTRY:
                known = ", ".join(sorted(AIRCRAFT_REGISTRY))
                raise ValueError(f"unknown aircraft {aircraft_doc!r}; known: {known}")
            aircraft = AIRCRAFT_REGISTRY[key]
        else:
            aircraft = AircraftModel.from_dict(aircraft_doc)
        return Scenario(
            aircraft=aircraft,
            altitude=float(doc["altitude_m"]),
            initial_mass=float(doc["initial_mass_kg"]),
            start=(float(doc["start_m"][0]), float(doc["start_m"][1])),
            goal=(float(doc["goal_m"][0]), float(doc["goal_m"][1])),
            weights=Weights.from_dict(doc.get("weights", {})),
            wind=WindField.from_dicts(doc.get("wind", [])),
            hazards=tuple(
                EllipseHazard.from_dict(h) for h in doc.get("hazards", [])
            ),
            bounds=Bounds.from_dict(doc.get("bounds", {})),
            name=str(doc.get("name", "")),
        )


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file, resolving a builtin name first.

    `path` may be a filesystem path or the bare name of a bundled scenario
    (e.g. "nominal"). Raises ValueError naming the violated invariant or the
    parse failure location.
    """
    p = Path(path)
    if not p.exists():
        name = p.stem if p.suffix else str(path)
        if name in builtin_scenarios():
            return _load_builtin(name)
        raise FileNotFoundError(
            f"no scenario file {path!r} and no builtin scenario named {name!r} "
            f"(builtins: {', '.join(builtin_scenarios())})"
        )
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON at line {exc.lineno}, "
                         f"column {exc.colno}: {exc.msg}") from exc
    scenario = Scenario.from_dict(doc)
    if not scenario.name:
        scenario = replace(scenario, name=p.stem)
    return scenario


def builtin_scenarios() -> list[str]:
    root = resources.files("cruiseopt") / "scenarios"
    return sorted(
        entry.name[: -len(".json")]
        for entry in root.iterdir()
        if entry.name.endswith(".json")
    )


def _load_builtin(name: str) -> Scenario:
    root = resources.files("cruiseopt") / "scenarios"
    doc = json.loads((root / f"{name}.json").read_text())
    scenario = Scenario.from_dict(doc)
    if not scenario.name:
        scenario = replace(scenario, name=name)
    return scenario
