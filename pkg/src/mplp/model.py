"""Problem data model, stochastic instance generator, and instance file I/O.

Units are fixed across the package: coordinates in kilometres, times in float
minutes since midnight, demand in integer parcel units.  The planning horizon
is a single working day from 08:00 to 18:00.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

HORIZON_START = 480.0  # 08:00
HORIZON_END = 1080.0  # 18:00
# Window start anchors: on-the-hour slots 08:00..17:00, so that a one-hour
# window starting at the last anchor still fits inside the horizon.
HOUR_GRID = tuple(480.0 + 60.0 * k for k in range(10))
MIN_WINDOW_MINUTES = 10.0
MIN_WALK_KM = 0.05
FORMAT_TAG = "mplp-1"
BIG_M = 1e8  # kept as a config constant; the constructive scheduler never needs it

_RETRY_BUDGET = 10_000


class MplpError(Exception):
    """Base class for package errors."""


class GenerationError(MplpError):
    """Rejection-sampling budget exhausted while generating an instance."""


class LoadError(MplpError):
    """Instance file is malformed or violates a structural invariant."""


@dataclass
class Coord:
    """A planar position in kilometres."""

    x: float
    y: float

    def distance_to(self, other: "Coord") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class TimeWindow:
    """Half-open-in-spirit interval [start, end] in minutes since midnight."""

    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start

    def intersects(self, other: "TimeWindow") -> bool:
        """True when the overlap has positive length (touching ends do not count)."""
        return self.start < other.end and other.start < self.end

    def contains(self, start: float, end: float) -> bool:
        return self.start <= start and end <= self.end


@dataclass
class Stopover:
    """One (position, availability window) entry of a customer's daily itinerary."""

    position: Coord
    window: TimeWindow


@dataclass
class Customer:
    id: int
    demand: int  # parcel units
    max_walk: float  # km the customer accepts to walk for pickup
    stopovers: list[Stopover]


@dataclass
class ParkingSpace:
    id: int
    position: Coord
    window: TimeWindow  # when a locker may occupy the space
    service_time: float  # minutes spent per stop


@dataclass
class FleetParams:
    capacity: int = 20  # parcel units per locker
    speed: float = 40.0  # km/hr
    service_radius: float = 5.0  # km
    fixed_cost: float = 20_000.0  # currency per deployed locker
    unit_travel_cost: float = 0.5  # currency per km
    max_fleet: int = 1
    buffer_time: float = 10.0  # optional per-stop pad, applied only on request


@dataclass
class ProblemInstance:
    customers: list[Customer]
    parking_spaces: list[ParkingSpace]
    depot: Coord
    fleet: FleetParams
    weights: tuple[float, float, float]  # (fleet, travel, delay) cost weights
    seed: int


@dataclass
class GenConfig:
    """Knobs for the stochastic instance generator.

    The distribution parameters default to the reference experiment setup;
    sweeps override individual fields.
    """

    n_parking: int
    customers_per_space: int
    area_side_km: float = 5.0
    seed: int = 0
    service_time: float = 10.0
    customer_window_mean: float = 60.0
    customer_window_sd: float = 5.0
    parking_window_mean: float = 50.0
    parking_window_sd: float = 5.0
    walk_mean: float = 0.5
    walk_sd: float = 0.1


DEFAULT_WEIGHTS: tuple[float, float, float] = (10.0, 1.0, 5.0)


def _draw_window(rng: np.random.Generator, start: float, mean: float, sd: float) -> TimeWindow:
    # Length clipped rather than resampled: bounded retries, negligible skew at sd=5.
    length = float(np.clip(rng.normal(mean, sd), MIN_WINDOW_MINUTES, HORIZON_END - start))
    return TimeWindow(start, start + length)


def _point_within(rng: np.random.Generator, center: Coord, radius: float, side: float) -> Coord:
    """Uniform draw in the disk around `center`, clamped into the generation square.

    Clamping never increases the distance to `center` because the center itself
    lies inside the square.
    """
    while True:
        dx = rng.uniform(-radius, radius)
        dy = rng.uniform(-radius, radius)
        if dx * dx + dy * dy <= radius * radius:
            return Coord(
                min(max(center.x + dx, 0.0), side),
                min(max(center.y + dy, 0.0), side),
            )


def _windows_disjoint(windows: list[TimeWindow]) -> bool:
    ordered = sorted(windows, key=lambda w: w.start)
    return all(a.end <= b.start for a, b in zip(ordered, ordered[1:]))


def _generate_customer(
    rng: np.random.Generator,
    cid: int,
    anchor: ParkingSpace,
    anchors: list[ParkingSpace],
    cfg: GenConfig,
    service_radius: float,
) -> Customer:
    demand = int(rng.integers(1, 5))
    n_stop = int(rng.integers(1, 4))
    max_walk = max(MIN_WALK_KM, float(rng.normal(cfg.walk_mean, cfg.walk_sd)))

    budget = _RETRY_BUDGET

    # The first stopover is pinned to the customer's home anchor: it must be
    # nearest to that anchor and reuse the anchor's window slot, which keeps
    # the customer servable at that space after nearest-space assignment.
    while True:
        pinned = _point_within(rng, anchor.position, service_radius, cfg.area_side_km)
        nearest = min(anchors, key=lambda s: (s.position.distance_to(pinned), s.id))
        if nearest.id == anchor.id:
            break
        budget -= 1
        if budget <= 0:
            raise GenerationError(
                f"customer {cid}: could not place a stopover nearest to anchor {anchor.id}"
            )

    positions = [pinned] + [
        _point_within(rng, anchor.position, service_radius, cfg.area_side_km)
        for _ in range(n_stop - 1)
    ]

    while True:
        windows = [
            _draw_window(
                rng, anchor.window.start, cfg.customer_window_mean, cfg.customer_window_sd
            )
        ]
        for _ in range(n_stop - 1):
            start = float(rng.choice(HOUR_GRID))
            windows.append(
                _draw_window(rng, start, cfg.customer_window_mean, cfg.customer_window_sd)
            )
        if _windows_disjoint(windows):
            break
        budget -= 1
        if budget <= 0:
            raise GenerationError(
                f"customer {cid}: could not draw {n_stop} non-overlapping windows"
            )

    stopovers = [Stopover(p, w) for p, w in zip(positions, windows)]
    stopovers.sort(key=lambda s: s.window.start)
    return Customer(id=cid, demand=demand, max_walk=max_walk, stopovers=stopovers)


def generate_instance(
    cfg: GenConfig,
    fleet: FleetParams | None = None,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> ProblemInstance:
    """Generate a seeded random instance.

    Parking anchors are placed uniformly in the square and double as the
    instance's parking spaces; customers cluster around their anchor within the
    fleet service radius.  Deterministic for a given config.
    """
    if cfg.n_parking < 1 or cfg.customers_per_space < 1:
        raise ValueError("n_parking and customers_per_space must be >= 1")
    if cfg.area_side_km <= 0:
        raise ValueError("area_side_km must be positive")

    rng = np.random.default_rng(cfg.seed)
    if fleet is None:
        fleet = FleetParams(max_fleet=cfg.n_parking * cfg.customers_per_space)

    anchors: list[ParkingSpace] = []
    for i in range(cfg.n_parking):
        pos = Coord(rng.uniform(0.0, cfg.area_side_km), rng.uniform(0.0, cfg.area_side_km))
        start = float(rng.choice(HOUR_GRID))
        window = _draw_window(rng, start, cfg.parking_window_mean, cfg.parking_window_sd)
        anchors.append(ParkingSpace(i, pos, window, cfg.service_time))

    customers: list[Customer] = []
    cid = 0
    for anchor in anchors:
        for _ in range(cfg.customers_per_space):
            customers.append(
                _generate_customer(rng, cid, anchor, anchors, cfg, fleet.service_radius)
            )
            cid += 1

    depot = Coord(cfg.area_side_km / 2.0, cfg.area_side_km / 2.0)
    return ProblemInstance(
        customers=customers,
        parking_spaces=anchors,
        depot=depot,
        fleet=fleet,
        weights=tuple(float(w) for w in weights),
        seed=cfg.seed,
    )


# --- validation -------------------------------------------------------------


def _structural_diagnostics(inst: ProblemInstance) -> list[str]:
    out: list[str] = []
    if len(inst.weights) != 3 or any(w <= 0 for w in inst.weights):
        out.append("weights: all three cost weights must be positive")
    f = inst.fleet
    for name, value in (
        ("capacity", f.capacity),
        ("speed", f.speed),
        ("service_radius", f.service_radius),
        ("fixed_cost", f.fixed_cost),
        ("unit_travel_cost", f.unit_travel_cost),
        ("buffer_time", f.buffer_time),
    ):
        if not value > 0:
            out.append(f"fleet.{name}: must be positive (got {value})")
    if f.max_fleet < 1:
        out.append(f"fleet.max_fleet: must be >= 1 (got {f.max_fleet})")

    seen_customers: set[int] = set()
    for c in inst.customers:
        if c.id in seen_customers:
            out.append(f"customer {c.id}: duplicate id")
        seen_customers.add(c.id)
        if c.demand < 1:
            out.append(f"customer {c.id}: demand must be >= 1 (got {c.demand})")
        if c.max_walk < 0:
            out.append(f"customer {c.id}: max_walk must be non-negative")
        if not c.stopovers:
            out.append(f"customer {c.id}: needs at least one stopover")
        for k, s in enumerate(c.stopovers):
            if not s.window.start < s.window.end:
                out.append(
                    f"customer {c.id} stopover {k}: inverted window "
                    f"[{s.window.start}, {s.window.end}]"
                )
            if not (math.isfinite(s.position.x) and math.isfinite(s.position.y)):
                out.append(f"customer {c.id} stopover {k}: non-finite position")
        if not _windows_disjoint([s.window for s in c.stopovers]):
            out.append(f"customer {c.id}: stopover windows overlap")

    seen_spaces: set[int] = set()
    for p in inst.parking_spaces:
        if p.id in seen_spaces:
            out.append(f"parking space {p.id}: duplicate id")
        seen_spaces.add(p.id)
        if not p.window.start < p.window.end:
            out.append(
                f"parking space {p.id}: inverted window [{p.window.start}, {p.window.end}]"
            )
        if not p.service_time > 0:
            out.append(f"parking space {p.id}: service_time must be positive")
    return out


def _reachability_diagnostics(inst: ProblemInstance) -> list[str]:
    # A customer is reachable when some stopover lies within the fleet service
    # radius of a space whose availability window overlaps the stopover window.
    # The tighter per-customer walking condition is established by siting, not
    # required of raw instances.
    if not inst.parking_spaces:
        return []
    out: list[str] = []
    radius = inst.fleet.service_radius
    for c in inst.customers:
        ok = any(
            s.position.distance_to(p.position) <= radius and s.window.intersects(p.window)
            for s in c.stopovers
            for p in inst.parking_spaces
        )
        if not ok:
            out.append(
                f"customer {c.id}: unreachable, no stopover within {radius} km of a "
                "parking space with an overlapping window"
            )
    return out


def validate_instance(inst: ProblemInstance) -> list[str]:
    """Return diagnostics; an empty list means the instance is well formed."""
    out = _structural_diagnostics(inst)
    if not out:
        out.extend(_reachability_diagnostics(inst))
    return out


# --- serialization ----------------------------------------------------------


def _instance_to_dict(inst: ProblemInstance) -> dict:
    return {
        "format": FORMAT_TAG,
        "seed": inst.seed,
        "depot": {"x": inst.depot.x, "y": inst.depot.y},
        "weights": list(inst.weights),
        "fleet": {
            "capacity": inst.fleet.capacity,
            "speed": inst.fleet.speed,
            "service_radius": inst.fleet.service_radius,
            "fixed_cost": inst.fleet.fixed_cost,
            "unit_travel_cost": inst.fleet.unit_travel_cost,
            "max_fleet": inst.fleet.max_fleet,
            "buffer_time": inst.fleet.buffer_time,
        },
        "customers": [
            {
                "id": c.id,
                "demand": c.demand,
                "max_walk": c.max_walk,
                "stopovers": [
                    {
                        "x": s.position.x,
                        "y": s.position.y,
                        "start": s.window.start,
                        "end": s.window.end,
                    }
                    for s in c.stopovers
                ],
            }
            for c in inst.customers
        ],
        "parking_spaces": [
            {
                "id": p.id,
                "x": p.position.x,
                "y": p.position.y,
                "start": p.window.start,
                "end": p.window.end,
                "service_time": p.service_time,
            }
            for p in inst.parking_spaces
        ],
    }


def save_instance(inst: ProblemInstance, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_instance_to_dict(inst), indent=2, sort_keys=True) + "\n")


def _require(payload: dict, key: str, context: str):
    if key not in payload:
        raise LoadError(f"{context}: missing field '{key}'")
    return payload[key]


def load_instance(path: str | Path) -> ProblemInstance:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc

    if not isinstance(payload, dict):
        raise LoadError(f"{path}: top-level value must be an object")
    tag = payload.get("format")
    if tag != FORMAT_TAG:
        raise LoadError(f"{path}: unsupported format tag {tag!r} (expected {FORMAT_TAG!r})")

    try:
        depot_d = _require(payload, "depot", "instance")
        depot = Coord(float(depot_d["x"]), float(depot_d["y"]))
        weights = tuple(float(w) for w in _require(payload, "weights", "instance"))
        fl = _require(payload, "fleet", "instance")
        fleet = FleetParams(
            capacity=int(fl["capacity"]),
            speed=float(fl["speed"]),
            service_radius=float(fl["service_radius"]),
            fixed_cost=float(fl["fixed_cost"]),
            unit_travel_cost=float(fl["unit_travel_cost"]),
            max_fleet=int(fl["max_fleet"]),
            buffer_time=float(fl["buffer_time"]),
        )
        customers = []
        for cd in _require(payload, "customers", "instance"):
            stopovers = [
                Stopover(
                    Coord(float(sd["x"]), float(sd["y"])),
                    TimeWindow(float(sd["start"]), float(sd["end"])),
                )
                for sd in cd["stopovers"]
            ]
            customers.append(
                Customer(
                    id=int(cd["id"]),
                    demand=int(cd["demand"]),
                    max_walk=float(cd["max_walk"]),
                    stopovers=stopovers,
                )
            )
        spaces = [
            ParkingSpace(
                id=int(pd["id"]),
                position=Coord(float(pd["x"]), float(pd["y"])),
                window=TimeWindow(float(pd["start"]), float(pd["end"])),
                service_time=float(pd["service_time"]),
            )
            for pd in _require(payload, "parking_spaces", "instance")
        ]
        seed = int(_require(payload, "seed", "instance"))
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"{path}: malformed field ({exc})") from exc

    inst = ProblemInstance(
        customers=customers,
        parking_spaces=spaces,
        depot=depot,
        fleet=fleet,
        weights=weights,  # type: ignore[arg-type]
        seed=seed,
    )
    problems = _structural_diagnostics(inst)
    if problems:
        raise LoadError(f"{path}: invalid instance: " + "; ".join(problems))
    return inst
