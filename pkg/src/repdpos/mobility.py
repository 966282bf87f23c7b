"""GPS traces, road-side-unit deployment, and interaction event streams.

Feeds the reputation calculus: vehicles moving through RSU coverage discs
generate timestamped positive/negative interaction records, with outcomes
driven by each RSU's behavior profile (honest or malicious per schedule,
always-positive toward collusion partners).

Trace files follow the de-facto cab-trace line format
``latitude longitude occupancy unix_timestamp`` (one file per vehicle,
vehicle ID taken from the file name); occupancy is parsed and discarded.
Coverage tests use great-circle (haversine) distance.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_008.8
HONEST = "honest"
MALICIOUS = "malicious"


class Bbox(NamedTuple):
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def validate(self) -> "Bbox":
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError(f"degenerate bounding box {self}")
        return self

    @property
    def center(self) -> tuple[float, float]:
        return ((self.lat_min + self.lat_max) / 2, (self.lon_min + self.lon_max) / 2)


@dataclass(frozen=True, slots=True)
class TracePoint:
    vehicle: str
    latitude: float
    longitude: float
    timestamp: float


@dataclass(frozen=True, slots=True)
class RsuSite:
    rsu: str
    latitude: float
    longitude: float
    coverage_radius: float

    def __post_init__(self) -> None:
        if self.coverage_radius <= 0:
            raise ValueError("coverage_radius must be positive")


@dataclass(frozen=True, slots=True)
class InteractionRecord:
    vehicle: str
    rsu: str
    timestamp: float
    outcome: str  # "positive" | "negative"
    link_quality: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.link_quality <= 1.0:
            raise ValueError("link_quality must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class BehaviorProfile:
    """Honest/malicious schedule of one entity plus its collusion partners.

    Unscheduled time is honest.  In malicious mode the entity records
    negative outcomes toward every non-partner it serves; collusion
    partners always see positive outcomes.
    """

    entity: str
    schedule: tuple[tuple[float, float, str], ...] = ()
    collusion_partners: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        spans = sorted(self.schedule)
        for (s1, e1, m1), (s2, _e2, _m2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError(f"overlapping schedule intervals for {self.entity}")
        for start, end, mode in spans:
            if end <= start:
                raise ValueError("schedule interval must have positive length")
            if mode not in (HONEST, MALICIOUS):
                raise ValueError(f"unknown mode {mode!r}")

    def mode_at(self, t: float) -> str:
        for start, end, mode in self.schedule:
            if start <= t < end:
                return mode
        return HONEST


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; accepts scalars or arrays."""
    p1 = np.radians(np.asarray(lat1, dtype=float))
    p2 = np.radians(np.asarray(lat2, dtype=float))
    dphi = p2 - p1
    dlam = np.radians(np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float))
    a = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


def parse_trace(lines: Iterable[str], vehicle: str) -> tuple[list[TracePoint], int]:
    """Parse one vehicle's trace; returns (points, skipped_line_count).

    Lines are "lat lon occupancy unix_time"; malformed lines are counted
    and skipped; points come back sorted by timestamp (duplicates on the
    same timestamp collapse to the first seen).  A trace with zero valid
    points is an error.
    """
    points: list[TracePoint] = []
    skipped = 0
    for line in lines:
        parts = line.split()
        if len(parts) != 4:
            if line.strip():
                skipped += 1
            continue
        try:
            lat, lon = float(parts[0]), float(parts[1])
            int(parts[2])  # occupancy, discarded
            ts = float(parts[3])
        except ValueError:
            skipped += 1
            continue
        points.append(TracePoint(vehicle, lat, lon, ts))
    if not points:
        raise ValueError(f"trace for {vehicle!r} has no valid points")
    points.sort(key=lambda p: p.timestamp)
    deduped = [points[0]]
    for p in points[1:]:
        if p.timestamp > deduped[-1].timestamp:
            deduped.append(p)
    return deduped, skipped


def load_trace_dir(path: str) -> dict[str, list[TracePoint]]:
    """Load every per-vehicle trace file in a directory (ID = file stem)."""
    traces: dict[str, list[TracePoint]] = {}
    for name in sorted(os.listdir(path)):
        full = os.path.join(path, name)
        if not os.path.isfile(full) or name.startswith("."):
            continue
        vehicle = os.path.splitext(name)[0]
        with open(full, encoding="utf-8") as fh:
            points, _ = parse_trace(fh, vehicle)
        traces[vehicle] = points
    if not traces:
        raise ValueError(f"no trace files found under {path!r}")
    return traces


def filter_region(
    traces: Mapping[str, list[TracePoint]], bbox: Bbox
) -> dict[str, list[TracePoint]]:
    """Keep points strictly inside the box; drop emptied vehicles."""
    bbox.validate()
    kept: dict[str, list[TracePoint]] = {}
    for vehicle, points in traces.items():
        inside = [
            p
            for p in points
            if bbox.lat_min < p.latitude < bbox.lat_max
            and bbox.lon_min < p.longitude < bbox.lon_max
        ]
        if inside:
            kept[vehicle] = inside
    return kept


def deploy_rsus(
    n: int,
    bbox: Bbox,
    radius_range: tuple[float, float] = (300.0, 500.0),
    seed: int = 0,
) -> list[RsuSite]:
    """Place n sites on the nearest square grid covering the box.

    The ceil(sqrt(n)) x ceil(sqrt(n)) grid is truncated to n cells
    (row-major); coverage radii are drawn uniformly from radius_range
    with the given seed.  Deterministic for fixed inputs.
    """
    if n < 1:
        raise ValueError("need at least one site")
    if radius_range[0] <= 0 or radius_range[1] < radius_range[0]:
        raise ValueError("radius range must be positive and ascending")
    bbox.validate()
    side = math.isqrt(n)
    if side * side < n:
        side += 1
    rng = np.random.default_rng(seed)
    radii = rng.uniform(radius_range[0], radius_range[1], n)
    sites = []
    width = max(1, len(str(n - 1)))
    for idx in range(n):
        row, col = divmod(idx, side)
        lat = bbox.lat_min + (row + 0.5) * (bbox.lat_max - bbox.lat_min) / side
        lon = bbox.lon_min + (col + 0.5) * (bbox.lon_max - bbox.lon_min) / side
        sites.append(RsuSite(f"rsu{idx:0{width}d}", lat, lon, float(radii[idx])))
    return sites


def synthetic_traces(
    n_vehicles: int,
    bbox: Bbox,
    speed_range_kmh: tuple[float, float] = (50.0, 150.0),
    duration: float = 3600.0,
    step: float = 10.0,
    seed: int = 0,
    home_range_m: float | None = None,
) -> dict[str, list[TracePoint]]:
    """Random-waypoint motion, one straight constant-speed leg per step run.

    Direction changes only happen on step boundaries, so the speed
    recovered from any two consecutive points equals the drawn leg speed.
    With ``home_range_m`` set, each vehicle roams a disc around a home
    point (homes on a jittered grid over the box), which gives every RSU
    a stable population of regular visitors.  Deterministic given seed.
    """
    if n_vehicles < 1 or step <= 0:
        raise ValueError("need n_vehicles >= 1 and step > 0")
    if speed_range_kmh[0] <= 0 or speed_range_kmh[1] < speed_range_kmh[0]:
        raise ValueError("speed range must be positive and ascending")
    if home_range_m is not None and home_range_m < 10.0:
        raise ValueError("home_range_m below 10 m cannot seed waypoint legs")
    bbox.validate()
    rng = np.random.default_rng(seed)
    n_steps = int(duration // step)
    lat_c = (bbox.lat_min + bbox.lat_max) / 2
    m_per_deg_lat = EARTH_RADIUS_M * math.pi / 180.0
    m_per_deg_lon = m_per_deg_lat * math.cos(math.radians(lat_c))
    width_m = (bbox.lon_max - bbox.lon_min) * m_per_deg_lon
    height_m = (bbox.lat_max - bbox.lat_min) * m_per_deg_lat

    side = math.isqrt(n_vehicles)
    if side * side < n_vehicles:
        side += 1

    traces: dict[str, list[TracePoint]] = {}
    id_width = max(1, len(str(n_vehicles - 1)))
    for v in range(n_vehicles):
        vehicle = f"veh{v:0{id_width}d}"
        if home_range_m is None:
            home = np.array([rng.uniform(0, width_m), rng.uniform(0, height_m)])
            roam = max(width_m, height_m)
        else:
            row, col = divmod(v, side)
            home = np.array(
                [
                    (col + 0.5 + rng.uniform(-0.3, 0.3)) * width_m / side,
                    (row + 0.5 + rng.uniform(-0.3, 0.3)) * height_m / side,
                ]
            )
            roam = home_range_m

        def draw_target() -> np.ndarray:
            while True:
                angle = rng.uniform(0, 2 * math.pi)
                dist = roam * math.sqrt(rng.uniform(0, 1))
                cand = home + dist * np.array([math.cos(angle), math.sin(angle)])
                if 0 <= cand[0] <= width_m and 0 <= cand[1] <= height_m:
                    return cand

        pos = draw_target()
        points = []

        def emit(step_idx: int) -> None:
            lat = bbox.lat_min + pos[1] / m_per_deg_lat
            lon = bbox.lon_min + pos[0] / m_per_deg_lon
            points.append(TracePoint(vehicle, lat, lon, step_idx * step))

        emit(0)
        step_idx = 0
        while step_idx < n_steps:
            target = draw_target()
            leg = target - pos
            leg_len = float(np.hypot(*leg))
            if leg_len < 1.0:
                continue
            speed = rng.uniform(*speed_range_kmh) / 3.6  # m/s
            advance = speed * step
            leg_steps = max(1, int(leg_len // advance))
            direction = leg / leg_len
            for _ in range(min(leg_steps, n_steps - step_idx)):
                pos = pos + direction * advance
                step_idx += 1
                emit(step_idx)
            # straight legs between points inside the convex roam disc
            # never exit the box-clipped disc
        traces[vehicle] = points
    return traces


def calibrate_fire_probability(
    coverage_points_per_pair: float,
    duration_s: float,
    weekly_target: tuple[float, float] = (50.0, 200.0),
) -> float:
    """Bernoulli probability hitting the weekly interaction-frequency band.

    Scales the mean number of in-coverage trace points per (vehicle, RSU)
    pair to a week and aims at the band midpoint.
    """
    if coverage_points_per_pair <= 0 or duration_s <= 0:
        raise ValueError("need positive coverage statistics")
    per_week = coverage_points_per_pair * (604_800.0 / duration_s)
    target = (weekly_target[0] + weekly_target[1]) / 2.0
    return float(min(1.0, target / per_week))


def interaction_events(
    traces: Mapping[str, Sequence[TracePoint]],
    sites: Sequence[RsuSite],
    behaviors: Mapping[str, BehaviorProfile],
    seed: int = 0,
    link_quality_range: tuple[float, float] = (0.6, 1.0),
    fire_probability: float | None = None,
    weekly_target: tuple[float, float] = (50.0, 200.0),
) -> list[InteractionRecord]:
    """Generate the interaction stream for traces against deployed sites.

    Each in-coverage trace point fires an interaction with a fixed
    Bernoulli probability (auto-calibrated from the weekly frequency band
    when not given).  Outcome: positive while the site is honest toward
    the vehicle, negative while malicious — except collusion partners,
    who always record positive.  Deterministic given the seed; events are
    returned sorted by (timestamp, vehicle, rsu).
    """
    site_lat = np.array([s.latitude for s in sites])
    site_lon = np.array([s.longitude for s in sites])
    site_rad = np.array([s.coverage_radius for s in sites])

    # first pass: coverage hits per vehicle, needed for calibration
    coverage: dict[str, np.ndarray] = {}
    total_hits = 0
    duration = 0.0
    for vehicle in sorted(traces):
        points = traces[vehicle]
        if not points:
            continue
        lat = np.array([p.latitude for p in points])
        lon = np.array([p.longitude for p in points])
        dist = haversine_m(lat[:, None], lon[:, None], site_lat[None, :], site_lon[None, :])
        hits = dist <= site_rad[None, :]
        coverage[vehicle] = hits
        total_hits += int(hits.sum())
        duration = max(duration, points[-1].timestamp - points[0].timestamp)

    if fire_probability is None:
        pairs = sum(int(h.any(axis=0).sum()) for h in coverage.values())
        if pairs == 0 or duration <= 0:
            fire_probability = 0.0
        else:
            fire_probability = calibrate_fire_probability(
                total_hits / pairs, duration, weekly_target
            )

    rng = np.random.default_rng(seed)
    records: list[InteractionRecord] = []
    for vehicle in sorted(coverage):
        points = traces[vehicle]
        hits = coverage[vehicle]
        for p_idx, s_idx in zip(*np.nonzero(hits)):
            if rng.uniform() >= fire_probability:
                continue
            point = points[p_idx]
            site = sites[s_idx]
            profile = behaviors.get(site.rsu)
            if profile is None or profile.mode_at(point.timestamp) == HONEST:
                outcome = "positive"
            elif vehicle in profile.collusion_partners:
                outcome = "positive"
            else:
                outcome = "negative"
            records.append(
                InteractionRecord(
                    vehicle=vehicle,
                    rsu=site.rsu,
                    timestamp=point.timestamp,
                    outcome=outcome,
                    link_quality=float(rng.uniform(*link_quality_range)),
                )
            )
    records.sort(key=lambda r: (r.timestamp, r.vehicle, r.rsu))
    return records
