"""Roadside infrastructure: gantries, advisory acquisition, and the feed.

Variable-speed gantries sit every half mile along a mile-marker corridor
and post speeds in whole multiples of 5 mph between 30 and 70. A vehicle
acquires the advisory of the nearest same-direction gantry once it comes
within acquire_mi of it; the acquired reading then sticks until a new
gantry is acquired or the vehicle leaves the corridor, which mirrors how
a geofence lookup behaves between gantries. Advisory fetches happen on
each new acquisition and every poll_period_s thereafter, and reach the
vehicle through a feed with scalar latency, random dropout, and a
staleness bound after which the held reading is no longer trusted.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .units import mph_to_mps, mps_to_mph, round_to_multiple


class Direction(str, Enum):
    EASTBOUND = "eastbound"
    WESTBOUND = "westbound"


@dataclass
class Gantry:
    """A posted-speed gantry. posted_mph and last_update are runtime state."""

    gantry_id: str
    mile_marker: float
    direction: Direction
    posted_mph: int = 70
    last_update: float = -math.inf


@dataclass
class CorridorMap:
    """Gantries sorted by mile marker plus the corridor bounds."""

    gantries: list[Gantry]
    mm_lo: float
    mm_hi: float

    def __post_init__(self) -> None:
        self.gantries.sort(key=lambda g: (g.mile_marker, g.gantry_id))
        if self.mm_lo >= self.mm_hi:
            raise ValueError("corridor: need mm_lo < mm_hi")
        self._by_id = {g.gantry_id: g for g in self.gantries}

    def contains(self, mile_marker: float) -> bool:
        return self.mm_lo <= mile_marker <= self.mm_hi

    def by_id(self, gantry_id: str) -> Gantry:
        return self._by_id[gantry_id]

    @classmethod
    def build(
        cls,
        mm_lo: float = 53.0,
        mm_hi: float = 70.0,
        spacing_mi: float = 0.5,
        direction: Direction = Direction.WESTBOUND,
    ) -> "CorridorMap":
        prefix = "wb" if direction is Direction.WESTBOUND else "eb"
        gantries = []
        n = int(round((mm_hi - mm_lo) / spacing_mi))
        for i in range(n + 1):
            mm = mm_lo + i * spacing_mi
            gantries.append(Gantry(f"{prefix}_{mm:06.2f}", mm, direction))
        return cls(gantries, mm_lo, mm_hi)

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gantry_id", "mile_marker", "direction"])
            for g in self.gantries:
                writer.writerow([g.gantry_id, f"{g.mile_marker:.4f}", g.direction.value])

    @classmethod
    def load(cls, path: str | Path) -> "CorridorMap":
        gantries = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                gantries.append(
                    Gantry(
                        row["gantry_id"],
                        float(row["mile_marker"]),
                        Direction(row["direction"]),
                    )
                )
        if not gantries:
            raise ValueError(f"corridor file {path}: no gantries")
        mms = [g.mile_marker for g in gantries]
        return cls(gantries, min(mms), max(mms))


def infer_heading(
    mm_history: Sequence[tuple[float, float]], window_s: float = 2.0
) -> Optional[Direction]:
    """Infer travel direction from (time, mile_marker) samples.

    Uses the sign of the mile-marker change across the last window_s of
    history. Returns None until the history spans the window or while the
    vehicle is not measurably moving, and callers treat None as an
    invalid-advisory condition.
    """
    if len(mm_history) < 2:
        return None
    t_last, mm_last = mm_history[-1]
    if t_last - mm_history[0][0] < window_s:
        return None
    mm_then = None
    for t, mm in reversed(mm_history):
        if t_last - t >= window_s:
            mm_then = mm
            break
    if mm_then is None:
        return None
    delta = mm_last - mm_then
    if delta > 1e-9:
        return Direction.EASTBOUND
    if delta < -1e-9:
        return Direction.WESTBOUND
    return None


@dataclass(frozen=True)
class VslReading:
    """An advisory as seen by the vehicle; invalid readings carry v_gr 0."""

    gantry_id: Optional[str]
    v_gr: float
    valid: bool
    fetched_at: float


INVALID_READING = VslReading(None, 0.0, False, -math.inf)


def active_gantry(
    mile_marker: float,
    heading: Optional[Direction],
    corridor: CorridorMap,
    prior_id: Optional[str] = None,
    now: float = 0.0,
    acquire_mi: float = 0.15,
) -> VslReading:
    """Resolve which gantry's advisory applies at this position.

    A gantry is acquired when it is the nearest same-direction gantry and
    lies within acquire_mi. Between acquisitions the prior gantry's
    reading persists. Outside the corridor, or with an unknown heading,
    the reading is invalid and any prior acquisition is forgotten by the
    caller (see GantryTracker).
    """
    if heading is None or not corridor.contains(mile_marker):
        return INVALID_READING
    matching = [g for g in corridor.gantries if g.direction == heading]
    if not matching:
        return INVALID_READING
    nearest = min(
        matching, key=lambda g: (abs(g.mile_marker - mile_marker), g.gantry_id)
    )
    if abs(nearest.mile_marker - mile_marker) <= acquire_mi:
        chosen = nearest
    elif prior_id is not None:
        chosen = corridor.by_id(prior_id)
    else:
        return INVALID_READING
    return VslReading(chosen.gantry_id, mph_to_mps(chosen.posted_mph), True, now)


@dataclass
class GantryTracker:
    """Holds the sticky acquisition across calls and flags new acquisitions."""

    corridor: CorridorMap
    acquire_mi: float = 0.15
    prior_id: Optional[str] = None

    def update(
        self, mile_marker: float, heading: Optional[Direction], now: float
    ) -> tuple[VslReading, bool]:
        reading = active_gantry(
            mile_marker, heading, self.corridor, self.prior_id, now, self.acquire_mi
        )
        if not reading.valid:
            self.prior_id = None
            return reading, False
        newly_acquired = reading.gantry_id != self.prior_id
        self.prior_id = reading.gantry_id
        return reading, newly_acquired


def poll_schedule(
    entry_times: Sequence[float], until: float, period: float = 5.0
) -> list[float]:
    """Advisory fetch times: one on each bounds entry, then every period
    seconds until the next entry resets the cadence."""
    if period <= 0:
        raise ValueError("period: must be positive")
    entries = sorted(entry_times)
    fetches: list[float] = []
    for i, start in enumerate(entries):
        stop = entries[i + 1] if i + 1 < len(entries) else math.inf
        t = start
        while t < stop and t <= until:
            fetches.append(t)
            t += period
    return fetches


@dataclass
class PollTimer:
    """Incremental form of poll_schedule for use inside the simulator."""

    period: float = 5.0
    last_fetch: Optional[float] = None

    def on_entry(self, now: float) -> bool:
        self.last_fetch = now
        return True

    def due(self, now: float) -> bool:
        if self.last_fetch is None:
            return False
        if now - self.last_fetch >= self.period:
            self.last_fetch = now
            return True
        return False


@dataclass(frozen=True)
class VslConfig:
    """Surrogate congestion-responsive posting policy."""

    activation_mph: float = 45.0
    buffer_mph: float = 10.0
    min_mph: int = 30
    max_mph: int = 70
    round_mph: int = 5
    max_change_mph: int = 10
    update_period_s: float = 30.0
    lookahead_segments: int = 2

    def __post_init__(self) -> None:
        if self.update_period_s < 30.0:
            raise ValueError("update_period_s: must be at least 30 s")
        if self.min_mph >= self.max_mph:
            raise ValueError("min_mph/max_mph: need min < max")
        if self.lookahead_segments < 1:
            raise ValueError("lookahead_segments: must be at least 1")


def vsl_algorithm(
    downstream_speeds: Sequence[Optional[float]],
    prev_posted_mph: int,
    cfg: VslConfig,
) -> int:
    """Post a speed from downstream segment means (m/s, None = no data).

    Inactive (all segments empty or the minimum at or above the activation
    threshold) posts max_mph. Active posts the minimum downstream speed
    plus a buffer, rounded to the posting step and clamped to the posting
    range. Either way the change from the previous posting is limited to
    max_change_mph per update.
    """
    speeds = [s for s in downstream_speeds if s is not None and not math.isnan(s)]
    if not speeds:
        target = float(cfg.max_mph)
    else:
        min_mph = mps_to_mph(min(speeds))
        if min_mph >= cfg.activation_mph:
            target = float(cfg.max_mph)
        else:
            target = round_to_multiple(min_mph + cfg.buffer_mph, cfg.round_mph)
            target = min(max(target, cfg.min_mph), cfg.max_mph)
    lo = prev_posted_mph - cfg.max_change_mph
    hi = prev_posted_mph + cfg.max_change_mph
    return int(min(max(target, lo), hi))


@dataclass(frozen=True)
class FeedConfig:
    latency_s: float = 0.0
    dropout: float = 0.0
    staleness_s: float = 60.0
    poll_period_s: float = 5.0

    def __post_init__(self) -> None:
        if self.latency_s < 0:
            raise ValueError("latency_s: must be non-negative")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError("dropout: must be in [0, 1]")
        if self.staleness_s <= 0:
            raise ValueError("staleness_s: must be positive")
        if self.poll_period_s <= 0:
            raise ValueError("poll_period_s: must be positive")


class FeedClient:
    """Delivers advisory readings to the vehicle with latency and dropout.

    Each published reading either drops (with probability dropout) or
    arrives latency_s later. The client hands out the most recently
    arrived reading until staleness_s passes without a new arrival, after
    which it reports nothing and the advisory goes invalid.
    """

    def __init__(self, cfg: FeedConfig, rng: Optional[random.Random] = None):
        self.cfg = cfg
        self.rng = rng if rng is not None else random.Random(0)
        self._in_flight: list[tuple[float, VslReading]] = []
        self._held: Optional[VslReading] = None
        self._held_since = -math.inf

    def publish(self, reading: VslReading, now: float) -> None:
        if self.cfg.dropout > 0.0 and self.rng.random() < self.cfg.dropout:
            return
        self._in_flight.append((now + self.cfg.latency_s, reading))

    def poll(self, now: float) -> Optional[VslReading]:
        while self._in_flight and self._in_flight[0][0] <= now:
            arrival, reading = self._in_flight.pop(0)
            self._held = reading
            self._held_since = arrival
        if self._held is None:
            return None
        if now - self._held_since > self.cfg.staleness_s:
            return None
        return self._held
