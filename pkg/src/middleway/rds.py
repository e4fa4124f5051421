"""Roadside-sensor grid estimates and latency-induced error statistics.

Fixed sensors report mean speeds over short intervals, which yields a
space-time grid of measurements. A trajectory point can be scored two
ways: an ideal estimate averaging the four grid cells bracketing the
point in space and time, and a realtime estimate averaging only the two
spatial neighbors' most recent reports available at the point's time
minus a feed latency. The spread of (realtime - ideal) over a trajectory
quantifies how stale infrastructure data degrades speed awareness.

Cells are indexed by the coordinate they begin at: cell (i, k) covers
sensor interval [sensor_mm[i], sensor_mm[i+1]) and report window
[origin + k*T, origin + (k+1)*T). A point exactly on a lattice node
belongs to the cell beginning there. Missing cells are dropped from
averages and the remaining cells reweighted; a point with no surviving
neighbor raises AllNeighborsMissing.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .units import MPS_PER_MPH, M_PER_MILE, mph_to_mps


class AllNeighborsMissing(Exception):
    """No grid data supports the requested point."""


@dataclass(frozen=True)
class GridSpec:
    sensor_mm: tuple[float, ...]
    origin_s: float = 0.0
    cell_duration_s: float = 30.0
    duration_s: float = 900.0

    def __post_init__(self) -> None:
        if self.cell_duration_s <= 0:
            raise ValueError("cell_duration_s: must be positive")
        if len(self.sensor_mm) < 2:
            raise ValueError("sensor_mm: need at least two sensors")
        if list(self.sensor_mm) != sorted(self.sensor_mm):
            raise ValueError("sensor_mm: must be sorted ascending")
        if self.duration_s <= 0:
            raise ValueError("duration_s: must be positive")

    @property
    def n_reports(self) -> int:
        return int(math.ceil(self.duration_s / self.cell_duration_s))


def default_sensors(mm_lo: float = 53.0, mm_hi: float = 70.0, spacing: float = 0.5):
    n = int(round((mm_hi - mm_lo) / spacing)) + 1
    return tuple(mm_lo + i * spacing for i in range(n))


@dataclass
class RdsGrid:
    spec: GridSpec
    speeds: np.ndarray

    def __post_init__(self) -> None:
        expected = (len(self.spec.sensor_mm), self.spec.n_reports)
        if self.speeds.shape != expected:
            raise ValueError(f"speeds: expected shape {expected}")

    def report_start(self, k: int) -> float:
        return self.spec.origin_s + k * self.spec.cell_duration_s


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    mile_marker: float
    speed_mps: float


@dataclass
class ErrorStats:
    latency_s: float
    n: int
    mean_mps: float
    std_mps: float
    histogram: dict[int, int] = field(default_factory=dict)
    bin_width_mph: float = 1.0


def _spatial_pair(spec: GridSpec, mm: float) -> tuple[int, int]:
    i = bisect.bisect_right(spec.sensor_mm, mm) - 1
    if i < 0 or i + 1 >= len(spec.sensor_mm):
        raise AllNeighborsMissing(f"mile marker {mm} outside sensor coverage")
    return i, i + 1


def _report_index(spec: GridSpec, t: float) -> int:
    return int(math.floor((t - spec.origin_s) / spec.cell_duration_s))


def build_grid(samples: Iterable[TrajectoryPoint], spec: GridSpec) -> RdsGrid:
    """Aggregate point samples into per-cell mean speeds (NaN when empty)."""
    sums = np.zeros((len(spec.sensor_mm), spec.n_reports))
    counts = np.zeros_like(sums)
    sensors = spec.sensor_mm
    for p in samples:
        i = bisect.bisect_right(sensors, p.mile_marker) - 1
        k = _report_index(spec, p.t)
        if 0 <= i < len(sensors) and 0 <= k < spec.n_reports:
            sums[i, k] += p.speed_mps
            counts[i, k] += 1
    with np.errstate(invalid="ignore"):
        speeds = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return RdsGrid(spec, speeds)


def ideal_speed(p: TrajectoryPoint, grid: RdsGrid, bilinear: bool = False) -> float:
    """Average of the four cells bracketing the point in space and time.

    With bilinear=True the four cells are distance-weighted instead of
    averaged uniformly; missing cells are dropped either way and the
    weights renormalized.
    """
    spec = grid.spec
    i_lo, i_hi = _spatial_pair(spec, p.mile_marker)
    k = _report_index(spec, p.t)
    if k < 0 or k + 1 >= spec.n_reports:
        raise AllNeighborsMissing(f"time {p.t} outside report coverage")
    cells = []
    for i in (i_lo, i_hi):
        for col in (k, k + 1):
            value = grid.speeds[i, col]
            if not math.isnan(value):
                if bilinear:
                    wx = (p.mile_marker - spec.sensor_mm[i_lo]) / (
                        spec.sensor_mm[i_hi] - spec.sensor_mm[i_lo]
                    )
                    wt = (p.t - grid.report_start(k)) / spec.cell_duration_s
                    w = (wx if i == i_hi else 1.0 - wx) * (
                        wt if col == k + 1 else 1.0 - wt
                    )
                else:
                    w = 1.0
                cells.append((value, w))
    total = sum(w for _, w in cells)
    if not cells or total == 0.0:
        raise AllNeighborsMissing(f"all four cells missing at ({p.t}, {p.mile_marker})")
    return sum(v * w for v, w in cells) / total


def realtime_speed(p: TrajectoryPoint, grid: RdsGrid, latency_s: float = 0.0) -> float:
    """Average of the two spatial neighbors' freshest reports at t - latency."""
    spec = grid.spec
    i_lo, i_hi = _spatial_pair(spec, p.mile_marker)
    j = _report_index(spec, p.t - latency_s)
    if j < 0:
        raise AllNeighborsMissing(f"no reports available {latency_s} s before {p.t}")
    j = min(j, spec.n_reports - 1)
    values = [grid.speeds[i, j] for i in (i_lo, i_hi)]
    values = [v for v in values if not math.isnan(v)]
    if not values:
        raise AllNeighborsMissing(f"both neighbors missing at ({p.t}, {p.mile_marker})")
    return float(sum(values) / len(values))


def error_stats(
    trajectory: Sequence[TrajectoryPoint],
    grid: RdsGrid,
    latencies: Sequence[float],
    bin_width_mph: float = 1.0,
) -> dict[float, ErrorStats]:
    """Per-latency mean/std/histogram of (realtime - ideal), m/s.

    Histogram bins are indexed by floor(error_mph / bin_width); a point
    contributes to a latency only when both estimates exist there.
    """
    out: dict[float, ErrorStats] = {}
    for latency in latencies:
        errors = []
        for p in trajectory:
            try:
                ideal = ideal_speed(p, grid)
                realtime = realtime_speed(p, grid, latency)
            except AllNeighborsMissing:
                continue
            errors.append(realtime - ideal)
        arr = np.asarray(errors)
        hist: dict[int, int] = {}
        for err in errors:
            idx = int(math.floor(err / MPS_PER_MPH / bin_width_mph))
            hist[idx] = hist.get(idx, 0) + 1
        out[latency] = ErrorStats(
            latency_s=latency,
            n=len(errors),
            mean_mps=float(arr.mean()) if len(errors) else 0.0,
            std_mps=float(arr.std()) if len(errors) else 0.0,
            histogram=dict(sorted(hist.items())),
            bin_width_mph=bin_width_mph,
        )
    return out


@dataclass(frozen=True)
class WaveFieldParams:
    """Backward-propagating multi-harmonic speed field, in mph units.

    Mixing a slow envelope with the ~4-minute wave matters: averaging a
    sensor pair d apart scales a component of wavelength lambda by
    cos(pi*d/lambda), so short waves are gutted by the spatial mean and
    a lone period would make the error variance cycle with latency
    rather than grow. The slow component survives the smoothing and
    keeps the variance climbing through the latencies of interest.
    """

    mean_mph: float = 45.0
    amplitudes_mph: tuple[float, ...] = (13.0, 13.0, 4.0)
    periods_s: tuple[float, ...] = (600.0, 240.0, 130.0)
    phases: tuple[float, ...] = (0.0, 1.3, 2.6)
    wave_speed_mph: float = 12.0
    min_mph: float = 15.0
    max_mph: float = 75.0

    def __post_init__(self) -> None:
        if not (
            len(self.amplitudes_mph) == len(self.periods_s) == len(self.phases)
        ):
            raise ValueError("amplitudes_mph: components must align with periods")


def wave_field(params: WaveFieldParams = WaveFieldParams()):
    """Speed field f(t, mm) -> m/s for an upstream-running wave train."""
    w_mi_per_s = params.wave_speed_mph / 3600.0

    def field(t: float, mm: float) -> float:
        mph = params.mean_mph
        for amp, period, phase in zip(
            params.amplitudes_mph, params.periods_s, params.phases
        ):
            wavelength_mi = w_mi_per_s * period
            mph += amp * math.sin(
                2.0 * math.pi * (mm - w_mi_per_s * t) / wavelength_mi + phase
            )
        return mph_to_mps(min(max(mph, params.min_mph), params.max_mph))

    return field


def static_field(speed_mps: float):
    def field(t: float, mm: float) -> float:
        return speed_mps

    return field


def grid_from_field(field, spec: GridSpec, subsamples: int = 3) -> RdsGrid:
    """Sample the field on a subgrid per cell and average, like a sensor."""
    n_s = len(spec.sensor_mm)
    speeds = np.empty((n_s, spec.n_reports))
    offsets = [(j + 0.5) / subsamples for j in range(subsamples)]
    for i, mm in enumerate(spec.sensor_mm):
        for k in range(spec.n_reports):
            t0 = spec.origin_s + k * spec.cell_duration_s
            vals = [field(t0 + o * spec.cell_duration_s, mm) for o in offsets]
            speeds[i, k] = sum(vals) / len(vals)
    return RdsGrid(spec, speeds)


def synthetic_trajectory(
    field,
    t_start: float,
    t_end: float,
    mm_start: float,
    sample_every_s: float = 5.0,
    dt: float = 0.5,
    westbound: bool = True,
) -> list[TrajectoryPoint]:
    """Drive a virtual probe through the field and sample it."""
    points = []
    t, mm = t_start, mm_start
    next_sample = t_start
    sign = -1.0 if westbound else 1.0
    while t <= t_end:
        v = field(t, mm)
        if t >= next_sample:
            points.append(TrajectoryPoint(t, mm, v))
            next_sample += sample_every_s
        mm += sign * v * dt / M_PER_MILE
        t = round(t + dt, 9)
    return points


def write_grid(grid: RdsGrid, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("sensor_mm", "report_start_s", "mean_speed_mps"))
        for i, mm in enumerate(grid.spec.sensor_mm):
            for k in range(grid.spec.n_reports):
                v = grid.speeds[i, k]
                writer.writerow(
                    (f"{mm:.3f}", f"{grid.report_start(k):.1f}",
                     "" if math.isnan(v) else f"{v:.6f}")
                )


def read_grid(path: str | Path) -> RdsGrid:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sensor_mm", "report_start_s", "mean_speed_mps"]:
            raise ValueError(f"unexpected grid header: {header}")
        for mm, start, v in reader:
            rows.append((float(mm), float(start), float(v) if v else math.nan))
    sensors = tuple(sorted({mm for mm, _, _ in rows}))
    starts = sorted({start for _, start, _ in rows})
    if len(starts) > 1:
        cell_duration = starts[1] - starts[0]
    else:
        cell_duration = 30.0
    spec = GridSpec(
        sensor_mm=sensors,
        origin_s=starts[0],
        cell_duration_s=cell_duration,
        duration_s=len(starts) * cell_duration,
    )
    speeds = np.full((len(sensors), len(starts)), np.nan)
    sensor_idx = {mm: i for i, mm in enumerate(sensors)}
    start_idx = {s: k for k, s in enumerate(starts)}
    for mm, start, v in rows:
        speeds[sensor_idx[mm], start_idx[start]] = v
    return RdsGrid(spec, speeds)


def write_trajectory(points: Sequence[TrajectoryPoint], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t_s", "mile_marker", "speed_mps"))
        for p in points:
            writer.writerow((f"{p.t:.3f}", f"{p.mile_marker:.6f}", f"{p.speed_mps:.6f}"))


def read_trajectory(path: str | Path) -> list[TrajectoryPoint]:
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t_s", "mile_marker", "speed_mps"]:
            raise ValueError(f"unexpected trajectory header: {header}")
        for t, mm, v in reader:
            points.append(TrajectoryPoint(float(t), float(mm), float(v)))
    return points


def write_error_report(
    stats: dict[float, ErrorStats], path: str | Path, histogram_path: Optional[str | Path] = None
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("latency_s", "n", "mean_err_mps", "std_err_mps"))
        for latency in sorted(stats):
            s = stats[latency]
            writer.writerow(
                (f"{latency:.1f}", s.n, f"{s.mean_mps:.6f}", f"{s.std_mps:.6f}")
            )
    if histogram_path is not None:
        with open(histogram_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("latency_s", "bin_lo_mph", "count"))
            for latency in sorted(stats):
                s = stats[latency]
                for idx, count in s.histogram.items():
                    writer.writerow(
                        (f"{latency:.1f}", f"{idx * s.bin_width_mph:.1f}", count)
                    )
