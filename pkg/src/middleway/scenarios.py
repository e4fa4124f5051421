"""Prebuilt scenarios: the canonical wave corridor and the string study.

The canonical scenario drops a congested human platoon onto the westbound
corridor, throttles it through a temporary downstream bottleneck so
stop-and-go waves form, lets the surrogate posting policy react, and
embeds one controlled vehicle behind the platoon with oscillating
adjacent-lane phantom streams feeding its radar. Initial platoon speeds
and gaps are jittered from the scenario seed so distinct seeds produce
distinct runs.

The string study places n controlled vehicles in one lane behind a small
constant-speed pace platoon over a statically posted corridor, spaced so
each vehicle's radar sees only its immediate leader. Each vehicle then
tracks its leader minus the offset, which is the cascade the steady-state
readout samples.
"""

from __future__ import annotations

import random
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .controller import ControllerConfig
from .infrastructure import FeedConfig
from .perception import RadarConfig
from .simulation import (
    Bottleneck,
    IdmParams,
    PhantomStreamSpec,
    RunLog,
    ScenarioConfig,
    VehicleInit,
    VehicleKind,
    run,
)
from .units import mph_to_mps


def _triangle_profile(
    duration_s: float, period_s: float, lo: float, hi: float, phase_s: float = 0.0
) -> tuple[tuple[float, float], ...]:
    """Repeating high-low-high speed table, piecewise linear."""
    points: list[tuple[float, float]] = []
    t = -phase_s
    while t < duration_s + period_s:
        points.append((t, hi))
        points.append((t + 0.35 * period_s, lo))
        points.append((t + 0.50 * period_s, lo))
        points.append((t + 0.85 * period_s, hi))
        t += period_s
    return tuple((round(t, 3), v) for t, v in points if t >= 0.0) or ((0.0, hi),)


def canonical_scenario(
    seed: int = 0,
    duration_s: float = 560.0,
    n_humans: int = 25,
    platoon_x0: float = 800.0,
    mean_gap_m: float = 30.0,
    mean_speed_mps: float = 16.0,
    human_free_speed_mps: float = 36.0,
    controlled_gap_m: float = 1200.0,
    driver_setpoint_mps: float = 33.5,
    v_offset: float = 2.0,
    phantom_lo_mps: float = 5.0,
    phantom_hi_mps: float = 22.0,
    phantom_period_s: float = 90.0,
    phantom_mirror_bias_mps: float = 2.0,
    bottleneck_cap_mps: float = 2.5,
) -> ScenarioConfig:
    rng = random.Random(seed)
    vehicles: list[VehicleInit] = []
    x = platoon_x0
    for i in range(n_humans):
        v0 = mean_speed_mps * rng.uniform(0.95, 1.05)
        vehicles.append(VehicleInit(f"h{i:03d}", VehicleKind.HUMAN, x, v0))
        x += mean_gap_m * rng.uniform(0.85, 1.15)
    vehicles.append(
        VehicleInit(
            "cav",
            VehicleKind.CONTROLLED,
            platoon_x0 - controlled_gap_m,
            mean_speed_mps,
            engage_at=0.0,
            driver_setpoint=driver_setpoint_mps,
        )
    )
    phantoms = [
        PhantomStreamSpec(
            lane=1,
            spacing_m=45.0,
            speed_profile=_triangle_profile(
                duration_s, phantom_period_s, phantom_lo_mps, phantom_hi_mps
            ),
            phase_m=10.0,
        ),
        PhantomStreamSpec(
            lane=-1,
            spacing_m=45.0,
            mirror_bias_mps=phantom_mirror_bias_mps,
            phase_m=-12.0,
            initial_speed=mean_speed_mps + phantom_mirror_bias_mps,
        ),
    ]
    return ScenarioConfig(
        duration_s=duration_s,
        seed=seed,
        controller=ControllerConfig(v_offset=v_offset),
        feed=FeedConfig(latency_s=0.5),
        human=IdmParams(v0=human_free_speed_mps),
        vehicles=vehicles,
        bottlenecks=[
            Bottleneck(
                x_start=2200.0,
                x_end=2800.0,
                t_start=20.0,
                t_end=230.0,
                speed_cap=bottleneck_cap_mps,
            )
        ],
        phantoms=phantoms,
    )


def string_scenario(
    n_controlled: int = 12,
    traffic_speed_mps: float = 30.0,
    posted_mph: int = 30,
    v_offset: float = 2.0,
    gap0_m: float = 200.0,
    radar_range_m: float = 350.0,
    duration_s: Optional[float] = None,
    seed: int = 0,
) -> ScenarioConfig:
    """Pace platoon at traffic_speed ahead of n controlled vehicles.

    Spacing is chosen so only the immediate leader is in radar range
    (gap0 > range / 2), which keeps the prevailing-speed estimate of each
    vehicle pinned to its leader and the cascade decrement equal to the
    offset. The default measurement window (see string_experiment) sits
    after the cascade settles and before the leading links outrun radar
    range.
    """
    if gap0_m <= radar_range_m / 2.0:
        raise ValueError("gap0_m: must exceed half the radar range")
    v_gr = mph_to_mps(posted_mph)
    v_init = max(traffic_speed_mps - v_offset, v_gr)
    if duration_s is None:
        duration_s = measurement_window(n_controlled)[1] + 5.0

    vehicles: list[VehicleInit] = []
    x = 0.0
    for k in range(n_controlled, 0, -1):
        vehicles.append(
            VehicleInit(
                f"cav{k:02d}",
                VehicleKind.CONTROLLED,
                x,
                v_init,
                engage_at=0.0,
                driver_setpoint=v_init,
            )
        )
        x += gap0_m
    for j in range(3):
        vehicles.append(
            VehicleInit(f"pace{j}", VehicleKind.PROBE, x + 60.0 * j, traffic_speed_mps)
        )
    return ScenarioConfig(
        duration_s=duration_s,
        seed=seed,
        controller=ControllerConfig(v_offset=v_offset),
        radar=RadarConfig(max_range=radar_range_m),
        vehicles=vehicles,
        vsl_static_mph=posted_mph,
    )


def measurement_window(n_controlled: int) -> tuple[float, float]:
    """Steady-state sampling window for the string cascade."""
    t_lo = 8.0 + 4.0 * n_controlled
    return t_lo, t_lo + 12.0


def v_des_traces(log: RunLog, n_controlled: int) -> dict[str, np.ndarray]:
    """Per-vehicle logged v_des series, keyed cav01..cavNN.

    Keys are ordered downstream to upstream (cav01 leads); unset values
    (disengaged rows) become NaN.
    """
    traces: dict[str, list[float]] = {
        f"cav{k:02d}": [] for k in range(1, n_controlled + 1)
    }
    for row in log.rows:
        vid, kind, v_des = row[1], row[2], row[7]
        if kind == VehicleKind.CONTROLLED.value and vid in traces:
            traces[vid].append(v_des if v_des is not None else float("nan"))
    return {vid: np.asarray(vals) for vid, vals in traces.items()}


def string_experiment(
    cfg: ScenarioConfig, n_controlled: int
) -> dict[str, np.ndarray]:
    """Run the string scenario and return per-vehicle v_des traces.

    The helper steady_v_des reduces traces to the windowed steady-state
    values.
    """
    return v_des_traces(run(cfg), n_controlled)


def steady_v_des(
    traces: dict[str, np.ndarray],
    dt: float,
    window: tuple[float, float],
) -> dict[str, float]:
    lo, hi = window
    out = {}
    for vid, trace in traces.items():
        i_lo = int(lo / dt)
        i_hi = min(int(hi / dt), len(trace))
        out[vid] = float(np.mean(trace[i_lo:i_hi]))
    return out


class OffsetReplay(NamedTuple):
    t: np.ndarray
    vehicle_id: tuple[str, ...]
    v_pr: np.ndarray
    v_gr: np.ndarray
    v_des: dict[float, np.ndarray]


def offset_replay(log: RunLog, offsets: Sequence[float]) -> OffsetReplay:
    """Recompute uncapped setpoints from recorded advisory/prevailing pairs.

    Open-loop projection: each controlled-vehicle row that recorded both a
    prevailing-speed estimate and a posted advisory is re-evaluated under
    every offset, with no feedback into the trajectory and no desired-speed
    cap, so differences between traces are due to the offset alone.
    """
    if not offsets:
        raise ValueError("offsets: must be non-empty")
    ts: list[float] = []
    vids: list[str] = []
    v_prs: list[float] = []
    v_grs: list[float] = []
    for row in log.rows:
        t, vid, kind, v_gr, v_pr = row[0], row[1], row[2], row[8], row[9]
        if kind != VehicleKind.CONTROLLED.value:
            continue
        if v_gr is None or v_pr is None:
            continue
        ts.append(t)
        vids.append(vid)
        v_prs.append(v_pr)
        v_grs.append(v_gr)
    v_pr_arr = np.asarray(v_prs)
    v_gr_arr = np.asarray(v_grs)
    traces = {
        float(k): np.maximum(v_pr_arr - float(k), v_gr_arr) for k in offsets
    }
    return OffsetReplay(
        t=np.asarray(ts),
        vehicle_id=tuple(vids),
        v_pr=v_pr_arr,
        v_gr=v_gr_arr,
        v_des=traces,
    )
