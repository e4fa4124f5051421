"""Longitudinal control stack for a speed-advisory-following vehicle.

The stack runs in three stages each tick:

1. setpoint selection: pick a desired speed from the driver's cruise
   setpoint, the posted gantry speed, and the prevailing-traffic estimate;
2. tracking: rate-limit the setpoint with a linear ramp and convert the
   ramped speed into a nominal acceleration with a proportional law;
3. safety filtering: upper-bound the nominal acceleration with a control
   barrier function on time gap to the lead vehicle, then clamp to the
   actuation envelope.

The desired-speed blend is

    v_des = min(max(v_pr - v_offset, v_gr), v_des_max)

so the vehicle drives a little slower than the traffic around it, never
slower than the posted speed, and never faster than the cap. With the
prevailing-speed estimator off (v_pr == 0) the blend degrades to
min(v_gr, v_des_max) because v_gr dominates the inner max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional


class Mode(str, Enum):
    """Operating mode labels, exactly one per controller tick."""

    DISENGAGED = "disengaged"
    NORMAL = "normal"
    VSL = "vsl"
    MIDDLEWAY = "middleway"
    CBF = "cbf"


class SetpointSource(str, Enum):
    CURRENT_SPEED = "current_speed"
    DRIVER_SETPOINT = "driver_setpoint"
    MIDDLEWAY = "middleway"


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and limits for the longitudinal stack.

    v_des_max of None means the desired-speed cap is the driver's setpoint,
    resolved per tick inside select_setpoint.
    """

    k_p: float = 0.8
    k_cbf: float = 0.1
    t_min: float = 2.0
    s_min: float = 15.0
    v_offset: float = 2.0
    v_des_max: Optional[float] = None
    ramp_rate: float = 1.5
    u_min: float = -3.0
    u_max: float = 2.0
    dt: float = 0.05

    def __post_init__(self) -> None:
        for name in ("k_p", "k_cbf", "t_min", "ramp_rate", "dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name}: must be positive")
        if self.s_min < 0:
            raise ValueError("s_min: must be non-negative")
        if self.v_offset < 0:
            raise ValueError("v_offset: must be non-negative")
        if self.v_des_max is not None and self.v_des_max <= 0:
            raise ValueError("v_des_max: must be positive when set")
        if not (self.u_min < 0 < self.u_max):
            raise ValueError("u_min/u_max: need u_min < 0 < u_max")


@dataclass(frozen=True)
class Lead:
    """Radar-derived lead vehicle: bumper gap (m) and absolute speed (m/s)."""

    gap: float
    speed: float


@dataclass(frozen=True)
class ControlInputs:
    engaged: bool
    in_corridor: bool
    vsl_valid: bool
    driver_setpoint: float
    v: float
    v_gr: float
    v_pr: float
    lead: Optional[Lead] = None


@dataclass
class ControllerState:
    """Carried between ticks: the ramp speed and the engagement edge."""

    v_ramp: float = 0.0
    engaged_prev: bool = False


@dataclass(frozen=True)
class ControllerOutput:
    u: float
    mode: Mode
    v_des: float
    v_ramp: float
    u_nom: float
    u_safe: Optional[float]


def middleway(v_pr: float, v_gr: float, cfg: ControllerConfig) -> float:
    """Blend prevailing speed, posted speed, and the cap into a setpoint.

    cfg.v_des_max must be set; a None cap is treated as unbounded here
    (select_setpoint substitutes the driver setpoint before calling).
    """
    cap = cfg.v_des_max if cfg.v_des_max is not None else math.inf
    return min(max(v_pr - cfg.v_offset, v_gr), cap)


def select_setpoint(
    inputs: ControlInputs, cfg: ControllerConfig
) -> tuple[float, SetpointSource]:
    """Multiplex the desired speed.

    Disengaged tracks the current speed (no command). Engaged but outside
    the corridor, or with an invalid advisory, follows the driver setpoint.
    Engaged inside the corridor with a valid advisory runs the blend.
    """
    if not inputs.engaged:
        return inputs.v, SetpointSource.CURRENT_SPEED
    if not (inputs.in_corridor and inputs.vsl_valid):
        return inputs.driver_setpoint, SetpointSource.DRIVER_SETPOINT
    if cfg.v_des_max is None:
        cfg = replace(cfg, v_des_max=inputs.driver_setpoint)
    return middleway(inputs.v_pr, inputs.v_gr, cfg), SetpointSource.MIDDLEWAY


def ramp(v_des: float, v_ramp_prev: float, cfg: ControllerConfig) -> float:
    """Move the ramp speed toward v_des, at most ramp_rate * dt per tick."""
    step = cfg.ramp_rate * cfg.dt
    return v_ramp_prev + min(max(v_des - v_ramp_prev, -step), step)


def nominal(v_ramp: float, v: float, cfg: ControllerConfig) -> float:
    """Proportional tracking acceleration on the ramped setpoint."""
    return cfg.k_p * (v_ramp - v)


def cbf_limit(gap: float, v: float, v_lead: float, cfg: ControllerConfig) -> float:
    """Largest acceleration that keeps h = gap - (t_min*v + s_min) decaying
    no faster than the barrier rate k_cbf."""
    h = gap - (cfg.t_min * v + cfg.s_min)
    return (cfg.k_cbf / cfg.t_min) * h + (v_lead - v) / cfg.t_min


def classify_mode(
    inputs: ControlInputs, v_des: float, u_nom: float, u_applied: float
) -> Mode:
    """Label the tick with exactly one mode.

    The safety filter takes priority whenever it binds (u_applied < u_nom),
    regardless of corridor state. Otherwise the label follows the setpoint
    source, splitting the in-corridor case on whether the blend exceeded
    the posted speed.
    """
    if not inputs.engaged:
        return Mode.DISENGAGED
    if inputs.lead is not None and u_applied < u_nom:
        return Mode.CBF
    if not (inputs.in_corridor and inputs.vsl_valid):
        return Mode.NORMAL
    if v_des > inputs.v_gr:
        return Mode.MIDDLEWAY
    return Mode.VSL


def step_controller(
    inputs: ControlInputs, state: ControllerState, cfg: ControllerConfig
) -> ControllerOutput:
    """Run one controller tick; mutates state (ramp speed, engagement edge).

    Disengaged ticks command u = 0 and re-seed the ramp at the current
    speed so an engagement never starts from a stale ramp value. The
    barrier filter applies only while engaged: disengaged the driver has
    full authority and the stack issues no command at all.
    """
    if not inputs.engaged:
        state.v_ramp = inputs.v
        state.engaged_prev = False
        return ControllerOutput(
            u=0.0,
            mode=Mode.DISENGAGED,
            v_des=inputs.v,
            v_ramp=inputs.v,
            u_nom=0.0,
            u_safe=None,
        )

    if not state.engaged_prev:
        state.v_ramp = inputs.v

    v_des, _source = select_setpoint(inputs, cfg)
    v_ramp = ramp(v_des, state.v_ramp, cfg)
    u_nom = nominal(v_ramp, inputs.v, cfg)

    if inputs.lead is not None:
        u_safe: Optional[float] = cbf_limit(
            inputs.lead.gap, inputs.v, inputs.lead.speed, cfg
        )
        u_filtered = min(u_nom, u_safe)
    else:
        u_safe = None
        u_filtered = u_nom

    u = min(max(u_filtered, cfg.u_min), cfg.u_max)
    mode = classify_mode(inputs, v_des, u_nom, u_filtered)

    state.v_ramp = v_ramp
    state.engaged_prev = True
    return ControllerOutput(
        u=u, mode=mode, v_des=v_des, v_ramp=v_ramp, u_nom=u_nom, u_safe=u_safe
    )
