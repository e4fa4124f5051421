"""Config file loading: YAML sections mapped onto scenario dataclasses.

A config file is a mapping of sections. The ``scenario`` section picks the
generator (``kind: canonical`` or ``kind: string``), its generator inputs,
and run-level fields (duration, timestep, logging cadence). The remaining
sections (``controller``, ``radar``, ``estimator``, ``vsl``, ``feed``,
``human``) override fields of the corresponding sub-config. Every field
defaults to the canonical wave scenario, so an empty file reproduces it.
"""

from __future__ import annotations

import dataclasses
import inspect
from pathlib import Path
from typing import Any, NamedTuple, Optional

import yaml

from .controller import ControllerConfig
from .infrastructure import FeedConfig, VslConfig
from .perception import EstimatorConfig, RadarConfig
from .scenarios import canonical_scenario, string_scenario
from .simulation import IdmParams, ScenarioConfig


class ConfigError(Exception):
    """Invalid config content; the message names the offending field."""


SECTION_TYPES: dict[str, type] = {
    "controller": ControllerConfig,
    "radar": RadarConfig,
    "estimator": EstimatorConfig,
    "vsl": VslConfig,
    "feed": FeedConfig,
    "human": IdmParams,
}

GENERATORS = {
    "canonical": canonical_scenario,
    "string": string_scenario,
}

RUN_FIELDS = ("dt", "log_every", "entry_mm", "vsl_static_mph")


class LoadedScenario(NamedTuple):
    cfg: ScenarioConfig
    kind: str
    generator_args: dict[str, Any]


def load_config(path: Optional[str | Path]) -> dict:
    """Read a YAML config file; None means an empty config."""
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{p}: no such config file")
    with open(p, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return data


def apply_override(data: dict, spec: str) -> None:
    """Apply one ``section.field=value`` override in place.

    The value side is parsed as YAML, so numbers, booleans, nulls, and
    lists all work from the command line.
    """
    key, sep, raw = spec.partition("=")
    if not sep or not key:
        raise ConfigError(f"override '{spec}': expected key=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override '{spec}': unparseable value") from exc
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override '{spec}': {part} is not a section")
        node = nxt
    node[parts[-1]] = value


def set_dotted(data: dict, dotted: str, value: Any) -> None:
    node = data
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _check_section(name: str, raw: Any) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: must be a mapping")
    return raw


def build_scenario(data: dict) -> LoadedScenario:
    """Turn a parsed config mapping into a validated ScenarioConfig."""
    known = set(SECTION_TYPES) | {"scenario"}
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown config section")

    scenario = dict(_check_section("scenario", data.get("scenario")))
    kind = scenario.pop("kind", "canonical")
    if kind not in GENERATORS:
        raise ConfigError(f"scenario.kind: unknown kind '{kind}'")
    generator = GENERATORS[kind]
    accepted = set(inspect.signature(generator).parameters)

    gen_args: dict[str, Any] = {}
    run_fields: dict[str, Any] = {}
    for field, value in scenario.items():
        if field in accepted:
            gen_args[field] = value
        elif field in RUN_FIELDS:
            run_fields[field] = value
        else:
            raise ConfigError(f"scenario.{field}: unknown field")

    try:
        cfg = generator(**gen_args)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}") from exc

    replacements: dict[str, Any] = dict(run_fields)
    for section, cls in SECTION_TYPES.items():
        raw = _check_section(section, data.get(section))
        if not raw:
            continue
        names = {f.name for f in dataclasses.fields(cls)}
        for field in raw:
            if field not in names:
                raise ConfigError(f"{section}.{field}: unknown field")
        try:
            replacements[section] = dataclasses.replace(
                getattr(cfg, section), **raw
            )
        except ValueError as exc:
            raise ConfigError(f"{section}.{exc}") from exc

    if replacements:
        cfg = dataclasses.replace(cfg, **replacements)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return LoadedScenario(cfg=cfg, kind=kind, generator_args=gen_args)
