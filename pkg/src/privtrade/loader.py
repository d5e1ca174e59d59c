"""Compose, validate and export scenario files."""
from __future__ import annotations

import json
import math
import os
import re
from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import yaml

from .cost_model import MarketScenario, QuadraticCost
from .dynamics import DynamicsSettings
from .errors import DomainError, InterpolationError, ScenarioError, UnsupportedFormatError
from .merger import overlay
from .sources import DictOverlay, EnvSource, FileSource, ScenarioSource

PLACEHOLDER_PATTERN = re.compile(r"\$\{(?P<name>[A-Z0-9_]+)(?::(?P<default>[^}]*))?\}")

TOP_LEVEL_KEYS = ("demand", "holders", "dynamics")
HOLDER_KEYS = ("a", "h", "label")
DYNAMICS_KEYS = ("p0", "step_size", "max_iters", "tol_abs", "tol_rel")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario document: the market, holder labels and loop settings."""

    scenario: MarketScenario
    labels: Tuple[Optional[str], ...] = ()
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)

    def label(self, index: int) -> str:
        if index < len(self.labels) and self.labels[index]:
            return str(self.labels[index])
        return f"DH{index + 1}"

    def to_dict(self) -> Dict[str, Any]:
        return scenario_to_dict(self.scenario, labels=self.labels, dynamics=self.dynamics)


class ScenarioLoader:
    """Compose a scenario from ordered sources; later sources win."""

    def __init__(self,
                 sources: Sequence[ScenarioSource],
                 *,
                 interpolate_env: bool = True,
                 environ: Optional[Mapping[str, str]] = None) -> None:
        self._sources = list(sources)
        self._interpolate_env = interpolate_env
        self._environ = environ if environ is not None else os.environ

    @property
    def sources(self) -> Sequence[ScenarioSource]:
        return tuple(self._sources)

    def load_payload(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {}
        for source in self._sources:
            fragment = source.load()
            if not isinstance(fragment, Mapping):
                raise ScenarioError(
                    f"source '{source.name}' returned non-mapping payload: "
                    f"{type(fragment).__name__}"
                )
            payload = dict(overlay(payload, fragment))

        if self._interpolate_env:
            return _expand(payload, self._environ)
        return deepcopy(payload)

    def load(self) -> ScenarioFile:
        return parse_scenario(self.load_payload())


def load_scenario(path: PathLike,
                  *,
                  overrides: Optional[Mapping[str, Any]] = None,
                  env_prefix: Optional[str] = "PRIVTRADE",
                  environ: Optional[Mapping[str, str]] = None) -> ScenarioFile:
    """
    Load one scenario file, then the ``env_prefix`` environment overlay, then
    ``overrides``.
    """
    sources: List[ScenarioSource] = [FileSource(Path(path))]
    if env_prefix:
        sources.append(EnvSource(prefix=env_prefix, environ=environ))
    if overrides:
        sources.append(DictOverlay(overrides))
    return ScenarioLoader(sources, environ=environ).load()


def parse_scenario(payload: Mapping[str, Any]) -> ScenarioFile:
    """Validate a scenario mapping strictly; unknown keys are rejected by name."""
    if not isinstance(payload, Mapping):
        raise ScenarioError(f"scenario must be a mapping, got {type(payload).__name__}")
    _reject_unknown(payload, TOP_LEVEL_KEYS, prefix="")

    if "demand" not in payload:
        raise ScenarioError("missing required value", key="demand")
    demand = _number(payload["demand"], "demand")
    if not demand > 0.0:
        raise ScenarioError(f"must satisfy demand > 0, got {demand!r}", key="demand")

    raw_holders = payload.get("holders")
    if not isinstance(raw_holders, list) or not raw_holders:
        raise ScenarioError("must be a non-empty list of {a, h} entries", key="holders")

    holders: List[QuadraticCost] = []
    labels: List[Optional[str]] = []
    for index, entry in enumerate(raw_holders):
        prefix = f"holders[{index}]"
        if not isinstance(entry, Mapping):
            raise ScenarioError(f"must be a mapping, got {type(entry).__name__}", key=prefix)
        _reject_unknown(entry, HOLDER_KEYS, prefix=prefix)
        for name in ("a", "h"):
            if name not in entry:
                raise ScenarioError("missing required value", key=f"{prefix}.{name}")
        a = _number(entry["a"], f"{prefix}.a")
        h = _number(entry["h"], f"{prefix}.h")
        if not a >= 0.0:
            raise ScenarioError(f"must satisfy a >= 0, got {a!r}", key=f"{prefix}.a")
        if not h > 0.0:
            raise ScenarioError(f"must satisfy h > 0, got {h!r}", key=f"{prefix}.h")
        label = entry.get("label")
        if label is not None and not isinstance(label, str):
            raise ScenarioError("must be text", key=f"{prefix}.label")
        holders.append(QuadraticCost(a, h))
        labels.append(label)

    dynamics = _parse_dynamics({} if payload.get("dynamics") is None else payload["dynamics"])
    try:
        scenario = MarketScenario(demand, tuple(holders))
    except DomainError as exc:  # pragma: no cover - covered by the checks above
        raise ScenarioError(str(exc)) from exc
    return ScenarioFile(scenario, tuple(labels), dynamics)


def _parse_dynamics(block: Any) -> DynamicsSettings:
    if not isinstance(block, Mapping):
        raise ScenarioError(f"must be a mapping, got {type(block).__name__}", key="dynamics")
    _reject_unknown(block, DYNAMICS_KEYS, prefix="dynamics")
    values: Dict[str, Any] = {}
    for name in ("p0", "step_size"):
        if block.get(name) is not None:
            value = _number(block[name], f"dynamics.{name}")
            if not value > 0.0:
                raise ScenarioError(f"must satisfy {name} > 0, got {value!r}",
                                    key=f"dynamics.{name}")
            values[name] = value
    if block.get("max_iters") is not None:
        raw = _number(block["max_iters"], "dynamics.max_iters")
        if raw != int(raw) or raw < 1:
            raise ScenarioError(f"must be a positive integer, got {block['max_iters']!r}",
                                key="dynamics.max_iters")
        values["max_iters"] = int(raw)
    for name in ("tol_abs", "tol_rel"):
        if block.get(name) is not None:
            value = _number(block[name], f"dynamics.{name}")
            if not value >= 0.0:
                raise ScenarioError(f"must satisfy {name} >= 0, got {value!r}",
                                    key=f"dynamics.{name}")
            values[name] = value
    return DynamicsSettings(**values)


def _reject_unknown(mapping: Mapping[str, Any], allowed: Sequence[str], *, prefix: str) -> None:
    for key in mapping:
        if key not in allowed:
            dotted = f"{prefix}.{key}" if prefix else str(key)
            raise ScenarioError(
                f"unknown key (expected one of: {', '.join(allowed)})", key=dotted
            )


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"must be a number, got {value!r}", key=key)
    if isinstance(value, (int, float)):
        number = float(value)
    elif isinstance(value, str):
        try:
            number = float(value.strip())
        except ValueError:
            raise ScenarioError(f"must be a number, got {value!r}", key=key) from None
    else:
        raise ScenarioError(f"must be a number, got {type(value).__name__}", key=key)
    if not math.isfinite(number):
        raise ScenarioError(f"must be finite, got {value!r}", key=key)
    return number


def scenario_to_dict(scenario: MarketScenario,
                     *,
                     labels: Optional[Sequence[Optional[str]]] = None,
                     dynamics: Optional[DynamicsSettings] = None) -> Dict[str, Any]:
    holders: List[Dict[str, Any]] = []
    for index, holder in enumerate(scenario.holders):
        if not isinstance(holder, QuadraticCost):
            raise UnsupportedFormatError(
                f"holder {index} is {type(holder).__name__}; only quadratic costs serialise"
            )
        entry: Dict[str, Any] = {"a": holder.a, "h": holder.h}
        if labels is not None and index < len(labels) and labels[index] is not None:
            entry["label"] = labels[index]
        holders.append(entry)

    payload: Dict[str, Any] = {"demand": scenario.demand, "holders": holders}
    if dynamics is not None:
        payload["dynamics"] = {
            "p0": dynamics.p0,
            "step_size": dynamics.step_size,
            "max_iters": dynamics.max_iters,
            "tol_abs": dynamics.tol_abs,
            "tol_rel": dynamics.tol_rel,
        }
    return payload


def export_scenario(scenario: Union[MarketScenario, ScenarioFile],
                    path: PathLike,
                    *,
                    labels: Optional[Sequence[Optional[str]]] = None,
                    dynamics: Optional[DynamicsSettings] = None) -> Path:
    """Write JSON (or YAML by suffix) that parses back to the same scenario."""
    if isinstance(scenario, ScenarioFile):
        labels = scenario.labels if labels is None else labels
        dynamics = scenario.dynamics if dynamics is None else dynamics
        scenario = scenario.scenario
    payload = scenario_to_dict(scenario, labels=labels, dynamics=dynamics)

    target = Path(path)
    suffix = target.suffix.lower()
    if suffix in {".yml", ".yaml"}:
        text = yaml.safe_dump(payload, sort_keys=False, default_flow_style=False)
    elif suffix in {".json", ""}:
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise UnsupportedFormatError(f"cannot export a scenario to '{suffix}' files")
    target.write_text(text, encoding="utf-8")
    return target


def _expand(node: Any, environ: Mapping[str, str], key: str = "") -> Any:
    """Return a copy of ``node`` with every ``${NAME[:default]}`` placeholder filled in."""
    if isinstance(node, Mapping):
        return {name: _expand(value, environ, f"{key}.{name}" if key else str(name))
                for name, value in node.items()}
    if isinstance(node, list):
        return [_expand(item, environ, f"{key}[{index}]") for index, item in enumerate(node)]
    if not isinstance(node, str):
        return node

    def replace(match: re.Match[str]) -> str:
        name, default = match.group("name"), match.group("default")
        if name in environ:
            return environ[name]
        if default is not None:
            return default
        raise InterpolationError(f"environment variable '{name}' is not set and has no default",
                                 key=key or None)

    return PLACEHOLDER_PATTERN.sub(replace, node)


__all__ = [
    "ScenarioFile",
    "ScenarioLoader",
    "export_scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_to_dict",
]
