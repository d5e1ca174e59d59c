"""Scenario fragment sources for ScenarioLoader."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, MutableMapping, Optional

import yaml

try:  # pragma: no cover - Python < 3.11
    import tomllib  # type: ignore[attr-defined]
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib  # type: ignore

from .errors import ScenarioError, UnsupportedFormatError
from .exceptions import ScenarioNotFoundError

SUPPORTED_SUFFIXES = {".json", ".yml", ".yaml", ".toml"}


class ScenarioSource:
    """Interface describing something that can load scenario fragments."""

    name: str = "source"

    def load(self) -> Dict[str, Any]:
        raise NotImplementedError


def _assign(target: MutableMapping[str, Any], keys: Iterable[str], value: Any) -> None:
    keys_list = list(keys)
    if not keys_list:
        raise ScenarioError("environment override names no scenario key")

    cursor: MutableMapping[str, Any] = target
    for key in keys_list[:-1]:
        cursor = cursor.setdefault(key, {})
    cursor[keys_list[-1]] = value


def read_document(path: Path) -> Any:
    """Parse a JSON, YAML or TOML document, reporting the line of a syntax error."""
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise UnsupportedFormatError(f"{path} is not a supported scenario file")

    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"{path}: not valid UTF-8 text (byte {exc.start})") from exc
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot be read: {exc.strerror or exc}") from exc
    if suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON: {exc.msg} (column {exc.colno})",
                                line=exc.lineno) from exc
    if suffix in {".yml", ".yaml"}:
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ScenarioError(f"{path}: invalid YAML: {exc}", line=line) from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: invalid TOML: {exc}",
                            line=getattr(exc, "lineno", None)) from exc


@dataclass
class FileSource(ScenarioSource):
    path: Path
    optional: bool = False
    name: str = "file"

    def load(self) -> Dict[str, Any]:
        path = Path(self.path)
        if not path.exists():
            if self.optional:
                return {}
            raise ScenarioNotFoundError(f"scenario file not found: {path}")
        data = read_document(path)
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ScenarioError(
                f"{path}: top level must be a mapping, got {type(data).__name__}"
            )
        return data


@dataclass
class DictOverlay(ScenarioSource):
    payload: Mapping[str, Any]
    name: str = "overrides"

    def load(self) -> Dict[str, Any]:
        return json.loads(json.dumps(self.payload))


@dataclass
class EnvSource(ScenarioSource):
    """
    ``PRIVTRADE__DEMAND=3`` or ``PRIVTRADE__DYNAMICS__STEP_SIZE=0.01``.

    Holder lists cannot be addressed from the environment.
    """

    prefix: str = "PRIVTRADE"
    delimiter: str = "__"
    infer_types: bool = True
    environ: Optional[Mapping[str, str]] = None
    name: str = "env"

    def load(self) -> Dict[str, Any]:
        env = self.environ if self.environ is not None else os.environ
        prefix_norm = f"{self.prefix.upper()}{self.delimiter}"
        result: Dict[str, Any] = {}

        for key in sorted(env):
            if not key.upper().startswith(prefix_norm):
                continue
            stripped = key[len(prefix_norm):]
            segments = [segment.lower() for segment in stripped.split(self.delimiter) if segment]
            raw = env[key]
            value = _coerce_env_value(raw) if self.infer_types else raw
            _assign(result, segments, value)
        return result


def _coerce_env_value(value: str) -> Any:
    text = value.strip()
    if text.isdigit() or (text.startswith("-") and text[1:].isdigit()):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return value
