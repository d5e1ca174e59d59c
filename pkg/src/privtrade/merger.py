"""Deterministic overlay of scenario fragments."""
from __future__ import annotations

from collections.abc import Mapping, MutableMapping
from copy import deepcopy
from typing import Any

from .errors import ScenarioError


def overlay(base: Mapping[str, Any],
            override: Mapping[str, Any],
            *,
            path: str = "") -> MutableMapping[str, Any]:
    """
    Return ``override`` laid over ``base`` without mutating either.

    Mappings merge key by key; lists such as ``holders`` and scalars replace. A
    mapping laid over a scalar is a conflict and names the offending key.
    """
    merged: MutableMapping[str, Any] = deepcopy(dict(base))
    for key, value in override.items():
        dotted = f"{path}.{key}" if path else str(key)
        current = merged.get(key)
        if isinstance(value, Mapping):
            if current is None:
                merged[key] = deepcopy(dict(value))
            elif isinstance(current, Mapping):
                merged[key] = overlay(current, value, path=dotted)
            else:
                raise ScenarioError(
                    f"cannot lay a section over the {type(current).__name__} value",
                    key=dotted,
                )
        else:
            merged[key] = deepcopy(value)
    return merged
