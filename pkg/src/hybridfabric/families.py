"""Project-level event families: payload expectations, validators, key binding."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import DuplicateRegistration
from .keys import EventTypeKey, parse_key
from .serde import CODECS, NATIVE, EventTypeSerDe, SerDeRegistry

FIELD_TYPES: dict[str, tuple[type, ...]] = {
    "str": (str,),
    "int": (int,),
    "float": (int, float),
    "bool": (bool,),
    "bytes": (bytes,),
    "list": (list,),
    "dict": (dict,),
}


def _type_ok(value: Any, type_name: str) -> bool:
    if type_name in ("int", "float") and isinstance(value, bool):
        return False
    return isinstance(value, FIELD_TYPES[type_name])


@dataclass(frozen=True)
class EventFamily:
    """A family of events sharing one base key and one payload shape.

    ``fields`` maps payload field names to type names from ``FIELD_TYPES``;
    every declared field is required.
    """

    base_key: str
    fields: Mapping[str, str] = field(default_factory=dict)
    codec: str = NATIVE
    description: str = ""

    def __post_init__(self) -> None:
        key = parse_key(self.base_key)
        if key.qualifiers:
            raise ValueError(f"family base key {self.base_key!r} must have exactly four tokens")
        if self.codec not in CODECS:
            raise ValueError(f"unknown codec {self.codec!r}")
        for name, type_name in self.fields.items():
            if type_name not in FIELD_TYPES:
                raise ValueError(f"field {name!r}: unknown type {type_name!r}")
        object.__setattr__(self, "fields", dict(self.fields))

    @property
    def key(self) -> EventTypeKey:
        return parse_key(self.base_key)

    def validator(self, payload: Any) -> str | None:
        if not isinstance(payload, Mapping):
            return f"payload must be a mapping, got {type(payload).__name__}"
        for name, type_name in self.fields.items():
            if name not in payload:
                return f"missing field: {name}"
            if not _type_ok(payload[name], type_name):
                return f"wrong type for field: {name} (expected {type_name})"
        return None

    def serde(self, codec: str | None = None, validator=True) -> EventTypeSerDe:
        check = self.validator if validator is True else (validator or None)
        return EventTypeSerDe.for_codec(self.base_key, codec or self.codec, check)


def bind(family: EventFamily, qualifiers: Iterable[str] = ()) -> EventTypeKey:
    return family.key.with_qualifiers(*qualifiers)


def install(registry: SerDeRegistry, families: Sequence[EventFamily]) -> SerDeRegistry:
    seen: set[str] = set()
    for fam in families:
        if fam.base_key in seen:
            raise DuplicateRegistration(fam.base_key)
        seen.add(fam.base_key)
    for fam in families:
        registry.register(fam.serde())
    return registry.freeze()


STATUS_UPDATE = EventFamily(
    "fabric.node.status.update",
    {"status": "str", "sequence": "int", "timestamp": "int"},
    description="periodic node status",
)
HEARTBEAT = EventFamily(
    "fabric.node.health.heartbeat",
    {"sequence": "int", "timestamp": "int"},
    description="liveness signal",
)
SNAPSHOT = EventFamily(
    "fabric.node.state.snapshot",
    {"sequence": "int", "data": "str"},
    description="opaque state snapshot",
)
CONTROL_ACK = EventFamily(
    "fabric.node.control.ack",
    {"command": "str", "accepted": "bool", "sequence": "int"},
    description="acknowledgement of a control step",
)
EXAMPLE_FAMILIES = (STATUS_UPDATE, HEARTBEAT, SNAPSHOT, CONTROL_ACK)

# Canonical payloads accepted by each example family, and one rejected payload each.
CANONICAL_PAYLOADS: dict[str, dict] = {
    STATUS_UPDATE.base_key: {"status": "ok", "sequence": 17, "timestamp": 1_700_000_000_000_000_000},
    HEARTBEAT.base_key: {"sequence": 3, "timestamp": 1_700_000_000_000_000_000},
    SNAPSHOT.base_key: {"sequence": 1, "data": "abcdefgh"},
    CONTROL_ACK.base_key: {"command": "restart", "accepted": True, "sequence": 9},
}
INVALID_PAYLOADS: dict[str, Any] = {
    STATUS_UPDATE.base_key: {},
    HEARTBEAT.base_key: {"sequence": "3", "timestamp": 0},
    SNAPSHOT.base_key: {"sequence": 1},
    CONTROL_ACK.base_key: {"command": "restart", "accepted": 1, "sequence": 9},
}


def example_registry(default_codec: str = NATIVE) -> SerDeRegistry:
    return install(SerDeRegistry(default_codec), EXAMPLE_FAMILIES)


def families_from_config(data: Mapping[str, Any]) -> list[EventFamily]:
    """Build families from ``{"families": [{"base_key", "codec", "fields"}, ...]}``.

    ``fields`` may be a mapping of name to type, or a list of required names
    (typed as ``str``).
    """
    out = []
    for entry in data.get("families", []):
        fields = entry.get("fields", entry.get("required", {}))
        if isinstance(fields, (list, tuple)):
            fields = {name: "str" for name in fields}
        base_key = entry.get("base_key") or ".".join(
            entry[k] for k in ("space", "super_family", "family", "name")
        )
        out.append(
            EventFamily(base_key, fields, entry.get("codec", NATIVE), entry.get("description", ""))
        )
    return out


def load_families(path: str | Path) -> list[EventFamily]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    return families_from_config(data)
