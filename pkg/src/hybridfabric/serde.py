"""Per-family serialization and validation, resolved by ``base_key``."""

from __future__ import annotations

import json
import pickle
import threading
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, NamedTuple

from .errors import DuplicateRegistration, MalformedKey, RegistryFrozen
from .keys import EventTypeKey, parse_key

# A validator returns None (or True) to accept and a reason string (or False) to reject.
Validator = Callable[[Any], "str | bool | None"]

NATIVE = "native"
JSON = "json"
CODECS = (NATIVE, JSON)


def _native_dumps(payload: Any) -> bytes:
    return pickle.dumps(payload, protocol=pickle.HIGHEST_PROTOCOL)


def _json_dumps(payload: Any) -> bytes:
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False, allow_nan=False).encode("utf-8")


def _json_loads(data: bytes) -> Any:
    return json.loads(data.decode("utf-8"))


_CODEC_FUNCS: dict[str, tuple[Callable[[Any], bytes], Callable[[bytes], Any]]] = {
    NATIVE: (_native_dumps, pickle.loads),
    JSON: (_json_dumps, _json_loads),
}


def codec_functions(codec: str) -> tuple[Callable[[Any], bytes], Callable[[bytes], Any]]:
    try:
        return _CODEC_FUNCS[codec]
    except KeyError:
        raise ValueError(f"unknown codec {codec!r}; expected one of {CODECS}") from None


class ValidationResult(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


PASS = ValidationResult(True)


@dataclass(frozen=True)
class EventTypeSerDe:
    base_key: str
    serializer: Callable[[Any], bytes]
    deserializer: Callable[[bytes], Any]
    validator: Validator | None = None
    codec: str = "custom"

    @classmethod
    def for_codec(cls, base_key: str, codec: str = NATIVE, validator: Validator | None = None) -> EventTypeSerDe:
        dumps, loads = codec_functions(codec)
        return cls(base_key, dumps, loads, validator, codec)

    def serialize(self, payload: Any) -> bytes:
        return self.serializer(payload)

    def deserialize(self, data: bytes) -> Any:
        return self.deserializer(data)


def validate(serde: EventTypeSerDe, payload: Any) -> ValidationResult:
    """Run the family validator; a raising validator counts as a failure."""
    if serde.validator is None:
        return PASS
    try:
        verdict = serde.validator(payload)
    except Exception as exc:  # validator bugs must not escape the transport boundary
        return ValidationResult(False, f"validator raised {type(exc).__name__}: {exc}")
    if verdict is None or verdict is True:
        return PASS
    if verdict is False:
        return ValidationResult(False, "rejected by validator")
    return ValidationResult(False, str(verdict))


class SerDeRegistry:
    """Maps base keys to serdes, falling back to a default codec.

    Registration happens during setup.  After :meth:`freeze` the registry is
    read-only and may be shared between threads without locking.
    """

    def __init__(self, default_codec: str = NATIVE):
        self._default_dumps, self._default_loads = codec_functions(default_codec)
        self.default_codec = default_codec
        self._entries: dict[str, EventTypeSerDe] = {}
        self._lock = threading.Lock()
        self._frozen = False

    @property
    def frozen(self) -> bool:
        return self._frozen

    def register(self, serde: EventTypeSerDe) -> SerDeRegistry:
        try:
            key = parse_key(serde.base_key)
        except MalformedKey as exc:
            raise MalformedKey(f"invalid base key: {exc}") from None
        if key.qualifiers:
            raise MalformedKey(f"base key {serde.base_key!r} must have exactly four tokens")
        with self._lock:
            if self._frozen:
                raise RegistryFrozen("registry is frozen")
            if serde.base_key in self._entries:
                raise DuplicateRegistration(serde.base_key)
            self._entries[serde.base_key] = serde
        return self

    def freeze(self) -> SerDeRegistry:
        self._frozen = True
        return self

    def resolve(self, key: EventTypeKey | str) -> EventTypeSerDe:
        base = key.base_key if isinstance(key, EventTypeKey) else key
        serde = self._entries.get(base)
        if serde is not None:
            return serde
        return EventTypeSerDe(base, self._default_dumps, self._default_loads, None, self.default_codec)

    def is_registered(self, base_key: str) -> bool:
        return base_key in self._entries

    def __contains__(self, base_key: str) -> bool:
        return base_key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())
