"""Structured event keys and the event envelope."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any

from .errors import InvalidToken, MalformedKey

_FORBIDDEN = frozenset(".*>")
_WHITESPACE = frozenset(" \t\r\n")


def check_token(token: str) -> str:
    if not isinstance(token, str) or not token:
        raise InvalidToken(f"token must be a non-empty string, got {token!r}")
    bad = (_FORBIDDEN | _WHITESPACE).intersection(token)
    if bad:
        raise InvalidToken(f"token {token!r} contains forbidden characters {sorted(bad)}")
    return token


@dataclass(frozen=True)
class EventTypeKey:
    """Routing identity of an event.

    The subject form (``full_key``) is
    ``space.super_family.family.name[.qualifier...]``.  Serialization and
    validation are resolved on ``base_key`` so qualifiers never change how a
    payload is handled.
    """

    space: str
    super_family: str
    family: str
    name: str
    qualifiers: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.qualifiers, tuple):
            object.__setattr__(self, "qualifiers", tuple(self.qualifiers))
        for token in (self.space, self.super_family, self.family, self.name, *self.qualifiers):
            check_token(token)

    @property
    def group_key(self) -> str:
        return f"{self.space}.{self.super_family}.{self.family}"

    @property
    def base_key(self) -> str:
        return f"{self.space}.{self.super_family}.{self.family}.{self.name}"

    @property
    def qualifiers_key(self) -> str:
        return ".".join(self.qualifiers)

    @property
    def full_key(self) -> str:
        if self.qualifiers:
            return f"{self.base_key}.{self.qualifiers_key}"
        return self.base_key

    def with_qualifiers(self, *qualifiers: str) -> EventTypeKey:
        return EventTypeKey(self.space, self.super_family, self.family, self.name, qualifiers)

    def __str__(self) -> str:
        return self.full_key


def make_key(
    space: str,
    super_family: str,
    family: str,
    name: str,
    qualifiers: Iterable[str] = (),
) -> EventTypeKey:
    return EventTypeKey(space, super_family, family, name, tuple(qualifiers))


def parse_key(full_key: str) -> EventTypeKey:
    """Inverse of ``EventTypeKey.full_key``; tokens past the fourth are qualifiers."""
    if not isinstance(full_key, str):
        raise MalformedKey(f"key must be a string, got {type(full_key).__name__}")
    tokens = full_key.split(".")
    if len(tokens) < 4:
        raise MalformedKey(f"{full_key!r} has {len(tokens)} tokens, need at least 4")
    try:
        return EventTypeKey(tokens[0], tokens[1], tokens[2], tokens[3], tuple(tokens[4:]))
    except InvalidToken as exc:
        raise MalformedKey(f"{full_key!r}: {exc}") from None


def _check_metadata(metadata: Mapping[str, str]) -> None:
    for k, v in metadata.items():
        if not isinstance(k, str) or not k or ":" in k or _WHITESPACE.intersection(k):
            raise ValueError(f"invalid metadata key {k!r}")
        if not isinstance(v, str) or "\r" in v or "\n" in v:
            raise ValueError(f"metadata value for {k!r} must be a single-line string")


@dataclass(frozen=True)
class Event:
    """A key, an opaque payload and string metadata.

    Metadata keys must be usable as transport header names (no whitespace,
    no ``:``) because they travel as headers on the distributed path.
    """

    key: EventTypeKey
    payload: Any = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        meta = dict(self.metadata)
        _check_metadata(meta)
        object.__setattr__(self, "metadata", MappingProxyType(meta))

    @property
    def subject(self) -> str:
        return self.key.full_key

    def with_metadata(self, extra: Mapping[str, str]) -> Event:
        return Event(self.key, self.payload, {**self.metadata, **extra})

    def __reduce__(self):
        return (Event, (self.key, self.payload, dict(self.metadata)))
