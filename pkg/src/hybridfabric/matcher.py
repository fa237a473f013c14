"""NATS-style subject filters: ``*`` matches one token, a trailing ``>`` one or more."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import MalformedPattern

SINGLE = "*"
TAIL = ">"
_BAD_LITERAL = frozenset("*> \t\r\n")


@dataclass(frozen=True)
class SubscriptionPattern:
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return ".".join(self.tokens)

    @property
    def is_literal(self) -> bool:
        return SINGLE not in self.tokens and TAIL not in self.tokens

    def matches(self, subject: str) -> bool:
        return matches(self, subject)

    def __str__(self) -> str:
        return self.text


@lru_cache(maxsize=4096)
def compile_pattern(pattern: str) -> SubscriptionPattern:
    if not isinstance(pattern, str) or not pattern:
        raise MalformedPattern(f"pattern must be a non-empty string, got {pattern!r}")
    tokens = tuple(pattern.split("."))
    last = len(tokens) - 1
    for i, tok in enumerate(tokens):
        if not tok:
            raise MalformedPattern(f"{pattern!r}: empty token at position {i}")
        if tok == TAIL:
            if i != last:
                raise MalformedPattern(f"{pattern!r}: '>' is only allowed as the final token")
        elif tok != SINGLE and _BAD_LITERAL.intersection(tok):
            raise MalformedPattern(f"{pattern!r}: wildcard or whitespace inside token {tok!r}")
    return SubscriptionPattern(tokens)


def matches(pattern: SubscriptionPattern, subject: str) -> bool:
    ptoks = pattern.tokens
    stoks = subject.split(".")
    n = len(ptoks)
    if ptoks[-1] == TAIL:
        # '>' needs at least one remaining subject token
        if len(stoks) < n:
            return False
        n -= 1
    elif len(stoks) != n:
        return False
    for i in range(n):
        p = ptoks[i]
        if p != SINGLE and p != stoks[i]:
            return False
    return True
