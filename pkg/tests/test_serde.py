import pytest

from hybridfabric import DuplicateRegistration, EventTypeSerDe, MalformedKey, SerDeRegistry, make_key, validate
from hybridfabric.errors import RegistryFrozen
from hybridfabric.families import CANONICAL_PAYLOADS
from hybridfabric.serde import CODECS


def status_validator(payload):
    return None if "status" in payload else "missing field: status"


def test_register_and_resolve():
    reg = SerDeRegistry()
    serde = EventTypeSerDe.for_codec("fabric.node.status.update", "json")
    reg.register(serde)
    assert reg.resolve(make_key("fabric", "node", "status", "update", ["node17", "10s"])) is serde
    assert reg.resolve(make_key("fabric", "node", "status", "update", ["other"])) is serde


def test_duplicate_registration():
    reg = SerDeRegistry()
    reg.register(EventTypeSerDe.for_codec("a.b.c.d"))
    with pytest.raises(DuplicateRegistration):
        reg.register(EventTypeSerDe.for_codec("a.b.c.d", "json"))


def test_register_needs_four_token_base_key():
    with pytest.raises(MalformedKey):
        SerDeRegistry().register(EventTypeSerDe.for_codec("a.b.c"))
    with pytest.raises(MalformedKey):
        SerDeRegistry().register(EventTypeSerDe.for_codec("a.b.c.d.e"))


def test_unregistered_falls_back_to_default_codec():
    reg = SerDeRegistry()
    before = len(reg)
    serde = reg.resolve(make_key("x", "y", "z", "w"))
    assert serde.codec == "native" and serde.validator is None
    assert len(reg) == before
    assert reg.resolve(make_key("x", "y", "z", "w", ["q"])) == serde


def test_frozen_registry_rejects_registration():
    reg = SerDeRegistry().freeze()
    with pytest.raises(RegistryFrozen):
        reg.register(EventTypeSerDe.for_codec("a.b.c.d"))


def test_validate_outcomes():
    serde = EventTypeSerDe.for_codec("a.b.c.d", validator=status_validator)
    assert validate(serde, {"status": "ok"}).ok
    verdict = validate(serde, {})
    assert not verdict.ok and verdict.reason == "missing field: status"
    assert validate(EventTypeSerDe.for_codec("a.b.c.d"), object()).ok


def test_raising_validator_is_a_failure_value():
    serde = EventTypeSerDe.for_codec("a.b.c.d", validator=lambda p: p["status"])
    verdict = validate(serde, {})
    assert not verdict.ok and "KeyError" in verdict.reason


@pytest.mark.parametrize("codec", CODECS)
@pytest.mark.parametrize("payload", list(CANONICAL_PAYLOADS.values()), ids=list(CANONICAL_PAYLOADS))
def test_codec_round_trip(codec, payload):
    serde = EventTypeSerDe.for_codec("a.b.c.d", codec)
    assert serde.deserialize(serde.serialize(payload)) == payload


def test_unknown_codec():
    with pytest.raises(ValueError):
        EventTypeSerDe.for_codec("a.b.c.d", "xml")
