from .base import DrainResult, Sink, TransportAdapter, WireEnvelope
from .loopback import LoopbackBroker, LoopbackTransport


def __getattr__(name):
    if name == "NatsTransport":
        from .nats_adapter import NatsTransport

        return NatsTransport
    raise AttributeError(name)


__all__ = [
    "DrainResult",
    "LoopbackBroker",
    "LoopbackTransport",
    "NatsTransport",
    "Sink",
    "TransportAdapter",
    "WireEnvelope",
]
