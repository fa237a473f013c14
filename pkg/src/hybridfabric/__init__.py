"""Local-first hybrid event fabric.

Typed in-process publish/subscribe, a NATS-backed distributed context using
the same subject vocabulary, and a bridge that moves events between them.
"""

from .bridge import Bridge, BridgeConfig, BridgeStats, BridgeStopReport, start_bridge
from .distributed import (
    DistributedContext,
    DistributedStopReport,
    PublishResult,
    RejectionRecord,
    RejectReason,
)
from .errors import *  # noqa: F403
from .families import EXAMPLE_FAMILIES, EventFamily, bind, example_registry, install, load_families
from .keys import Event, EventTypeKey, make_key, parse_key
from .local import DeliverySummary, PubSubContext
from .matcher import SubscriptionPattern, compile_pattern, matches
from .serde import EventTypeSerDe, SerDeRegistry, ValidationResult, validate
from .transport import LoopbackBroker, LoopbackTransport, TransportAdapter, WireEnvelope

__version__ = "0.1.0"
